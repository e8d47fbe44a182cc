"""Random system factories shared by the test modules."""

import numpy as np

from ltpmor.lti import LtiSystem
from ltpmor.ltp import FloquetFourierSystem

ACCEPTANCE_RESULTS = {}
ACCEPTANCE_CRITERIA = range(1, 10)


def record(criterion, ok, detail):
    """Store one part of an acceptance criterion; all parts must pass."""
    ACCEPTANCE_RESULTS.setdefault(criterion, []).append((bool(ok), detail))


def random_stable_matrix(rng, n, margin=0.3, complex_=False):
    A = rng.standard_normal((n, n))
    if complex_:
        A = A + 1j * rng.standard_normal((n, n))
    return A - (np.linalg.eigvals(A).real.max() + margin) * np.eye(n)


def random_lti(rng, n, m=1, p=1, complex_=False):
    A = random_stable_matrix(rng, n, complex_=complex_)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    if complex_:
        B = B + 1j * rng.standard_normal((n, m))
        C = C + 1j * rng.standard_normal((p, n))
    return LtiSystem(A, B, C)


def real_coeffs(rng, N, n):
    """Coefficient rows of a real periodic vector: ``x_{-k} = conj(x_k)``."""
    x = np.zeros((2 * N + 1, n), dtype=complex)
    x[N] = rng.standard_normal(n)
    for k in range(1, N + 1):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x[N + k], x[N - k] = v, np.conj(v)
    return x


def gapped_q(rng, n, omega0):
    """Real Hurwitz ``Q`` with simple eigenvalues and ``max |Im lambda| < omega0``."""
    lam = []
    while len(lam) < n:
        re = -rng.uniform(0.2, 3.0)
        if n - len(lam) >= 2 and rng.random() < 0.5:
            im = rng.uniform(0.05, 0.9) * omega0
            lam += [re + 1j * im, re - 1j * im]
        else:
            lam.append(re)
    D = np.zeros((n, n))
    i = 0
    while i < n:
        if lam[i].imag:
            D[i : i + 2, i : i + 2] = [[lam[i].real, lam[i].imag], [-lam[i].imag, lam[i].real]]
            i += 2
        else:
            D[i, i] = lam[i].real
            i += 1
    S = rng.standard_normal((n, n)) + 2 * np.eye(n)
    return S @ D @ np.linalg.inv(S)


def random_ltp(rng, n, N, omega0=1.0, gap=False, real=True):
    Q = gapped_q(rng, n, omega0) if gap else random_stable_matrix(rng, n)
    if real:
        b, c = real_coeffs(rng, N, n), real_coeffs(rng, N, n)
    else:
        shape = (2 * N + 1, n)
        b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return FloquetFourierSystem(Q, omega0, b, c)
