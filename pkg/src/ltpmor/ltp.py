"""Floquet-Fourier LTP systems and their H2 inner products and norms.

A system here is ``z' = Q z + b(t) u``, ``y = c(t)^T z`` with
``b(t) = sum_k b_k exp(+i k omega0 t)`` and likewise for ``c(t)``,
``k = -N..N``. Coefficients are stored as ``(2N+1, n)`` arrays in
ascending ``k``.

The k-th subsystem is

    g_k(s) = sum_l c_{k-l}^T ((s + i l omega0) I - Q)^{-1} b_l,

nonzero only for ``|k| <= 2N``. Three independent routes to the H2 norm
are provided: summing subsystem norms, the pole-residue double series
(systems sharing ``Q``), and the frequency-shifted block embedding with
Lyapunov traces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
from scipy.integrate import IntegrationWarning, quad

from ltpmor.errors import (
    DefectivePolesError,
    FrequencyMismatchError,
    ShapeError,
    SharedStateMatrixError,
    SpectralGapError,
)
from ltpmor.lti import (
    EIGVEC_COND_MAX,
    POLE_CLUSTER_TOL,
    LtiSystem,
    ShiftedLyapunovSolver,
    eval_transfer,
    h2_inner_residue,
    h2_norm_gramian,
    require_stable,
)


@dataclass(frozen=True, eq=False)
class FloquetFourierSystem:
    """SISO LTP system with constant ``Q`` and truncated Fourier ``b(t)``, ``c(t)``."""

    Q: np.ndarray
    omega0: float
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q))
        if np.issubdtype(Q.dtype, np.integer):
            Q = Q.astype(float)
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ShapeError(f"Q must be square, got {Q.shape}")
        b = np.asarray(self.b)
        c = np.asarray(self.c)
        if b.ndim == 1:
            b = b.reshape(1, -1)
        if c.ndim == 1:
            c = c.reshape(1, -1)
        if b.shape != c.shape or b.shape[1] != n or b.shape[0] % 2 != 1:
            raise ShapeError(
                f"b and c must both be (2N+1, {n}) arrays, got {b.shape} and {c.shape}"
            )
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def N(self) -> int:
        return (self.b.shape[0] - 1) // 2

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega0

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def b_coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.N:
            return np.zeros(self.n, dtype=self.b.dtype)
        return self.b[k + self.N]

    def c_coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.N:
            return np.zeros(self.n, dtype=self.c.dtype)
        return self.c[k + self.N]

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        """True when ``b(t)``, ``c(t)`` are real: ``b_{-k} = conj(b_k)``."""
        scale = max(1.0, np.abs(self.b).max(), np.abs(self.c).max())
        return bool(
            np.abs(self.b[::-1] - self.b.conj()).max() <= tol * scale
            and np.abs(self.c[::-1] - self.c.conj()).max() <= tol * scale
        )

    def b_at(self, t) -> np.ndarray:
        """``b(t)``; vectorized over ``t`` with output shape ``t.shape + (n,)``."""
        return synthesize(self.b, self.omega0, t)

    def c_at(self, t) -> np.ndarray:
        return synthesize(self.c, self.omega0, t)

    def with_order(self, N: int) -> FloquetFourierSystem:
        """Truncate (or zero-pad) the expansions to order ``N``."""
        b = _resize(self.b, N)
        c = _resize(self.c, N)
        return FloquetFourierSystem(self.Q, self.omega0, b, c)

    def __sub__(self, other: FloquetFourierSystem) -> FloquetFourierSystem:
        """Error system ``self - other`` realized with ``blkdiag(Q, Q~)``."""
        require_same_frequency(self, other)
        N = max(self.N, other.N)
        a, o = self.with_order(N), other.with_order(N)
        return FloquetFourierSystem(
            spla.block_diag(a.Q, o.Q),
            self.omega0,
            np.hstack([a.b, o.b]),
            np.hstack([a.c, -o.c]),
        )


def _resize(coeffs, N):
    cur = (coeffs.shape[0] - 1) // 2
    if N <= cur:
        return coeffs[cur - N : cur + N + 1].copy()
    out = np.zeros((2 * N + 1, coeffs.shape[1]), dtype=coeffs.dtype)
    out[N - cur : N + cur + 1] = coeffs
    return out


def synthesize(coeffs, omega0, t):
    """Evaluate ``sum_k coeffs[k] exp(i k omega0 t)``; real if the result is real."""
    coeffs = np.asarray(coeffs)
    N = (coeffs.shape[0] - 1) // 2
    t = np.asarray(t, dtype=float)
    k = np.arange(-N, N + 1)
    phase = np.exp(1j * omega0 * np.multiply.outer(t, k))
    out = phase @ coeffs
    if np.abs(out.imag).max(initial=0.0) <= 1e-13 * max(1.0, np.abs(out).max(initial=0.0)):
        return out.real
    return out


def fourier_coefficients(samples, N: int) -> np.ndarray:
    """Coefficients ``x_k`` of ``x(t) = sum_k x_k exp(+i k omega0 t)``, ``k = -N..N``.

    ``samples`` has shape ``(n_t, ...)`` on the uniform grid
    ``t_i = i T / n_t``. Requires ``N < n_t / 2`` so no Nyquist bin is split.
    """
    samples = np.asarray(samples)
    n_t = samples.shape[0]
    if not 2 * N < n_t:
        raise ShapeError(f"order N={N} needs more than {2 * N} samples, got {n_t}")
    F = np.fft.fft(samples, axis=0) / n_t
    idx = np.arange(-N, N + 1) % n_t
    return F[idx]


def require_same_frequency(G, H) -> None:
    if not np.isclose(G.omega0, H.omega0, rtol=1e-12, atol=0.0):
        raise FrequencyMismatchError(f"omega0 differs: {G.omega0} vs {H.omega0}")


def subsystem_support(sys: FloquetFourierSystem, k: int) -> range:
    """Indices ``l`` with both ``b_l`` and ``c_{k-l}`` present."""
    N = sys.N
    return range(max(-N, k - N), min(N, k + N) + 1)


def eval_subsystem(sys: FloquetFourierSystem, k: int, s: complex) -> complex:
    """``g_k(s) = sum_l c_{k-l}^T ((s + i l omega0) I - Q)^{-1} b_l``; zero for ``|k| > 2N``."""
    total = 0j
    for ell in subsystem_support(sys, k):
        lti = LtiSystem(sys.Q, sys.b_coeff(ell)[:, None], sys.c_coeff(k - ell)[None, :])
        total += eval_transfer(lti, s + 1j * ell * sys.omega0)[0, 0]
    return complex(total)


def subsystem_realization(sys: FloquetFourierSystem, k: int) -> LtiSystem | None:
    """Finite SISO realization of ``g_k`` with state matrix ``blkdiag(Q - i l omega0 I)``."""
    ells = list(subsystem_support(sys, k))
    if not ells:
        return None
    n = sys.n
    eye = np.eye(n)
    A = spla.block_diag(*[sys.Q - 1j * ell * sys.omega0 * eye for ell in ells])
    B = np.concatenate([sys.b_coeff(ell) for ell in ells])[:, None]
    C = np.concatenate([sys.c_coeff(k - ell) for ell in ells])[None, :]
    return LtiSystem(A, B, C)


def nontrivial_subsystems(sys: FloquetFourierSystem) -> range:
    return range(-2 * sys.N, 2 * sys.N + 1)


def h2_norm_subsystem_sum(sys: FloquetFourierSystem) -> float:
    """``sqrt(sum_k ||g_k||^2)`` with each term from a Gramian of its realization."""
    require_stable(sys.Q, "Q")
    total = 0.0
    for k in nontrivial_subsystems(sys):
        real = subsystem_realization(sys, k)
        if real is not None:
            total += h2_norm_gramian(real) ** 2
    return float(np.sqrt(total))


def h2_inner_subsystem_sum(G: FloquetFourierSystem, H: FloquetFourierSystem) -> complex:
    """``<G, H> = sum_k <g_k, h_k>``, each term by the LTI residue formula."""
    require_same_frequency(G, H)
    require_stable(G.Q, "G.Q")
    require_stable(H.Q, "H.Q")
    N = max(G.N, H.N)
    Gp, Hp = G.with_order(N), H.with_order(N)
    total = 0j
    for k in range(-2 * N, 2 * N + 1):
        gk = subsystem_realization(Gp, k)
        hk = subsystem_realization(Hp, k)
        total += h2_inner_residue(gk, hk)
    return complex(total)


@dataclass(frozen=True)
class PoleResidueResult:
    value: complex
    remainder: float
    ell_max: int


def _check_spectral_gap(lam, omega0):
    worst = np.abs(lam.imag).max(initial=0.0)
    if not worst < omega0:
        raise SpectralGapError(f"max |Im lambda(Q)| = {worst:.6g} is not below omega0 = {omega0:.6g}")


def h2_inner_pole_residue(
    G: FloquetFourierSystem, H: FloquetFourierSystem, ell_max: int = 200
) -> PoleResidueResult:
    """Pole-residue series ``sum_k sum_l sum_j conj(g_k(-conj(p))) res[h_k, p]``.

    ``p = lambda_j(Q) - i l omega0`` runs over the poles of ``h_k``; the
    ``l`` series is truncated at ``|l| <= ell_max`` and the magnitude of
    the outermost retained shell is reported as a remainder estimate.
    Both systems must share ``Q`` and satisfy ``max |Im lambda_j(Q)| < omega0``.
    """
    require_same_frequency(G, H)
    if G.Q.shape != H.Q.shape or not np.allclose(G.Q, H.Q, rtol=1e-12, atol=1e-14):
        raise SharedStateMatrixError("pole-residue inner product needs a shared Q")
    require_stable(H.Q, "Q")
    w0 = H.omega0
    lam, X = np.linalg.eig(H.Q.astype(complex))
    _check_spectral_gap(lam, w0)
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise DefectivePolesError(f"Q is numerically defective (eigenvector cond = {cond:.3e})")
    N = max(G.N, H.N)
    L = min(N, ell_max)
    ells = np.arange(-L, L + 1)
    poles = (lam[None, :] - 1j * w0 * ells[:, None]).ravel()
    if len(poles) > 1:
        rho = np.abs(poles).max()
        d = np.abs(poles[:, None] - poles[None, :]) + np.diag(np.full(len(poles), np.inf))
        if d.min() <= POLE_CLUSTER_TOL * rho:
            raise DefectivePolesError("poles of different shells coincide")

    Gp, Hp = G.with_order(N), H.with_order(N)
    # modal coordinates: b -> X^{-1} b, c -> X^T c
    gb = np.linalg.solve(X, Gp.b.T).T
    gc = Gp.c @ X
    hb = np.linalg.solve(X, Hp.b.T).T
    hc = Hp.c @ X

    def g_eval(k, s):
        # g_k(s) in modal form
        total = 0j
        for ell in range(max(-N, k - N), min(N, k + N) + 1):
            total += np.sum(gc[k - ell + N] * gb[ell + N] / (s + 1j * ell * w0 - lam))
        return total

    total = 0j
    shell = np.zeros(L + 1)
    for k in range(-2 * N, 2 * N + 1):
        for ell in range(max(-L, k - N), min(L, k + N) + 1):
            res = hc[k - ell + N] * hb[ell + N]
            for j in range(len(lam)):
                if res[j] == 0:
                    continue
                p = lam[j] - 1j * ell * w0
                term = np.conj(g_eval(k, -np.conj(p))) * res[j]
                total += term
                shell[abs(ell)] += abs(term)
    return PoleResidueResult(complex(total), float(shell[L]) if L < N else 0.0, int(L))


def zhou_hagiwara_embedding(sys: FloquetFourierSystem, N_e: int) -> LtiSystem:
    """Explicit block embedding at order ``N_e``.

    State matrix ``blkdiag(Q - i l omega0 I)`` for ``l = -N_e..N_e`` (the
    sign matches the ``exp(+i k omega0 t)`` convention), stacked ``b_l``
    as input and the banded block-Toeplitz output with block ``(k, l)``
    equal to ``c_{k-l}^T`` for ``k = -N_e-N..N_e+N``.
    """
    N, n = sys.N, sys.n
    ells = np.arange(-N_e, N_e + 1)
    ks = np.arange(-N_e - N, N_e + N + 1)
    eye = np.eye(n)
    A = spla.block_diag(*[sys.Q - 1j * ell * sys.omega0 * eye for ell in ells])
    B = np.concatenate([sys.b_coeff(ell) for ell in ells])[:, None]
    C = np.zeros((len(ks), len(ells) * n), dtype=complex)
    for i, k in enumerate(ks):
        for j, ell in enumerate(ells):
            if abs(k - ell) <= N:
                C[i, j * n : (j + 1) * n] = sys.c_coeff(k - ell)
    return LtiSystem(A, B, C)


@dataclass(frozen=True)
class ZhouHagiwaraResult:
    value: float
    v_path: float
    w_path: float | None
    discrepancy: float | None
    N_e: int


def _autocorrelation(c, d):
    """``R_d = sum_j conj(c_j) c_{j+d}^T`` for coefficient rows ``c``."""
    K = c.shape[0]
    if d >= 0:
        return c[: K - d].conj().T @ c[d:]
    return c[-d:].conj().T @ c[: K + d]


def h2_norm_zhou_hagiwara(
    sys: FloquetFourierSystem, N_e: int, paths: str = "both"
) -> ZhouHagiwaraResult:
    """H2 norm from Lyapunov traces of the order-``N_e`` block embedding.

    The Schur form of ``Q`` is computed once and reused for every shifted
    block. Because the shifts form the ladder ``-i l omega0`` and the output
    Gram matrix is block Toeplitz, block ``(l, m)`` of the observability
    solution depends on ``l - m`` only, so ``4 min(N, N_e) + 1`` Sylvester
    solves suffice for the ``V`` path. The ``W`` path (controllability)
    is solved blockwise and reported with its relative discrepancy.
    """
    if N_e < 0:
        raise ValueError("embedding order must be nonnegative")
    require_stable(sys.Q, "Q")
    solver = ShiftedLyapunovSolver(sys.Q)
    w0 = sys.omega0
    L = min(sys.N, N_e)
    Bm = np.stack([sys.b_coeff(ell) for ell in range(-L, L + 1)], axis=1).astype(complex)
    c = sys.c
    K = 2 * L + 1
    R = {d: _autocorrelation(c, d) for d in range(-2 * L, 2 * L + 1)}

    v_trace = 0j
    for d in range(0, 2 * L + 1):
        # block (l, m) with l - m = d: conj(mu_l) + mu_m = i d omega0
        Vd = solver.solve(-1j * d * w0, 0.0, R[d], "observability")
        M = Bm.conj().T @ Vd @ Bm
        contrib = np.trace(M, offset=-d) if d else np.trace(M)
        v_trace += contrib if d == 0 else 2 * contrib.real
    v_val = float(np.sqrt(max(v_trace.real, 0.0)))

    w_val = disc = None
    if paths == "both":
        w_trace = 0j
        for i in range(K):
            li = i - L
            for j in range(i, K):
                lj = j - L
                rhs = np.outer(Bm[:, i], Bm[:, j].conj())
                Wij = solver.solve(-1j * li * w0, -1j * lj * w0, rhs, "controllability")
                term = np.trace(Wij @ R[lj - li])
                w_trace += term if i == j else 2 * term.real
        w_val = float(np.sqrt(max(w_trace.real, 0.0)))
        disc = abs(v_val - w_val) / max(v_val, np.finfo(float).tiny) if v_val else abs(w_val)
    elif paths != "v":
        raise ValueError(f"paths must be 'both' or 'v', got {paths!r}")
    return ZhouHagiwaraResult(v_val, v_val, w_val, disc, int(N_e))


def _modal_coefficients(sys: FloquetFourierSystem, N: int):
    lam, S = np.linalg.eig(sys.Q.astype(complex))
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise DefectivePolesError(f"eigenvector matrix of Q is ill-conditioned (cond = {cond:.3e})")
    padded = sys.with_order(N)
    beta = np.linalg.solve(S, padded.b.T.astype(complex)).T
    gamma = padded.c @ S
    return lam, beta, gamma


def h2_distance_frequency(
    G: FloquetFourierSystem, H: FloquetFourierSystem | None = None, rtol: float = 1e-10
) -> float:
    """``||G - H||_H2`` (or ``||G||`` when ``H`` is None) by frequency quadrature.

    Integrates ``sum_k |g_k(iw) - h_k(iw)|^2`` over the real line with
    adaptive Gauss-Kronrod after the substitution ``w = alpha tan(theta)``.
    The difference is formed pointwise from modal expansions of each
    system, so small distances between large systems keep full relative
    accuracy (down to about ``eps * cond(eigenvectors) * ||G||``), unlike
    Lyapunov traces of an error realization. The sum over ``k`` is done
    by FFT convolution of the coefficient sequences and Parseval.
    """
    require_stable(G.Q, "Q")
    parts = [G]
    if H is not None:
        require_same_frequency(G, H)
        require_stable(H.Q, "Q of H")
        parts.append(H)
    N = max(p.N for p in parts)
    w0 = G.omega0
    lams, betas, gammas = [], [], []
    for sign, p in zip((1.0, -1.0), parts):
        lam, beta, gamma = _modal_coefficients(p, N)
        lams.append(lam)
        betas.append(beta)
        gammas.append(sign * gamma)
    lam = np.concatenate(lams)
    beta = np.concatenate(betas, axis=1)
    gamma = np.concatenate(gammas, axis=1)
    if not np.any(beta) or not np.any(gamma):
        return 0.0
    M = 1 << int(np.ceil(np.log2(4 * N + 1)))
    gamma_hat = np.fft.fft(gamma, n=M, axis=0)
    ell = np.arange(-N, N + 1)[:, None]

    def f(w):
        terms = beta / (1j * (w + ell * w0) - lam[None, :])
        total = np.sum(gamma_hat * np.fft.fft(terms, n=M, axis=0), axis=1)
        return float(np.vdot(total, total).real) / M

    mags = np.abs(lam)
    alpha = float(np.sqrt(max(mags.min(), 1e-300) * max(mags.max(), 1e-300)))

    def h(theta):
        c = np.cos(theta)
        return f(alpha * np.tan(theta)) * alpha / (c * c)

    symmetric = all(np.isrealobj(p.Q) or not np.any(np.imag(p.Q)) for p in parts) and all(
        p.is_conjugate_symmetric() for p in parts
    )
    lo, hi = (0.0 if symmetric else -np.pi / 2), np.pi / 2
    light = lam[np.abs(lam.real) < 0.2 * np.abs(lam)]
    peaks = (light.imag[:, None] - np.arange(-N, N + 1)[None, :] * w0).ravel()
    pts = np.unique(np.round(np.arctan(peaks / alpha), 14))
    pts = pts[(pts > lo) & (pts < hi)]
    if len(pts) > 2000:
        pts = pts[:: int(np.ceil(len(pts) / 2000))]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, abserr = quad(
            h,
            lo,
            hi,
            points=pts if len(pts) else None,
            epsabs=0.0,
            epsrel=rtol,
            limit=max(500, 4 * len(pts)),
        )
    # roundoff stops quad short of rtol near the eps*||G|| floor; only a
    # large estimated error is worth reporting
    floor = (1e-14 * np.linalg.norm(beta) * np.linalg.norm(gamma)) ** 2 / alpha
    if abserr > max(1e-6 * abs(val), floor):
        warnings.warn(
            f"frequency quadrature error estimate {abserr:.2e} for integral {val:.2e}",
            RuntimeWarning,
            stacklevel=2,
        )
    if symmetric:
        val *= 2
    return float(np.sqrt(max(val, 0.0) / (2 * np.pi)))


def steady_state_harmonics(sys: FloquetFourierSystem, omega: float) -> list[tuple[float, complex]]:
    """Output harmonics ``(omega + k omega0, g_k(i omega))`` for input ``exp(i omega t)``."""
    require_stable(sys.Q, "Q")
    return [
        (omega + k * sys.omega0, eval_subsystem(sys, k, 1j * omega))
        for k in nontrivial_subsystems(sys)
    ]
