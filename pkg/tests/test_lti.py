import numpy as np
import pytest
from helpers import random_lti, random_stable_matrix
from hypothesis import given
from hypothesis import strategies as st
from oracles import kron_lyapunov, quad_inner_lti, tf_inverse

from ltpmor.errors import (
    DefectivePolesError,
    NotHermitianError,
    SingularShiftError,
    SpectralOverlapError,
    UnstableSystemError,
)
from ltpmor.lti import (
    LtiSystem,
    eval_transfer,
    h2_inner_gramian,
    h2_inner_residue,
    h2_norm_gramian,
    lyapunov_factor,
    solve_lyapunov,
    solve_lyapunov_block_shifted,
)

seeds = st.integers(0, 2**32 - 1)


def scalar(a=-1.0):
    return LtiSystem(np.array([[a]]), np.array([[1.0]]), np.array([[1.0]]))


# ---------------------------------------------------------------- eval_transfer


def test_transfer_scalar_values():
    assert eval_transfer(scalar(), 0.0)[0, 0] == pytest.approx(1.0)
    assert eval_transfer(scalar(), 1j)[0, 0] == pytest.approx(0.5 - 0.5j)


def test_transfer_matches_explicit_inverse(rng):
    sys = random_lti(rng, 3)
    s = 2 + 1j
    ref = tf_inverse(sys.A, sys.B, sys.C, s)
    got = eval_transfer(sys, s)
    assert np.abs(got - ref).max() <= 1e-12 * np.abs(ref).max()


def test_transfer_at_pole_raises():
    with pytest.raises(SingularShiftError):
        eval_transfer(scalar(), -1.0)


@given(seeds, st.floats(-5, 5), st.floats(-5, 5))
def test_transfer_conjugate_symmetry(seed, x, y):
    sys = random_lti(np.random.default_rng(seed), 4, 2, 2)
    s = complex(x, y)
    assert np.allclose(eval_transfer(sys, np.conj(s)), np.conj(eval_transfer(sys, s)), rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------- Lyapunov


def test_lyapunov_scalar():
    X = solve_lyapunov(np.array([[-1.0]]), np.array([[1.0]]), "observability")
    assert X[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("mode", ["observability", "controllability"])
def test_lyapunov_matches_kronecker(rng, mode):
    A = random_stable_matrix(rng, 3, complex_=True)
    F = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    rhs = F @ F.conj().T
    X = solve_lyapunov(A, rhs, mode)
    assert np.abs(X - kron_lyapunov(A, rhs, mode)).max() <= 1e-10 * np.abs(X).max()


@given(seeds, st.integers(1, 8), st.sampled_from(["observability", "controllability"]))
def test_lyapunov_residual_and_hermitian(seed, n, mode):
    rng = np.random.default_rng(seed)
    A = random_stable_matrix(rng, n, complex_=bool(seed % 2))
    F = rng.standard_normal((n, n))
    rhs = F @ F.T
    X = solve_lyapunov(A, rhs, mode)
    R = A.conj().T @ X + X @ A + rhs if mode == "observability" else A @ X + X @ A.conj().T + rhs
    assert np.linalg.norm(R) <= 1e-10 * np.linalg.norm(rhs)
    assert np.abs(X - X.conj().T).max() <= 1e-13 * max(1.0, np.abs(X).max())


def test_lyapunov_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        solve_lyapunov(-np.eye(2), np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_lyapunov_spectral_overlap():
    A = np.diag([1.0, -1.0])
    with pytest.raises(SpectralOverlapError):
        solve_lyapunov(A, np.eye(2))


def test_block_shifted_single_shift_identical(rng):
    A = random_stable_matrix(rng, 4)
    F = rng.standard_normal((4, 4))
    rhs = F @ F.T
    assert np.array_equal(solve_lyapunov_block_shifted(A, [0.0], rhs), solve_lyapunov(A, rhs))


@pytest.mark.parametrize("mode", ["observability", "controllability"])
def test_block_shifted_matches_kronecker(rng, mode):
    n, w0 = 3, 2.0
    Q = random_stable_matrix(rng, n)
    shifts = [-1j * w0, 0.0, 1j * w0]
    F = rng.standard_normal((3 * n, 2)) + 1j * rng.standard_normal((3 * n, 2))
    rhs = F @ F.conj().T
    X = solve_lyapunov_block_shifted(Q, shifts, rhs, mode)
    Abig = np.kron(np.eye(3), Q) + np.kron(np.diag(shifts), np.eye(n))
    ref = kron_lyapunov(Abig, rhs, mode)
    assert np.abs(X - ref).max() <= 1e-10 * np.abs(ref).max()
    for i in range(3):
        blk = X[i * n : (i + 1) * n, i * n : (i + 1) * n]
        assert np.abs(blk - blk.conj().T).max() <= 1e-13 * np.abs(blk).max()


@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_block_shifted_exhaustive_small(seed, n, K):
    if K * n > 60:
        return
    rng = np.random.default_rng(seed)
    Q = random_stable_matrix(rng, n, complex_=True)
    shifts = 1j * rng.uniform(-3, 3, K)
    F = rng.standard_normal((K * n, 2)) + 1j * rng.standard_normal((K * n, 2))
    rhs = F @ F.conj().T
    X = solve_lyapunov_block_shifted(Q, shifts, rhs)
    ref = kron_lyapunov(np.kron(np.eye(K), Q) + np.kron(np.diag(shifts), np.eye(n)), rhs)
    assert np.abs(X - ref).max() <= 1e-10 * np.abs(ref).max()


def test_lyapunov_factor_residual(rng):
    A = random_stable_matrix(rng, 12, complex_=True)
    B = rng.standard_normal((12, 3))
    Z = lyapunov_factor(A, B)
    P = Z @ Z.conj().T
    assert np.linalg.norm(A @ P + P @ A.conj().T + B @ B.T) <= 1e-12 * np.linalg.norm(B @ B.T)


# ---------------------------------------------------------------- H2 norms


def test_h2_scalar():
    assert h2_norm_gramian(scalar()) == pytest.approx(1 / np.sqrt(2), rel=1e-14)


def test_h2_zero_input():
    sys = LtiSystem(-np.eye(3), np.zeros((3, 1)), np.ones((1, 3)))
    assert h2_norm_gramian(sys) == 0.0


def test_h2_unstable_raises():
    with pytest.raises(UnstableSystemError):
        h2_norm_gramian(scalar(0.5))
    with pytest.raises(UnstableSystemError):
        h2_norm_gramian(scalar(-1e-12))


@given(seeds, st.integers(1, 7), st.integers(1, 3), st.integers(1, 3), st.booleans())
def test_h2_paths_agree(seed, n, m, p, cplx):
    sys = random_lti(np.random.default_rng(seed), n, m, p, complex_=cplx)
    ref = h2_norm_gramian(sys, "controllability")
    assert h2_norm_gramian(sys, "observability") == pytest.approx(ref, rel=1e-9)
    assert h2_norm_gramian(sys, "factored") == pytest.approx(ref, rel=1e-9)
    assert np.sqrt(h2_inner_residue(sys, sys).real) == pytest.approx(ref, rel=1e-9)


@given(seeds)
def test_h2_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    sys = random_lti(rng, 5, 2, 2)
    S = rng.standard_normal((5, 5)) + 3 * np.eye(5)
    Si = np.linalg.inv(S)
    other = LtiSystem(S @ sys.A @ Si, S @ sys.B, sys.C @ Si)
    assert h2_norm_gramian(other) == pytest.approx(h2_norm_gramian(sys), rel=1e-9)


def test_residue_inner_first_order_pair():
    G, H = scalar(-1.0), scalar(-2.0)
    assert h2_inner_residue(G, H) == pytest.approx(1 / 3, rel=1e-12)
    ref = quad_inner_lti((G.A, G.B, G.C), (H.A, H.B, H.C))
    assert ref == pytest.approx(1 / 3, rel=1e-9)


def test_inner_products_match_quadrature_complex_mimo(rng):
    G = random_lti(rng, 3, 2, 2, complex_=True)
    H = random_lti(rng, 4, 2, 2, complex_=True)
    ref = quad_inner_lti((G.A, G.B, G.C), (H.A, H.B, H.C))
    assert h2_inner_residue(G, H) == pytest.approx(ref, rel=1e-8)
    assert h2_inner_gramian(G, H) == pytest.approx(ref, rel=1e-8)


def test_residue_zero_input():
    G = scalar()
    H = LtiSystem(-np.eye(2), np.zeros((2, 1)), np.ones((1, 2)))
    assert h2_inner_residue(G, H) == 0


def test_residue_refuses_defective():
    A = np.array([[-1.0, 1.0], [0.0, -1.0]])
    H = LtiSystem(A, np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(DefectivePolesError):
        h2_inner_residue(H, H)
