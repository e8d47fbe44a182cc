"""Dense LTI state-space systems, transfer functions and H2 machinery.

Everything here works in complex arithmetic; real systems are embedded
as complex ones. The Lyapunov solvers are Bartels-Stewart on a complex
Schur form, which is computed once per state matrix and reused for any
number of diagonal shifts ``Q + mu I``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla
from scipy.linalg.lapack import ztrsyl

from ltpmor.errors import (
    DefectivePolesError,
    NotHermitianError,
    ShapeError,
    SingularShiftError,
    SpectralOverlapError,
    UnstableSystemError,
)

STABILITY_MARGIN = 1e-10
POLE_CLUSTER_TOL = 1e-8
EIGVEC_COND_MAX = 1e12


def _as_matrix(x, name):
    a = np.asarray(x)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.number):
        raise ShapeError(f"{name} must be numeric")
    if np.issubdtype(a.dtype, np.integer):
        a = a.astype(float)
    return a


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Continuous-time state-space system ``x' = Ax + Bu, y = Cx``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ShapeError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise ShapeError(f"C has {C.shape[1]} columns, expected {n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_real(self) -> bool:
        return not any(np.iscomplexobj(M) and np.any(M.imag) for M in (self.A, self.B, self.C))

    def __sub__(self, other: LtiSystem) -> LtiSystem:
        """Error system ``self - other`` in block-diagonal realization."""
        if (self.m, self.p) != (other.m, other.p):
            raise ShapeError("error system needs matching input/output dimensions")
        return LtiSystem(
            spla.block_diag(self.A, other.A),
            np.vstack([self.B, other.B]),
            np.hstack([self.C, -other.C]),
        )

    def spectrum(self) -> Spectrum:
        return Spectrum.of(self.A)

    def is_stable(self, margin: float = STABILITY_MARGIN) -> bool:
        return is_stable_matrix(self.A, margin)


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    right: np.ndarray | None = field(default=None, repr=False)
    left: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def of(cls, A) -> Spectrum:
        lam, X = np.linalg.eig(np.asarray(A))
        return cls(lam, X, None)


def is_stable_matrix(A, margin: float = STABILITY_MARGIN) -> bool:
    A = np.asarray(A)
    if A.size == 0:
        return True
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


def require_stable(A, what: str = "system", margin: float = STABILITY_MARGIN) -> None:
    A = np.asarray(A)
    if A.size == 0:
        return
    worst = np.max(np.linalg.eigvals(A).real)
    if not worst < -margin:
        raise UnstableSystemError(
            f"{what} is not stable: max Re(lambda) = {worst:.3e} >= {-margin:.1e}"
        )


def eval_transfer(sys: LtiSystem, s: complex) -> np.ndarray:
    """Evaluate ``C (sI - A)^{-1} B`` at the complex point ``s``.

    Raises
    ------
    SingularShiftError
        If ``sI - A`` is numerically singular.
    """
    n = sys.n
    M = s * np.eye(n, dtype=complex) - sys.A
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.LinAlgWarning)
        lu, piv = spla.lu_factor(M, check_finite=True)
    d = np.abs(np.diag(lu))
    if not d.min() > n * np.finfo(float).eps * np.abs(M).max():
        raise SingularShiftError(f"sI - A is singular at s = {s}")
    X = spla.lu_solve((lu, piv), sys.B.astype(complex))
    return sys.C @ X


class ShiftedLyapunovSolver:
    """Lyapunov/Sylvester solver for shifted copies of one state matrix.

    The complex Schur form ``Q = U T U^*`` is computed once on
    construction; each call to :meth:`solve` is a triangular Sylvester
    back-substitution on ``T + mu I``.
    """

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ShapeError(f"Q must be square, got {Q.shape}")
        self.Q = Q
        self.n = Q.shape[0]
        self.T, self.U = spla.schur(Q, output="complex")
        self.diag = np.diag(self.T).copy()
        self._scale = max(1.0, np.abs(self.diag).max(initial=0.0))

    def solve(self, mu_left: complex, mu_right: complex, rhs, mode: str = "observability"):
        """Solve one shifted equation.

        ``mode="observability"``: ``(Q+mu_l)^* X + X (Q+mu_r) + rhs = 0``.
        ``mode="controllability"``: ``(Q+mu_l) X + X (Q+mu_r)^* + rhs = 0``.
        """
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape != (self.n, self.n):
            raise ShapeError(f"rhs must be {self.n}x{self.n}, got {rhs.shape}")
        n = self.n
        if mode == "observability":
            sums = np.conj(self.diag + mu_left)[:, None] + (self.diag + mu_right)[None, :]
            trana, tranb = "C", "N"
        elif mode == "controllability":
            sums = (self.diag + mu_left)[:, None] + np.conj(self.diag + mu_right)[None, :]
            trana, tranb = "N", "C"
        else:
            raise ValueError(f"unknown mode {mode!r}")
        gap = np.abs(sums).min()
        if gap <= 1e-13 * (self._scale + abs(mu_left) + abs(mu_right)):
            raise SpectralOverlapError(f"spectral overlap: min |lambda_i + lambda_j| = {gap:.3e}")
        U = self.U
        c = -(U.conj().T @ rhs @ U)
        eye = np.eye(n, dtype=complex)
        y, scale, info = ztrsyl(
            self.T + mu_left * eye, self.T + mu_right * eye, c, trana=trana, tranb=tranb, isgn=1
        )
        if info < 0:
            raise ValueError(f"ztrsyl argument {-info} invalid")
        if info == 1:
            raise SpectralOverlapError("Sylvester operator nearly singular (ztrsyl info=1)")
        return U @ (y / scale) @ U.conj().T


def _check_hermitian(rhs, tol=1e-12):
    rhs = np.asarray(rhs)
    scale = max(1.0, np.abs(rhs).max(initial=0.0))
    if np.abs(rhs - rhs.conj().T).max(initial=0.0) > tol * scale:
        raise NotHermitianError("right-hand side is not Hermitian")


def solve_lyapunov(A, rhs, mode: str = "observability") -> np.ndarray:
    """Solve ``A^* X + X A + rhs = 0`` (or the controllability dual).

    ``rhs`` must be Hermitian; the returned solution is Hermitian to
    machine precision.
    """
    A = np.asarray(A)
    rhs = np.asarray(rhs)
    if rhs.shape != A.shape:
        raise ShapeError(f"rhs shape {rhs.shape} does not match A {A.shape}")
    _check_hermitian(rhs)
    X = ShiftedLyapunovSolver(A).solve(0.0, 0.0, rhs, mode)
    return 0.5 * (X + X.conj().T)


def solve_lyapunov_block_shifted(Q, shifts, rhs, mode: str = "observability") -> np.ndarray:
    """Lyapunov equation with state matrix ``blkdiag(Q + mu_1 I, ..., Q + mu_K I)``.

    ``Q`` is factored once; block ``(i, j)`` of the solution solves the
    Sylvester equation with shifts ``mu_i`` and ``mu_j``. Only the upper
    block triangle is solved, the lower one follows by Hermitian symmetry.
    """
    Q = np.asarray(Q)
    shifts = np.atleast_1d(np.asarray(shifts, dtype=complex))
    n = Q.shape[0]
    K = len(shifts)
    rhs = np.asarray(rhs)
    if rhs.shape != (K * n, K * n):
        raise ShapeError(f"rhs must be {K * n}x{K * n}, got {rhs.shape}")
    _check_hermitian(rhs)
    solver = ShiftedLyapunovSolver(Q)
    X = np.empty((K * n, K * n), dtype=complex)
    for i in range(K):
        si = slice(i * n, (i + 1) * n)
        for j in range(i, K):
            sj = slice(j * n, (j + 1) * n)
            blk = solver.solve(shifts[i], shifts[j], rhs[si, sj], mode)
            if i == j:
                blk = 0.5 * (blk + blk.conj().T)
            X[si, sj] = blk
            if j != i:
                X[sj, si] = blk.conj().T
    return X


def lyapunov_factor(A, B) -> np.ndarray:
    """Factor ``Z`` with ``P = Z Z^*`` solving ``A P + P A^* + B B^* = 0``.

    Hammarling's method on the complex Schur form: the triangular factor is
    built one column at a time from the bottom-right corner, so ``P`` is
    never formed. ``A`` must be stable.

    Returns
    -------
    Z : (n, n) complex ndarray
    """
    A = np.asarray(A, dtype=complex)
    require_stable(A)
    T, U = spla.schur(A, output="complex")
    Bc = U.conj().T @ np.asarray(B, dtype=complex)
    n = T.shape[0]
    R = np.zeros((n, n), dtype=complex)
    for j in range(n - 1, -1, -1):
        lam = T[j, j]
        beta = Bc[j].copy()
        nb = np.linalg.norm(beta)
        if nb == 0.0:
            continue
        nu = nb / np.sqrt(-2.0 * lam.real)
        R[j, j] = nu
        if j == 0:
            break
        S1 = T[:j, :j] + np.conj(lam) * np.eye(j)
        rhs = T[:j, j] * nu**2 + Bc[:j] @ beta.conj()
        u = -spla.solve_triangular(S1, rhs) / nu
        R[:j, j] = u
        Bc[:j] -= np.outer(u, beta) / nu
    return U @ R


def h2_norm_gramian(sys: LtiSystem, path: str = "controllability") -> float:
    """H2 norm from a Gramian: ``sqrt(trace(C P C^*))`` or ``sqrt(trace(B^* Q B))``.

    ``path="factored"`` uses a Cholesky-type factor of the Gramian
    (:func:`lyapunov_factor`) and returns ``||C Z||_F``. The trace paths
    lose everything below about ``sqrt(eps) * scale`` when the system is a
    difference of two close systems; the factored path resolves such
    errors down to about ``eps * scale``.
    """
    if not np.any(sys.B) or not np.any(sys.C):
        return 0.0
    require_stable(sys.A)
    if path == "factored":
        if sys.m <= sys.p:
            return float(np.linalg.norm(sys.C @ lyapunov_factor(sys.A, sys.B)))
        return float(np.linalg.norm(sys.B.conj().T @ lyapunov_factor(sys.A.conj().T, sys.C.conj().T)))
    if path == "controllability":
        P = solve_lyapunov(sys.A, sys.B @ sys.B.conj().T, "controllability")
        val = np.trace(sys.C @ P @ sys.C.conj().T).real
    elif path == "observability":
        Qo = solve_lyapunov(sys.A, sys.C.conj().T @ sys.C, "observability")
        val = np.trace(sys.B.conj().T @ Qo @ sys.B).real
    else:
        raise ValueError(f"unknown path {path!r}")
    return float(np.sqrt(max(val, 0.0)))


def h2_inner_gramian(G: LtiSystem, H: LtiSystem) -> complex:
    """``<G, H>`` via the cross Gramian Sylvester equation.

    ``X`` solves ``A_H X + X A_G^* + B_H B_G^* = 0`` and
    ``<G, H> = trace(C_H X C_G^*)``.
    """
    require_stable(G.A, "G")
    require_stable(H.A, "H")
    X = spla.solve_sylvester(
        H.A.astype(complex), G.A.conj().T.astype(complex), -(H.B @ G.B.conj().T)
    )
    return complex(np.trace(H.C @ X @ G.C.conj().T))


def pole_residues(sys: LtiSystem):
    """Poles and rank-one residue factors ``c_k b_k^T`` of a diagonalizable system.

    Returns ``(poles, c, b)`` with ``c`` of shape ``(p, n)`` and ``b`` of
    shape ``(n, m)``: the residue at ``poles[k]`` is ``outer(c[:, k], b[k])``.
    """
    lam, X = np.linalg.eig(sys.A.astype(complex))
    n = len(lam)
    if n > 1:
        rho = max(np.abs(lam).max(), np.finfo(float).tiny)
        d = np.abs(lam[:, None] - lam[None, :]) + np.diag(np.full(n, np.inf))
        if d.min() <= POLE_CLUSTER_TOL * rho:
            raise DefectivePolesError(
                f"poles are clustered: min distance {d.min():.3e} vs radius {rho:.3e}"
            )
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise DefectivePolesError(f"eigenvector matrix is ill-conditioned (cond = {cond:.3e})")
    b = np.linalg.solve(X, sys.B.astype(complex))
    c = sys.C @ X
    return lam, c, b


def h2_inner_residue(G: LtiSystem, H: LtiSystem) -> complex:
    """``<G, H> = sum_k c_k^T conj(G(-conj(mu_k))) b_k`` over the poles of ``H``.

    Conjugation follows the sesquilinear inner product
    ``(1/2pi) int trace(conj(G(iw)) H(iw)^T) dw``; for real systems it
    reduces to ``sum_k c_k^T G(-mu_k) b_k``.
    """
    if (G.m, G.p) != (H.m, H.p):
        raise ShapeError("G and H must have the same input/output dimensions")
    if not np.any(H.B) or not np.any(H.C):
        return 0j
    require_stable(G.A, "G")
    require_stable(H.A, "H")
    mu, c, b = pole_residues(H)
    total = 0j
    for k in range(len(mu)):
        Gk = np.conj(eval_transfer(G, -np.conj(mu[k])))
        total += c[:, k] @ Gk @ b[k]
    return complex(total)
