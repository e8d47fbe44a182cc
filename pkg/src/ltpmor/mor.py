"""Projection-based reduction of Floquet-Fourier LTP systems.

The periodic system is lifted to an LTI MIMO system whose inputs are the
Fourier coefficients of ``b(t)`` and whose outputs are those of ``c(t)``.
Any LTI reduction of the lift (IRKA by default) gives a projection pair
``(V, W)``; applying it coefficient-wise yields a reduced LTP system whose
H2 error is at most ``sqrt(2N+1)`` times the lifted error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ltpmor.errors import ConvergenceError, RankDeficiencyError, ShapeError, UnstableSystemError
from ltpmor.lti import (
    LtiSystem,
    eval_transfer,
    h2_norm_gramian,
    is_stable_matrix,
    require_stable,
    solve_lyapunov,
)
from ltpmor.ltp import FloquetFourierSystem, h2_distance_frequency, h2_norm_zhou_hagiwara


@dataclass(frozen=True, eq=False)
class LiftedMimo:
    """LTI system ``(Q, [b_-N .. b_N], [c_-N .. c_N]^T)`` plus its origin."""

    system: LtiSystem
    omega0: float
    N: int


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Bases with ``W^T V = I``; reduced matrices are ``W^T A V``, ``W^T B``, ``C V``."""

    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        if self.V.shape != self.W.shape:
            raise ShapeError(f"V {self.V.shape} and W {self.W.shape} differ")

    @property
    def r(self) -> int:
        return self.V.shape[1]

    def biorthogonality_error(self) -> float:
        return float(np.linalg.norm(self.W.T @ self.V - np.eye(self.r)))


def lift_to_mimo(sys: FloquetFourierSystem) -> LiftedMimo:
    return LiftedMimo(LtiSystem(sys.Q, sys.b.T.copy(), sys.c.copy()), sys.omega0, sys.N)


def unlift_to_ltp(H: LiftedMimo | LtiSystem, omega0: float | None = None) -> FloquetFourierSystem:
    """Read an LTI system with ``2N+1`` inputs and outputs back as an LTP system."""
    if isinstance(H, LiftedMimo):
        omega0 = H.omega0 if omega0 is None else omega0
        H = H.system
    if omega0 is None:
        raise ValueError("omega0 is required when unlifting a bare LtiSystem")
    if H.m % 2 != 1 or H.p != H.m:
        raise ShapeError(f"need an odd, equal number of inputs and outputs, got {H.m} and {H.p}")
    return FloquetFourierSystem(H.A, omega0, H.B.T.copy(), H.C.copy())


def real_io_transform(N: int) -> np.ndarray:
    """Unitary ``U`` with ``B U`` and ``U^T C`` real for conjugate-symmetric coefficients.

    Column ``0`` picks ``k = 0``; for ``k > 0`` the pair of columns holds
    ``(e_k + e_-k)/sqrt2`` and ``i (e_k - e_-k)/sqrt2``. H2 norms of the
    lifted system are unchanged by the transform.
    """
    K = 2 * N + 1
    U = np.zeros((K, K), dtype=complex)
    U[N, 0] = 1.0
    h = 1 / np.sqrt(2)
    for k in range(1, N + 1):
        U[N + k, 2 * k - 1] = U[N - k, 2 * k - 1] = h
        U[N + k, 2 * k] = 1j * h
        U[N - k, 2 * k] = -1j * h
    return U


def _realified_lift(G: FloquetFourierSystem, H: LtiSystem) -> LtiSystem:
    """Real equivalent of the lift when ``G`` has real ``Q`` and real ``b(t)``, ``c(t)``."""
    if np.iscomplexobj(G.Q) and np.any(G.Q.imag) or not G.is_conjugate_symmetric():
        return H
    U = real_io_transform(G.N)
    return LtiSystem(G.Q.real, (H.B @ U).real, (U.T @ H.C).real)


def petrov_galerkin(H: LtiSystem, V, W):
    """Project ``H`` onto ``range(V)`` along ``range(W)``.

    ``W`` need not be biorthogonal on entry; the returned pair is.
    """
    M = W.T @ V
    cond = np.linalg.cond(M)
    if not cond < 1e14:
        raise RankDeficiencyError(f"W^T V is numerically singular (cond = {cond:.3e})")
    Wb = np.linalg.solve(M, W.T).T
    red = LtiSystem(Wb.T @ H.A @ V, Wb.T @ H.B, H.C @ V)
    return red, ProjectionPair(V, Wb)


def project_ltp(sys: FloquetFourierSystem, pair: ProjectionPair) -> FloquetFourierSystem:
    """Coefficient-wise projection ``(W^T Q V, W^T b_k, V^T c_k)``."""
    V, W = pair.V, pair.W
    return FloquetFourierSystem(W.T @ sys.Q @ V, sys.omega0, sys.b @ W, sys.c @ V)


# ---------------------------------------------------------------- IRKA


@dataclass
class IrkaDiagnostics:
    iterations: int
    shift_movement: float
    converged: bool
    shifts: np.ndarray
    errors: list = field(default_factory=list)
    movements: list = field(default_factory=list)
    returned_error: float | None = None
    restarted: bool = False
    fallback: str | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "shift_movement": self.shift_movement,
            "converged": self.converged,
            "restarted": self.restarted,
            "fallback": self.fallback,
        }


def _is_real_eig(lam, tol=1e-12):
    return np.abs(lam.imag) <= tol * np.maximum(np.abs(lam), 1.0)


def _modal_data(A, B, C):
    lam, X = np.linalg.eig(A)
    b = np.linalg.solve(X, B)
    c = C @ X
    return lam, c, b


def _initial_data(H: LtiSystem, r: int, real: bool, rng):
    """Mirrored poles of ``H`` with the largest H2 contributions, plus directions."""
    lam, c, b = _modal_data(H.A.astype(complex), H.B.astype(complex), H.C.astype(complex))
    weight = np.linalg.norm(c, axis=0) * np.linalg.norm(b, axis=1) / np.sqrt(np.abs(lam.real))
    order = np.argsort(-weight, kind="stable")
    chosen, used = [], set()
    for i in order:
        if len(chosen) == r:
            break
        if i in used or weight[i] == 0:
            continue
        if not real or _is_real_eig(lam[i]):
            chosen.append(i)
            used.add(i)
            continue
        cand = [j for j in range(len(lam)) if j not in used and j != i]
        j = min(cand, key=lambda j: abs(lam[j] - np.conj(lam[i])))
        if len(chosen) + 2 <= r:
            chosen += [i, j]
            used |= {i, j}
    sigma = list(-np.conj(lam[chosen]))
    bdir = [np.conj(b[i]) for i in chosen]
    cdir = [np.conj(c[:, i]) for i in chosen]
    missing = r - len(chosen)
    if missing:
        mags = np.abs(lam)
        lo, hi = max(mags.min(), 1e-12), max(mags.max(), 1e-12)
        for s in np.logspace(np.log10(lo), np.log10(hi), missing):
            sigma.append(complex(s))
            bdir.append(rng.standard_normal(H.m).astype(complex))
            cdir.append(rng.standard_normal(H.p).astype(complex))
    return np.array(sigma), np.array(bdir), np.array(cdir)


def _orth(Z, r, real):
    if real:
        Z = np.hstack([Z.real, Z.imag])
    # Nearly dependent columns are normal once the error approaches roundoff
    # (e.g. a single output vector); trailing singular vectors still give an
    # orthonormal basis, and petrov_galerkin checks W^T V.
    U, s, _ = np.linalg.svd(Z, full_matrices=False)
    if not s[0] > 0:
        raise RankDeficiencyError("tangential Krylov basis is zero")
    return U[:, :r]


def _tangential_bases(H: LtiSystem, sigma, bdir, cdir, real):
    n = H.n
    A = H.A.astype(complex)
    At = A.T
    V = np.empty((n, len(sigma)), dtype=complex)
    W = np.empty_like(V)
    eye = np.eye(n)
    for i, s in enumerate(sigma):
        V[:, i] = np.linalg.solve(s * eye - A, H.B @ bdir[i])
        W[:, i] = np.linalg.solve(s * eye - At, H.C.T @ cdir[i])
    r = len(sigma)
    return _orth(V, r, real), _orth(W, r, real)


def _movement(new, old):
    D = np.abs(new[:, None] - old[None, :])
    rows, cols = linear_sum_assignment(D)
    return float(np.max(D[rows, cols] / np.maximum(np.abs(old[cols]), np.finfo(float).tiny)))


def _error_or_inf(H, red):
    if not is_stable_matrix(red.A):
        return math.inf
    return h2_norm_gramian(H - red, "factored")


def _iterate(H, r, sigma, bdir, cdir, real, tol, max_iter, track_error):
    """IRKA fixed-point loop from the given shifts; returns ``(red, pair, diag, candidates)``."""
    diag = IrkaDiagnostics(0, math.inf, False, sigma)
    candidates = []
    for it in range(1, max_iter + 1):
        V, W = _tangential_bases(H, sigma, bdir, cdir, real)
        red, pair = petrov_galerkin(H, V, W)
        if track_error:
            err = _error_or_inf(H, red)
            diag.errors.append(err)
            candidates.append((err, it, red, pair))
        lam, c, b = _modal_data(red.A.astype(complex), red.B.astype(complex), red.C.astype(complex))
        unstable = lam.real >= 0
        lam[unstable] = -np.conj(lam[unstable])
        new_sigma = -np.conj(lam)
        move = _movement(new_sigma, sigma)
        diag.movements.append(move)
        sigma, bdir, cdir = new_sigma, np.conj(b), np.conj(c.T)
        diag.iterations = it
        diag.shift_movement = move
        if move <= tol:
            diag.converged = True
            break
    diag.shifts = sigma
    V, W = _tangential_bases(H, sigma, bdir, cdir, real)
    red, pair = petrov_galerkin(H, V, W)
    err = _error_or_inf(H, red) if track_error else None
    if track_error:
        first = diag.errors[0]
        if not diag.converged or err > first * (1 + 1e-12):
            best = min(candidates, key=lambda x: x[0])
            if best[0] < err:
                err, _, red, pair = best
    diag.returned_error = err
    return red, pair, diag


def _bt_initial_data(H, r):
    red, _, _ = balanced_truncation(H, r)
    lam, c, b = _modal_data(red.A.astype(complex), red.B.astype(complex), red.C.astype(complex))
    return -np.conj(lam), np.conj(b), np.conj(c.T)


def irka(
    H: LtiSystem,
    r: int,
    tol: float = 1e-6,
    max_iter: int = 100,
    seed: int = 0,
    track_error: bool = True,
):
    """Iterative rational Krylov algorithm for MIMO systems.

    Tangential directions are taken from the residues of the current
    reduced model; shifts are its poles mirrored across the imaginary
    axis (``-conj(lambda)``), after reflecting any unstable pole into the
    left half-plane. Stops when the relative shift movement drops to
    ``tol`` or after ``max_iter`` iterations.

    Initial shifts are the mirrored poles of ``H`` with the largest H2
    contributions. If no iterate from that start is stable, the iteration
    is restarted once from a balanced-truncation model
    (``diagnostics.restarted``); if that also fails, the balanced-truncation
    model itself is returned with ``diagnostics.fallback = "bt"``.

    Returns
    -------
    reduced : LtiSystem
    pair : ProjectionPair
    diagnostics : IrkaDiagnostics
    """
    if not 1 <= r <= H.n:
        raise ShapeError(f"reduced order must satisfy 1 <= r <= n = {H.n}, got {r}")
    require_stable(H.A, "H")
    real = H.is_real
    if real:
        H = LtiSystem(H.A.real, H.B.real, H.C.real)
    rng = np.random.default_rng(seed)
    red, pair, diag = _iterate(H, r, *_initial_data(H, r, real, rng), real, tol, max_iter, track_error)
    if not is_stable_matrix(red.A):
        red, pair, diag = _iterate(H, r, *_bt_initial_data(H, r), real, tol, max_iter, track_error)
        diag.restarted = True
    if not is_stable_matrix(red.A):
        warnings.warn("no stable IRKA iterate; returning the balanced-truncation model", RuntimeWarning, stacklevel=2)
        red, pair, _ = balanced_truncation(H, r)
        diag.fallback = "bt"
        diag.returned_error = _error_or_inf(H, red) if track_error else None
        return red, pair, diag
    if not diag.converged:
        warnings.warn(
            f"IRKA did not converge in {max_iter} iterations "
            f"(shift movement {diag.shift_movement:.2e}); returning best iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    if not is_stable_matrix(red.A):
        raise ConvergenceError("IRKA did not produce a stable reduced model")
    return red, pair, diag


def tangential_interpolation_residuals(H: LtiSystem, red: LtiSystem):
    """Right and left tangential interpolation residuals at the mirrored reduced poles.

    For each reduced pole ``lambda`` with residue ``c b^T`` the point is
    ``sigma = -conj(lambda)`` and the unit directions are ``conj(b)``,
    ``conj(c)``. Returns two arrays of residual norms.
    """
    lam, c, b = _modal_data(red.A.astype(complex), red.B.astype(complex), red.C.astype(complex))
    right, left = [], []
    for i, l in enumerate(lam):
        s = -np.conj(l)
        Hs = eval_transfer(H, s)
        Rs = eval_transfer(red, s)
        bd = np.conj(b[i]) / np.linalg.norm(b[i])
        cd = np.conj(c[:, i]) / np.linalg.norm(c[:, i])
        right.append(np.linalg.norm((Hs - Rs) @ bd))
        left.append(np.linalg.norm(cd @ (Hs - Rs)))
    return np.array(right), np.array(left)


# ---------------------------------------------------------------- BT / POD


def _psd_factor(P):
    P = 0.5 * (P + P.conj().T)
    s, U = np.linalg.eigh(P)
    s = np.clip(s, 0.0, None)
    return U * np.sqrt(s)


def balanced_truncation(H: LtiSystem, r: int):
    """Square-root balanced truncation; returns ``(reduced, pair, hankel_singular_values)``."""
    if not 1 <= r <= H.n:
        raise ShapeError(f"reduced order must satisfy 1 <= r <= n = {H.n}, got {r}")
    require_stable(H.A, "H")
    P = solve_lyapunov(H.A, H.B @ H.B.conj().T, "controllability")
    Qo = solve_lyapunov(H.A, H.C.conj().T @ H.C, "observability")
    Zp, Zq = _psd_factor(P), _psd_factor(Qo)
    U, hsv, Vh = np.linalg.svd(Zq.conj().T @ Zp)
    if hsv[r - 1] <= 1e-14 * hsv[0]:
        raise RankDeficiencyError(f"only {np.sum(hsv > 1e-14 * hsv[0])} nonzero Hankel singular values")
    scale = 1 / np.sqrt(hsv[:r])
    V = Zp @ Vh[:r].conj().T * scale
    W = np.conj(Zq @ U[:, :r] * scale)
    if H.is_real:
        V, W = V.real, W.real
    red, pair = petrov_galerkin(H, V, W)
    return red, pair, hsv


def pod_reduce(snapshots, r: int) -> ProjectionPair:
    """Galerkin pair from the leading ``r`` left singular vectors of a snapshot matrix."""
    X = np.asarray(snapshots)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if r > len(s) or s[r - 1] < 1e-13 * s[0]:
        raise RankDeficiencyError(f"snapshot matrix has numerical rank below {r}")
    V = U[:, :r]
    return ProjectionPair(V, np.conj(V))


# ---------------------------------------------------------------- lift-reduce-unlift driver


@dataclass
class ReductionReport:
    r: int
    N: int
    method: str
    reduced: FloquetFourierSystem
    mimo_error: float
    ltp_error: float | None
    bound: float
    stable: bool = True
    irka: IrkaDiagnostics | None = None
    fourier_truncation_error: float | None = None
    ltp_error_method: str | None = None
    pair: ProjectionPair | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        out = {
            "r": self.r,
            "N": self.N,
            "method": self.method,
            "mimo_error": num(self.mimo_error),
            "ltp_error": num(self.ltp_error),
            "bound": num(self.bound),
            "stable": self.stable,
            "irka": self.irka.to_dict() if self.irka is not None else None,
            "ltp_error_method": self.ltp_error_method,
        }
        if self.fourier_truncation_error is not None:
            out["fourier_truncation_error"] = num(self.fourier_truncation_error)
        return out


def _pod_pair(sys, r, signal, dt, t_final):
    from ltpmor.sim import simulate_backward_euler

    trace = simulate_backward_euler(sys, signal, dt, t_final, store_states=True)
    return pod_reduce(trace.states, r)


def reduce_ltp_algorithm1(
    sys,
    r: int,
    N: int | None = None,
    method: str = "irka",
    *,
    compute_ltp_error: bool = True,
    irka_tol: float = 1e-6,
    irka_max_iter: int = 100,
    seed: int = 0,
    pod_signal=None,
    pod_dt: float | None = None,
    pod_t_final: float | None = None,
    full_norm: float | None = None,
) -> ReductionReport:
    """Truncate, lift, reduce the lift, unlift, and measure.

    ``sys`` is a :class:`FloquetFourierSystem` or any object with a
    ``to_floquet_fourier(N)`` method (e.g. a sampled LTP system).
    ``method`` is ``"irka"``, ``"bt"`` or ``"pod"``; POD is trained on a
    backward-Euler simulation of the truncated system (unit step by default).
    ``full_norm`` (``||G_[N]||``) may be passed to save one norm
    computation per call in sweeps; see :func:`ltp_error_norm`.
    """
    truncation = None
    if isinstance(sys, FloquetFourierSystem):
        full = sys
        if N is None:
            N = full.N
        G = full.with_order(N)
        if full.N > N:
            truncation = h2_norm_zhou_hagiwara(full - G, full.N, paths="v").value
    else:
        G, _ = sys.to_floquet_fourier(N)
        N = G.N
    require_stable(G.Q, "Q")
    if not 1 <= r <= G.n:
        raise ShapeError(f"reduced order must satisfy 1 <= r <= n = {G.n}, got {r}")
    lifted = lift_to_mimo(G)
    diag = None
    # real input gives real bases, so the reduced system stays real
    work = _realified_lift(G, lifted.system)
    if method == "irka":
        _, pair, diag = irka(work, r, tol=irka_tol, max_iter=irka_max_iter, seed=seed)
        red_mimo, pair = petrov_galerkin(lifted.system, pair.V, pair.W)
    elif method == "bt":
        _, pair, _ = balanced_truncation(work, r)
        red_mimo, pair = petrov_galerkin(lifted.system, pair.V, pair.W)
    elif method == "pod":
        from ltpmor.sim import InputSignal

        signal = pod_signal if pod_signal is not None else InputSignal.step()
        dt = pod_dt if pod_dt is not None else G.period / 1000
        t_final = pod_t_final if pod_t_final is not None else G.period
        pair = _pod_pair(G, r, signal, dt, t_final)
        red_mimo, pair = petrov_galerkin(lifted.system, pair.V, pair.W)
    else:
        raise ValueError(f"unknown method {method!r}")
    reduced = unlift_to_ltp(red_mimo, G.omega0)
    stable = is_stable_matrix(reduced.Q)
    ltp_error = ltp_method = None
    if stable:
        mimo_error = h2_norm_gramian(lifted.system - red_mimo, "factored")
        if compute_ltp_error:
            ltp_error, ltp_method = ltp_error_norm(G, reduced, full_norm)
    else:
        mimo_error = math.inf
        if compute_ltp_error:
            ltp_error, ltp_method = math.inf, "unstable"
    bound = math.sqrt(2 * N + 1) * mimo_error
    return ReductionReport(
        r, N, method, reduced, mimo_error, ltp_error, bound, stable, diag, truncation, ltp_method, pair
    )


ZH_RESOLUTION = 1e-3


def ltp_error_norm(G: FloquetFourierSystem, reduced: FloquetFourierSystem, full_norm: float | None = None):
    """``||G - reduced||_H2`` and the path used to get it.

    The block-embedding (Lyapunov trace) value is used unless it falls
    below ``ZH_RESOLUTION * ||G||``. The trace forms ``||G||^2 - 2 Re<G, G~>
    + ||G~||^2``, so its relative accuracy is about ``eps (||G|| / err)^2``;
    below the threshold the frequency-quadrature distance is used instead.
    """
    zh = h2_norm_zhou_hagiwara(G - reduced, max(G.N, reduced.N), paths="v").value
    if full_norm is None:
        full_norm = h2_norm_zhou_hagiwara(G, G.N, paths="v").value
    if zh > ZH_RESOLUTION * full_norm:
        return zh, "zhou-hagiwara"
    return h2_distance_frequency(G, reduced), "frequency"


@dataclass(frozen=True)
class BoundComponents:
    truncation_error: float
    truncation_note: str
    lifted_error: float
    factor: float
    bound: float

    def to_dict(self) -> dict:
        return {
            "truncation_error": self.truncation_error,
            "truncation_note": self.truncation_note,
            "lifted_error": self.lifted_error,
            "factor": self.factor,
            "bound": self.bound,
        }


def error_bound_report(full, reduced: FloquetFourierSystem, N: int) -> BoundComponents:
    """``||G - G_[N]|| + sqrt(2N+1) ||H_[N] - H~_[N]||``.

    The truncation term is computed exactly when ``full`` is a finite
    expansion longer than ``N``; for sampled systems (no finite expansion)
    it is treated as zero and flagged as such.
    """
    if isinstance(full, FloquetFourierSystem):
        if abs(full.omega0 - reduced.omega0) > 1e-12 * full.omega0:
            from ltpmor.errors import FrequencyMismatchError

            raise FrequencyMismatchError(f"omega0 differs: {full.omega0} vs {reduced.omega0}")
        G = full.with_order(N)
        if full.N > N:
            trunc = h2_norm_zhou_hagiwara(full - G, full.N, paths="v").value
            note = "computed"
        else:
            trunc, note = 0.0, "exact: expansion order does not exceed N"
    else:
        G, _ = full.to_floquet_fourier(N)
        trunc, note = 0.0, "treated as zero: sampled system approximated by its order-N truncation"
    H = lift_to_mimo(G).system
    Ht = lift_to_mimo(reduced.with_order(N)).system
    if not is_stable_matrix(Ht.A):
        raise UnstableSystemError("reduced system is unstable; the bound is infinite")
    lifted = h2_norm_gramian(H - Ht, "factored")
    factor = math.sqrt(2 * N + 1)
    return BoundComponents(trunc, note, lifted, factor, trunc + factor * lifted)
