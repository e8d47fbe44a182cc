"""Monodromy matrices and Floquet factors of periodic linear ODEs.

Fundamental matrices are integrated with fixed-step classical RK4, so
results are deterministic and refine predictably with the step count.
The constant factor is ``Q = log(M) / T`` with the principal logarithm
taken eigenvalue by eigenvalue.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from ltpmor.errors import DefectivePolesError, LogBranchError, ShapeError
from ltpmor.lti import EIGVEC_COND_MAX, STABILITY_MARGIN
from ltpmor.ltp import FloquetFourierSystem, fourier_coefficients

DEFAULT_STEPS = 2048
BRANCH_WARN_ANGLE = np.pi - 1e-2
STIFF_MULTIPLIER_RATIO = 1e-8


class PeriodicMatrixSampler:
    """``t -> A(t)`` with ``A(t + T) = A(t)``.

    Built either from a callable on ``[0, T)`` or from uniform samples
    ``A(i T / n_t)``, in which case values between samples come from
    trigonometric interpolation (exact round trip on the grid).
    """

    def __init__(self, period: float, func: Callable | None = None, samples=None):
        if not period > 0:
            raise ValueError("period must be positive")
        if (func is None) == (samples is None):
            raise ValueError("give exactly one of func or samples")
        self.period = float(period)
        self.omega0 = 2 * np.pi / self.period
        self._func = func
        self.samples = None
        if samples is not None:
            s = np.asarray(samples)
            if s.ndim != 3 or s.shape[1] != s.shape[2]:
                raise ShapeError(f"samples must be (n_t, n, n), got {s.shape}")
            n_t = s.shape[0]
            if n_t & (n_t - 1):
                raise ShapeError(f"sample count must be a power of two, got {n_t}")
            self.samples = s
            self._interp = TrigInterpolant(s, self.period)
        n0 = self(0.0)
        self.n = n0.shape[0]
        self.is_constant = samples is not None and bool(np.all(self.samples == self.samples[0]))

    @classmethod
    def constant(cls, A, period: float) -> PeriodicMatrixSampler:
        A = np.atleast_2d(np.asarray(A))
        return cls(period, samples=A[None])

    def __call__(self, t: float) -> np.ndarray:
        if self._func is not None:
            return np.asarray(self._func(t % self.period))
        return self._interp(t)


@dataclass(frozen=True, eq=False)
class FloquetFactors:
    Q: np.ndarray
    times: np.ndarray
    P_samples: np.ndarray
    monodromy: np.ndarray
    X_samples: np.ndarray


def fundamental_matrix(A: PeriodicMatrixSampler, steps: int = DEFAULT_STEPS, record: int = 1):
    """RK4 solution of ``X' = A(t) X``, ``X(0) = I`` over one period.

    Returns ``X`` at the ``record + 1`` uniform times ``0, T/record, ..., T``;
    ``steps`` must be a multiple of ``record``.
    """
    if steps % record:
        raise ValueError(f"steps={steps} must be a multiple of record={record}")
    n = A.n
    h = A.period / steps
    X = np.eye(n, dtype=complex if np.iscomplexobj(A(0.0)) else float)
    out = [X.copy()]
    every = steps // record
    for i in range(steps):
        t = i * h
        k1 = A(t) @ X
        Am = A(t + h / 2)
        k2 = Am @ (X + h / 2 * k1)
        k3 = Am @ (X + h / 2 * k2)
        k4 = A(t + h) @ (X + h * k3)
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (i + 1) % every == 0:
            out.append(X.copy())
    return np.array(out)


def monodromy(A: PeriodicMatrixSampler, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """One-period state transition ``M = X(T)`` with ``X(0) = I``."""
    return fundamental_matrix(A, steps, record=1)[-1]


def _principal_log_eig(M):
    mu, S = np.linalg.eig(M.astype(complex))
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise DefectivePolesError(f"monodromy matrix is numerically defective (cond = {cond:.3e})")
    scale = np.abs(mu).max()
    bad = (mu.real <= 0) & (np.abs(mu.imag) <= 1e-12 * scale)
    if np.any(bad) or np.any(mu == 0):
        raise LogBranchError(f"monodromy eigenvalue on the closed negative real axis: {mu[bad]}")
    # the smallest multiplier is only known to about eps * |mu|_max
    ratio = np.abs(mu).min() / scale
    if ratio < STIFF_MULTIPLIER_RATIO:
        warnings.warn(
            f"multipliers span {ratio:.1e} of the largest; fast Floquet exponents "
            f"carry a relative error near {np.finfo(float).eps / ratio:.1e}",
            RuntimeWarning,
            stacklevel=3,
        )
    ang = np.abs(np.angle(mu))
    if np.any(ang > BRANCH_WARN_ANGLE):
        warnings.warn(
            f"monodromy eigenvalue near the log branch cut (|arg| = {ang.max():.6f})",
            RuntimeWarning,
            stacklevel=3,
        )
    return mu, S


def _realify(Z, ref):
    if not np.iscomplexobj(ref) and np.abs(Z.imag).max(initial=0.0) <= 1e-12 * max(
        1.0, np.abs(Z).max(initial=0.0)
    ):
        return Z.real
    return Z


def floquet_transform(
    A: PeriodicMatrixSampler, b_samples=None, c_samples=None, steps: int = DEFAULT_STEPS
):
    """Floquet factors on the sample grid and transformed input/output samples.

    Returns ``(factors, b_new, c_new)`` where ``b_new[i] = P(t_i)^{-1} b(t_i)``
    and ``c_new[i] = P(t_i)^T c(t_i)`` (so ``y = c_new^T z``). The grid is
    ``t_i = i T / n_t`` with ``n_t`` the number of b/c samples (or 1 when
    none are given).
    """
    n_t = 1 if b_samples is None else np.asarray(b_samples).shape[0]
    n = A.n
    T = A.period
    times = np.arange(n_t) * T / n_t
    if A.is_constant:
        Q = A(0.0)
        Xs = np.array([spla.expm(Q * t) for t in np.append(times, T)])
        M = Xs[-1]
        P = np.broadcast_to(np.eye(n), (n_t, n, n)).copy()
    else:
        if steps % n_t:
            steps = n_t * -(-steps // n_t)
        Xs = fundamental_matrix(A, steps, record=n_t)
        M = Xs[-1]
        mu, S = _principal_log_eig(M)
        lam = np.log(mu) / T
        Q = _realify(S @ np.diag(lam) @ np.linalg.inv(S), M)
        P = np.array([Xs[i] @ _expm_eig(-lam * times[i], S) for i in range(n_t)])
        P = _realify(P, M)
        P[0] = np.eye(n)
    factors = FloquetFactors(Q, times, P, M, Xs[:n_t])
    if b_samples is None:
        return factors, None, None
    b_samples = np.asarray(b_samples)
    c_samples = np.asarray(c_samples)
    if b_samples.shape != (n_t, n) or c_samples.shape != (n_t, n):
        raise ShapeError(f"b/c samples must be ({n_t}, {n})")
    b_new = np.array([np.linalg.solve(P[i], b_samples[i]) for i in range(n_t)])
    c_new = np.einsum("tij,ti->tj", P, c_samples)
    return factors, b_new, c_new


def _expm_eig(exponents, S):
    return S @ np.diag(np.exp(exponents)) @ np.linalg.inv(S)


def is_hurwitz(Q, margin: float = STABILITY_MARGIN) -> bool:
    """All eigenvalues of ``Q`` have real part below ``-margin``."""
    Q = np.atleast_2d(np.asarray(Q))
    return bool(np.max(np.linalg.eigvals(Q).real) < -margin)


@dataclass(frozen=True, eq=False)
class SampledLtpSystem:
    """LTP system given by uniform samples of ``A(t)``, ``b(t)``, ``c(t)`` over one period."""

    A: PeriodicMatrixSampler
    b_samples: np.ndarray
    c_samples: np.ndarray

    @property
    def period(self) -> float:
        return self.A.period

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def grid(self) -> int:
        return self.b_samples.shape[0]

    def b_at(self, t):
        return self._b(t)

    def c_at(self, t):
        return self._c(t)

    def __post_init__(self):
        object.__setattr__(self, "b_samples", np.asarray(self.b_samples))
        object.__setattr__(self, "c_samples", np.asarray(self.c_samples))
        if self.b_samples.shape != self.c_samples.shape or self.b_samples.shape[1] != self.A.n:
            raise ShapeError("b/c samples must both be (n_t, n)")
        object.__setattr__(self, "_b", TrigInterpolant(self.b_samples, self.period))
        object.__setattr__(self, "_c", TrigInterpolant(self.c_samples, self.period))

    def to_floquet_fourier(self, N: int | None = None, steps: int = DEFAULT_STEPS):
        """Floquet transform then Fourier-truncate ``b``, ``c`` to order ``N``.

        ``N`` defaults to the largest order the grid resolves, ``n_t/2 - 1``.
        """
        factors, b_new, c_new = floquet_transform(self.A, self.b_samples, self.c_samples, steps)
        if N is None:
            N = self.grid // 2 - 1
        sys = FloquetFourierSystem(
            factors.Q,
            2 * np.pi / self.period,
            fourier_coefficients(b_new, N),
            fourier_coefficients(c_new, N),
        )
        return sys, factors


class TrigInterpolant:
    """Trigonometric interpolant of uniform samples over one period.

    The Nyquist bin of an even-length grid is split evenly between
    ``+-n_t/2`` so real samples interpolate to real values.
    """

    def __init__(self, samples, period: float):
        samples = np.asarray(samples)
        n_t = samples.shape[0]
        self.omega0 = 2 * np.pi / period
        self._real = not np.iscomplexobj(samples)
        self._const = samples[0] if n_t == 1 else None
        coef = np.fft.fft(samples, axis=0) / n_t
        k = np.fft.fftfreq(n_t, 1.0 / n_t)
        if n_t % 2 == 0:
            coef = np.concatenate([coef, coef[n_t // 2][None] / 2])
            coef[n_t // 2] /= 2
            k = np.concatenate([k, [n_t // 2]])
        self._coef = coef
        self._k = k

    def __call__(self, t):
        if self._const is not None:
            return self._const
        out = np.tensordot(np.exp(1j * self.omega0 * self._k * t), self._coef, axes=1)
        return out.real if self._real else out
