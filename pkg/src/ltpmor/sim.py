"""Backward-Euler simulation and the desk-scale benchmark systems."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from ltpmor.errors import ShapeError, SingularShiftError
from ltpmor.floquet import PeriodicMatrixSampler, SampledLtpSystem
from ltpmor.lti import LtiSystem
from ltpmor.ltp import FloquetFourierSystem, synthesize


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Scalar input ``u(t)``.

    ``kind`` is ``"step"``, ``"pulse"`` (``u = a`` for ``t < width``),
    ``"sine"`` (``a sin(omega t + phase)``) or ``"sampled"`` (values on a
    time grid, linearly interpolated).
    """

    kind: str = "step"
    amplitude: float = 1.0
    omega: float = 0.0
    phase: float = 0.0
    width: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    @classmethod
    def step(cls, amplitude=1.0):
        return cls("step", amplitude)

    @classmethod
    def pulse(cls, width, amplitude=1.0):
        return cls("pulse", amplitude, width=width)

    @classmethod
    def sine(cls, omega, phase=0.0, amplitude=1.0):
        return cls("sine", amplitude, omega=omega, phase=phase)

    @classmethod
    def sampled(cls, times, values):
        times, values = np.asarray(times, float), np.asarray(values, float)
        if times.shape != values.shape or times.ndim != 1:
            raise ShapeError("sampled signal needs equal-length 1-D times and values")
        return cls("sampled", 1.0, times=times, values=values)

    @classmethod
    def parse(cls, spec: str):
        """``step``, ``zero``, ``sine:<omega>``, ``pulse:<t>`` or ``file:<path>`` (CSV ``time,u``)."""
        kind, _, arg = spec.partition(":")
        if kind == "step" and not arg:
            return cls.step()
        if kind == "zero" and not arg:
            return cls.step(0.0)
        if kind == "sine":
            return cls.sine(float(arg))
        if kind == "pulse":
            return cls.pulse(float(arg))
        if kind == "file":
            data = np.loadtxt(arg, delimiter=",", skiprows=1, ndmin=2)
            return cls.sampled(data[:, 0], data[:, 1])
        raise ValueError(f"unrecognised signal {spec!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a = self.amplitude
        if self.kind == "step":
            return np.full(t.shape, a)
        if self.kind == "pulse":
            return np.where(t < self.width, a, 0.0)
        if self.kind == "sine":
            return a * np.sin(self.omega * t + self.phase)
        if self.kind == "sampled":
            lo, hi = self.times[0], self.times[-1]
            if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
                raise ValueError("simulation grid extends beyond the sampled input")
            return np.interp(t, self.times, self.values)
        raise ValueError(f"unknown signal kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    times: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    states: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def to_csv(self, y_ref=None) -> str:
        """Header ``time,u,y`` (plus ``y_ref,abs_err``), 17 significant digits."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        head = ["time", "u", "y"]
        if y_ref is not None:
            head += ["y_ref", "abs_err"]
        w.writerow(head)
        for i, t in enumerate(self.times):
            row = [t, self.inputs[i], np.real(self.outputs[i])]
            if y_ref is not None:
                row += [np.real(y_ref[i]), abs(self.outputs[i] - y_ref[i])]
            w.writerow([f"{float(v):.17g}" for v in row])
        return out.getvalue()

    def write_csv(self, path, y_ref=None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(y_ref))


def _lu(M):
    lu = spla.lu_factor(M, check_finite=True)
    d = np.abs(np.diag(lu[0]))
    if d.min() <= 1e-14 * max(d.max(), 1.0):
        raise SingularShiftError("I - dt A is numerically singular")
    return lu


def simulate_backward_euler(sys, u: InputSignal, dt: float, t_final: float, store_states: bool = False):
    """Implicit Euler from ``x(0) = 0``.

    ``x_{k+1} = (I - dt A(t_{k+1}))^{-1} (x_k + dt b(t_{k+1}) u(t_{k+1}))`` and
    ``y_k = c(t_k)^T x_k``. Accepts an :class:`LtiSystem` (single input and
    output), a :class:`FloquetFourierSystem` or a :class:`SampledLtpSystem`.
    """
    if not dt > 0 or not t_final > 0:
        raise ValueError("dt and t_final must be positive")
    steps = int(round(t_final / dt))
    times = np.arange(steps + 1) * dt
    uu = u(times)

    if isinstance(sys, LtiSystem):
        if sys.m != 1 or sys.p != 1:
            raise ShapeError("LTI simulation needs a single-input single-output system")
        A_const = sys.A
        bs = np.broadcast_to(sys.B[:, 0], (steps + 1, sys.n))
        cs = np.broadcast_to(sys.C[0], (steps + 1, sys.n))
        A_fun = None
    elif isinstance(sys, FloquetFourierSystem):
        A_const = sys.Q
        bs = synthesize(sys.b, sys.omega0, times)
        cs = synthesize(sys.c, sys.omega0, times)
        A_fun = None
    elif isinstance(sys, SampledLtpSystem):
        A_const = sys.A(0.0) if sys.A.is_constant else None
        A_fun = None if sys.A.is_constant else sys.A
        bs = np.array([sys.b_at(t) for t in times])
        cs = np.array([sys.c_at(t) for t in times])
    else:
        raise TypeError(f"cannot simulate {type(sys).__name__}")

    n = bs.shape[1]
    dtype = np.result_type(bs, cs, A_const if A_const is not None else float, float)
    x = np.zeros(n, dtype=dtype)
    X = np.zeros((n, steps + 1), dtype=dtype) if store_states else None
    y = np.zeros(steps + 1, dtype=dtype)
    eye = np.eye(n)
    lu = _lu(eye - dt * A_const) if A_const is not None else None
    for k in range(steps):
        rhs = x + dt * bs[k + 1] * uu[k + 1]
        if lu is not None:
            x = spla.lu_solve(lu, rhs)
        else:
            x = spla.lu_solve(_lu(eye - dt * A_fun(times[k + 1])), rhs)
        y[k + 1] = cs[k + 1] @ x
        if store_states:
            X[:, k + 1] = x
    if np.iscomplexobj(y) and np.abs(y.imag).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(y).max()):
        y = y.real
        if store_states:
            X = X.real
    return SimulationTrace(times, uu, y, X)


# ---------------------------------------------------------------- benchmarks

HEAT_PERIOD = 100.0


def heat_source_position(t, period: float = HEAT_PERIOD):
    return 0.5 + 0.4 * np.sin(8 * np.pi * np.asarray(t) / period)


def heat_laplacian(n_interior: int) -> np.ndarray:
    h = 1.0 / (n_interior + 1)
    main = np.full(n_interior, -2.0)
    off = np.ones(n_interior - 1)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h**2


def build_heat_benchmark(
    n_interior: int = 100, grid_t: int = 256, period: float = HEAT_PERIOD, split: bool = False
) -> SampledLtpSystem:
    """1-D heat equation on ``(0, 1)`` with a moving point source.

    Dirichlet ends; ``xi(t) = 0.5 + 0.4 sin(8 pi t / T)``. The source is put on
    the nearest interior node with weight ``1/h`` (or split linearly between
    the two neighbouring nodes when ``split``). The output is the midpoint
    node (the left of the two central nodes for even ``n_interior``).
    """
    if n_interior < 3:
        raise ValueError("n_interior must be at least 3")
    if grid_t < 1 or grid_t & (grid_t - 1):
        raise ValueError("grid_t must be a power of two")
    h = 1.0 / (n_interior + 1)
    A = heat_laplacian(n_interior)
    times = np.arange(grid_t) * period / grid_t
    b = np.zeros((grid_t, n_interior))
    pos = heat_source_position(times, period) / h - 1.0  # fractional node index
    for i, p in enumerate(pos):
        if split:
            j = int(np.floor(p))
            w = p - j
            b[i, j] += (1 - w) / h
            if j + 1 < n_interior:
                b[i, j + 1] += w / h
        else:
            b[i, int(np.floor(p + 0.5))] = 1.0 / h
    c = np.zeros((grid_t, n_interior))
    c[:, (n_interior - 1) // 2] = 1.0
    return SampledLtpSystem(PeriodicMatrixSampler.constant(A, period), b, c)


def build_modulated_benchmark(base: LtiSystem, omega0: float) -> FloquetFourierSystem:
    """SISO LTP system from a 3-input, 3-output LTI base.

    ``b(t) = B[:,0] + B[:,1] cos(w0 t) + B[:,2] cos(2 w0 t)`` and the same
    for ``c(t)`` with the rows of ``C``. The cosines split evenly between
    the ``+-k`` coefficients, so ``N = 2``.
    """
    if base.m != 3 or base.p != 3:
        raise ShapeError(f"base must have 3 inputs and 3 outputs, got {base.m} and {base.p}")

    def coeffs(cols):
        b0, b1, b2 = cols
        return np.array([b2 / 2, b1 / 2, b0, b1 / 2, b2 / 2])

    return FloquetFourierSystem(base.A, omega0, coeffs(base.B.T), coeffs(base.C))


def synthetic_structure(n_modes: int = 10, seed: int = 0, damping: float = 0.02) -> LtiSystem:
    """Lightly damped 3-input, 3-output modal structure with ``2 n_modes`` states.

    Natural frequencies are log-spaced in ``[1, 50]`` rad/s with a small
    random jitter; modal damping ratio ``damping``.
    """
    rng = np.random.default_rng(seed)
    w = np.logspace(0, np.log10(50.0), n_modes) * (1 + 0.05 * rng.uniform(-1, 1, n_modes))
    n = 2 * n_modes
    A = np.zeros((n, n))
    for j, wj in enumerate(w):
        A[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [[0.0, 1.0], [-(wj**2), -2 * damping * wj]]
    Phi = rng.standard_normal((n_modes, 3))
    B = np.zeros((n, 3))
    B[1::2] = Phi
    C = np.zeros((3, n))
    C[:, 0::2] = rng.standard_normal((3, n_modes))
    return LtiSystem(A, B, C)


def build_synthetic_ltp(n: int = 40, N: int = 3, omega0: float = 1.0, seed: int = 0) -> FloquetFourierSystem:
    """Random stable LTP system in Floquet-Fourier form with real ``b(t)``, ``c(t)``.

    Stands in for a linearised periodically driven circuit. ``Q`` has a
    negative definite symmetric part (dissipative) plus a skew part, so
    every orthonormal Galerkin projection of it is stable; coefficient
    magnitudes decay geometrically in ``|k|``.
    """
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.logspace(-1.5, 1.5, n)
    K = rng.standard_normal((n, n)) / np.sqrt(n)
    Q = -(U * d) @ U.T + 2.0 * (K - K.T)
    ks = np.arange(-N, N + 1)
    b = np.zeros((2 * N + 1, n), dtype=complex)
    c = np.zeros((2 * N + 1, n), dtype=complex)
    for k in range(0, N + 1):
        decay = 0.5**k
        bk = decay * (rng.standard_normal(n) + (1j * rng.standard_normal(n) if k else 0))
        ck = decay * (rng.standard_normal(n) + (1j * rng.standard_normal(n) if k else 0))
        b[ks == k], b[ks == -k] = bk, np.conj(bk)
        c[ks == k], c[ks == -k] = ck, np.conj(ck)
    return FloquetFourierSystem(Q, omega0, b, c)
