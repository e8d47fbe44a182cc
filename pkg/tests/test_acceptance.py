"""Acceptance criteria 1-9; run directly for the one-line-per-criterion report.

Each test records its verdict with :func:`helpers.record`; the terminal
summary prints ``criterion k: PASS/FAIL - detail``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest
import scipy.linalg as spla
from helpers import random_ltp, real_coeffs, record
from oracles import kron_lyapunov, quad_h2_ltp

from ltpmor.experiments import SweepConfig, default_jobs, heat_system, modulated_system, run_sweep
from ltpmor.floquet import PeriodicMatrixSampler, floquet_transform
from ltpmor.lti import LtiSystem, h2_norm_gramian
from ltpmor.ltp import (
    FloquetFourierSystem,
    eval_subsystem,
    h2_inner_pole_residue,
    h2_norm_subsystem_sum,
    h2_norm_zhou_hagiwara,
    zhou_hagiwara_embedding,
)
from ltpmor.mor import irka, reduce_ltp_algorithm1, tangential_interpolation_residuals
from ltpmor.sim import InputSignal, build_synthetic_ltp, simulate_backward_euler

BOUND_SLACK = 1 + 1e-8
HEAT_RS = tuple(range(4, 25))


def _quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kw)


@pytest.fixture(scope="module")
def heat_sweep():
    t0 = time.perf_counter()
    G = heat_system()
    rows = run_sweep(G, SweepConfig(HEAT_RS, ("irka", "pod"), jobs=default_jobs()))
    out = {m: {row["r"]: row for row in rows if row["method"] == m} for m in ("irka", "pod")}
    return G, out, time.perf_counter() - t0


# ---------------------------------------------------------------- 1


def test_criterion1_bound_random_systems():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for _ in range(240):
        n = int(rng.integers(2, 9))
        N = int(rng.integers(0, 3))
        r = int(rng.integers(1, n))
        G = random_ltp(rng, n, N, omega0=float(rng.uniform(0.5, 3)), real=bool(rng.integers(2)))
        method = ("irka", "bt")[count % 2]
        rep = _quiet(reduce_ltp_algorithm1, G, r, method=method, seed=count)
        worst = max(worst, rep.ltp_error / rep.bound)
        count += 1
    ok = worst <= BOUND_SLACK
    record(1, ok, f"{count} random systems, max error/bound = {worst:.12f} ({time.perf_counter() - t0:.0f}s)")
    assert ok


def test_criterion1_bound_heat(heat_sweep):
    _, rows, elapsed = heat_sweep
    ratios = [row["ltp_error"] / row["bound"] for m in rows for row in rows[m].values()]
    ok = max(ratios) <= BOUND_SLACK
    record(1, ok, f"heat n=100 r=4..24 irka+pod, max error/bound = {max(ratios):.4f} (sweep {elapsed:.0f}s)")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion2_three_paths():
    rng = np.random.default_rng(99)
    worst, n_pr = 0.0, 0
    for i in range(100):
        n = int(rng.integers(1, 6))
        N = int(rng.integers(0, 3))
        w0 = float(rng.uniform(0.5, 3))
        G = random_ltp(rng, n, N, omega0=w0, gap=i % 4 != 3, real=i % 5 != 4)
        vals = [h2_norm_subsystem_sum(G), h2_norm_zhou_hagiwara(G, N).value]
        if np.abs(np.linalg.eigvals(G.Q).imag).max() < w0:
            vals.append(math.sqrt(max(h2_inner_pole_residue(G, G).value.real, 0.0)))
            n_pr += 1
        rel = (max(vals) - min(vals)) / max(vals)
        worst = max(worst, rel)
    # one quadrature spot check ties the three to an independent reference
    G = random_ltp(np.random.default_rng(5), 3, 1, gap=True)
    ref = quad_h2_ltp(G.Q, G.omega0, G.b, G.c)
    quad_rel = abs(h2_norm_subsystem_sum(G) - ref) / ref
    ok = worst <= 1e-5 and quad_rel <= 1e-5
    record(2, ok, f"100 instances ({n_pr} with pole-residue), max pairwise rel diff = {worst:.1e}, vs quadrature {quad_rel:.1e}")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion3_embedding_convergence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        G = random_ltp(rng, int(rng.integers(2, 7)), int(rng.integers(0, 3)), real=False)
        a = h2_norm_zhou_hagiwara(G, 16).value
        b = h2_norm_zhou_hagiwara(G, 32).value
        worst = max(worst, abs(a - b) / b)
    ok = worst <= 1e-6
    record(3, ok, f"N_e 16 -> 32 max rel change = {worst:.1e}")
    assert ok


def test_criterion3_block_solve_vs_kronecker():
    rng = np.random.default_rng(4)
    worst = 0.0
    cases = 0
    for n in range(1, 7):
        for N_e in range(0, 5):
            if n * (2 * N_e + 1) > 60:
                continue
            G = random_ltp(rng, n, min(N_e, 2), real=bool(N_e % 2))
            E = zhou_hagiwara_embedding(G, N_e)
            X = kron_lyapunov(E.A, E.C.conj().T @ E.C, "observability")
            ref = math.sqrt(np.trace(E.B.conj().T @ X @ E.B).real)
            res = h2_norm_zhou_hagiwara(G, N_e)
            worst = max(worst, abs(res.v_path - ref) / ref, abs(res.w_path - ref) / ref)
            cases += 1
    ok = worst <= 1e-10
    record(3, ok, f"{cases} embeddings with Kn <= 60 vs Kronecker, max rel diff = {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion4_floquet_reconstruction():
    T = 2 * np.pi
    rng = np.random.default_rng(8)
    problems = {
        "constant": PeriodicMatrixSampler.constant(rng.standard_normal((3, 3)) - 2 * np.eye(3), T),
        "constant_general_path": PeriodicMatrixSampler(T, func=lambda t: np.array([[-0.5, 1.0], [-0.3, -1.0]])),
        "scalar": PeriodicMatrixSampler(T, func=lambda t: np.array([[-1.0 + np.cos(t)]])),
        "mathieu": PeriodicMatrixSampler(T, func=lambda t: np.array([[0.0, 1.0], [-(2 + np.cos(t)), -0.1]])),
        "mathieu_undamped": PeriodicMatrixSampler(
            T, func=lambda t: np.array([[0.0, 1.0], [-(2 + np.cos(t)), 0.0]])
        ),
    }
    worst = 0.0
    for A in problems.values():
        n = A.n
        f, _, _ = floquet_transform(A, np.ones((64, n)), np.ones((64, n)))
        for i, t in enumerate(f.times):
            X = f.X_samples[i]
            rec = f.P_samples[i] @ spla.expm(f.Q * t)
            worst = max(worst, np.linalg.norm(X - rec) / np.linalg.norm(X))
    ok = worst <= 1e-8
    record(4, ok, f"{len(problems)} problems x 64 grid points, max rel residual = {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 5


def _brute_force_first_order():
    """Dense grid over ``c / (s + a)``; closed-form H2 error for ``1/(s^2+2s+2)``."""
    g2 = 0.125  # 1 / (2 a1 a0) for 1/(s^2 + a1 s + a0)

    def err(a, c):
        return np.sqrt(np.maximum(g2 - 2 * c / (a * a + 2 * a + 2) + c * c / (2 * a), 0.0))

    a_lo, a_hi, c_lo, c_hi = 1e-3, 10.0, 0.0, 5.0
    for _ in range(6):
        a = np.linspace(a_lo, a_hi, 801)
        c = np.linspace(c_lo, c_hi, 801)
        E = err(a[:, None], c[None, :])
        i, j = np.unravel_index(np.argmin(E), E.shape)
        da, dc = 4 * (a[1] - a[0]), 4 * (c[1] - c[0])
        a_lo, a_hi = max(a[i] - da, 1e-6), a[i] + da
        c_lo, c_hi = c[j] - dc, c[j] + dc
    return float(E[i, j])


def test_criterion5_irka_brute_force():
    H = LtiSystem(np.array([[0.0, 1.0], [-2.0, -2.0]]), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))
    red, _, diag = irka(H, 1, tol=1e-10)
    got = h2_norm_gramian(H - red)
    ref = _brute_force_first_order()
    ok = diag.converged and abs(got - ref) <= 1e-4 * ref
    record(5, ok, f"r=1 IRKA error {got:.9f} vs grid search {ref:.9f}")
    assert ok


def test_criterion5_interpolation_residuals():
    rng = np.random.default_rng(21)
    worst, conv = 0.0, 0
    for _ in range(20):
        A = rng.standard_normal((8, 8))
        A -= (np.linalg.eigvals(A).real.max() + 0.3) * np.eye(8)
        H = LtiSystem(A, rng.standard_normal((8, 2)), rng.standard_normal((2, 8)))
        red, _, diag = _quiet(irka, H, 2, tol=1e-10, max_iter=500)
        if not diag.converged:
            continue
        conv += 1
        right, left = tangential_interpolation_residuals(H, red)
        worst = max(worst, max(right.max(), left.max()) / h2_norm_gramian(H))
    ok = conv >= 10 and worst <= 1e-6
    record(5, ok, f"n=8 r=2: {conv}/20 converged, max residual / ||H|| = {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion6_irka_below_pod(heat_sweep):
    _, rows, _ = heat_sweep
    losses = [r for r in HEAT_RS if not rows["irka"][r]["ltp_error"] < rows["pod"][r]["ltp_error"]]
    ok = not losses
    record(6, ok, "IRKA < POD for every r in 4..24" if ok else f"IRKA >= POD at r = {losses}")
    assert ok


def _orders(rows, key):
    return math.log10(rows[4][key] / rows[24][key])


def test_criterion6_irka_decay(heat_sweep):
    _, rows, _ = heat_sweep
    e, b = _orders(rows["irka"], "ltp_error"), _orders(rows["irka"], "bound")
    ok = e >= 2 and b >= 2
    record(6, ok, f"IRKA error decays {e:.1f} orders, bound {b:.1f}")
    assert ok


def test_criterion6_pod_decay(heat_sweep):
    _, rows, _ = heat_sweep
    e, b = _orders(rows["pod"], "ltp_error"), _orders(rows["pod"], "bound")
    ok = e >= 2 and b >= 2
    record(6, ok, f"POD error decays {e:.2f} orders, bound {b:.2f} (2 required)")
    assert ok


# ---------------------------------------------------------------- 7


def test_criterion7_modulated_tracking():
    G = modulated_system()
    rows = run_sweep(G, SweepConfig(tuple(range(2, G.n + 1)), ("irka",), jobs=default_jobs()))
    err = np.array([r["ltp_error"] for r in rows[:-1]])
    bnd = np.array([r["bound"] for r in rows[:-1]])
    corr = float(np.corrcoef(np.log(err), np.log(bnd))[0, 1])
    full = rows[-1]["ltp_error"]
    valid = all(r["ltp_error"] <= r["bound"] * BOUND_SLACK for r in rows)
    ok = corr >= 0.9 and full <= 1e-8 and valid
    record(7, ok, f"log-log corr = {corr:.4f} over r=2..{G.n - 1}, r=n error = {full:.1e}")
    assert ok


# ---------------------------------------------------------------- 8


def test_criterion8_synthetic_substitute():
    G = build_synthetic_ltp(n=40, N=3, seed=0)
    rows = run_sweep(G, SweepConfig((4, 8, 12, 16), ("irka", "pod"), jobs=default_jobs()))
    by = {(r["r"], r["method"]): r for r in rows}
    order = all(by[(r, "irka")]["ltp_error"] < by[(r, "pod")]["ltp_error"] for r in (4, 8, 12, 16))
    valid = all(row["ltp_error"] <= row["bound"] * BOUND_SLACK for row in rows)
    gap = min(by[(r, "pod")]["ltp_error"] / by[(r, "irka")]["ltp_error"] for r in (4, 8, 12, 16))
    ok = order and valid
    record(8, ok, f"synthetic n=40 N=3 (substitute): IRKA < POD {order}, bound valid {valid}, min POD/IRKA = {gap:.1f}")
    assert ok


# ---------------------------------------------------------------- 9


def test_criterion9_frequency_coupling():
    w0, w = 1.0, 0.3
    rng = np.random.default_rng(17)
    n = 3
    Q = -np.diag([0.6, 1.0, 1.7]) + 0.2 * rng.standard_normal((n, n))
    G = FloquetFourierSystem(Q, w0, real_coeffs(rng, 1, n), real_coeffs(rng, 1, n))
    window = 20 * np.pi  # holds a whole number of periods of every frequency involved
    M = 65536
    dt = window / M
    burn = 2 * window
    tr = simulate_backward_euler(G, InputSignal.sine(w), dt, burn + window)
    y = tr.outputs[-M - 1 : -1]
    Y = np.fft.fft(y) / M
    dfreq = 2 * np.pi / window
    # sin(wt) = (e^{iwt} - e^{-iwt}) / 2i; the e^{iwt} part lands on w + k w0
    harmonics = sorted(((abs(eval_subsystem(G, k, 1j * w)), k) for k in range(-2, 3)), reverse=True)[:5]
    worst = 0.0
    for _, k in harmonics:
        expected = eval_subsystem(G, k, 1j * w) / 2j
        f = w + k * w0
        got = Y[int(round(f / dfreq)) % M]
        worst = max(worst, abs(abs(got) - abs(expected)) / abs(expected))
    ok = worst <= 0.02
    record(9, ok, f"5 dominant harmonics, max rel amplitude error = {100 * worst:.2f}%")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
