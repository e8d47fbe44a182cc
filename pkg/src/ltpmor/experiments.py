"""Reduction sweeps over the reduced order, shared by the CLI and scripts."""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ltpmor.ltp import FloquetFourierSystem, h2_norm_zhou_hagiwara
from ltpmor.mor import reduce_ltp_algorithm1
from ltpmor.sim import build_heat_benchmark, build_modulated_benchmark, build_synthetic_ltp, synthetic_structure

HEAT_N = 32
BENCH_COLUMNS = ("r", "method", "mimo_error", "ltp_error", "bound", "wall_time_s")


@dataclass(frozen=True)
class SweepConfig:
    rs: tuple
    methods: tuple = ("irka",)
    seed: int = 0
    jobs: int = 1
    irka_tol: float = 1e-6


def default_jobs() -> int:
    env = os.environ.get("LTPMOR_JOBS")
    if env is None:
        return 1
    jobs = int(env)
    if jobs < 1:
        raise ValueError("LTPMOR_JOBS must be a positive integer")
    return jobs


def heat_system(n: int = 100, N: int = HEAT_N, grid_t: int = 256) -> FloquetFourierSystem:
    G, _ = build_heat_benchmark(n, grid_t).to_floquet_fourier(None)
    return G.with_order(N)


def modulated_system(n_modes: int = 10, omega0: float = 0.5, seed: int = 0, base=None) -> FloquetFourierSystem:
    if base is None:
        base = synthetic_structure(n_modes, seed=seed)
    return build_modulated_benchmark(base, omega0)


def synthetic_system(n: int = 40, N: int = 3, seed: int = 0) -> FloquetFourierSystem:
    return build_synthetic_ltp(n, N, 1.0, seed=seed)


def _run_one(args):
    G, r, method, seed, tol, full_norm = args
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = reduce_ltp_algorithm1(G, r, method=method, seed=seed, irka_tol=tol, full_norm=full_norm)
    row = {
        "r": r,
        "method": method,
        "mimo_error": rep.mimo_error,
        "ltp_error": rep.ltp_error,
        "bound": rep.bound,
        "wall_time_s": time.perf_counter() - t0,
        "stable": rep.stable,
        "ltp_error_method": rep.ltp_error_method,
        "irka_iterations": rep.irka.iterations if rep.irka else None,
        "irka_converged": rep.irka.converged if rep.irka else None,
        "warnings": [str(w.message) for w in caught],
    }
    return row


def run_sweep(G: FloquetFourierSystem, cfg: SweepConfig) -> list[dict]:
    """One lift-reduce-unlift run per ``(r, method)``; rows in input order."""
    full_norm = h2_norm_zhou_hagiwara(G, G.N, paths="v").value
    tasks = [(G, r, m, cfg.seed, cfg.irka_tol, full_norm) for r in cfg.rs for m in cfg.methods]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def bench_csv(rows, timing: bool = True) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.17g}"
        return "" if v is None else str(v)

    lines = [",".join(BENCH_COLUMNS)]
    for row in rows:
        vals = [row[c] for c in BENCH_COLUMNS]
        if not timing:
            vals[-1] = ""
        lines.append(",".join(fmt(v) for v in vals))
    return "\n".join(lines) + "\n"
