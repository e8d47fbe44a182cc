"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 usage error, 3 I/O error.
Errors are also printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ltpmor import io
from ltpmor.errors import FileFormatError, LtpMorError, NumericalError, ShapeError
from ltpmor.experiments import (
    HEAT_N,
    SweepConfig,
    bench_csv,
    default_jobs,
    heat_system,
    modulated_system,
    run_sweep,
    synthetic_system,
)
from ltpmor.floquet import DEFAULT_STEPS, SampledLtpSystem, is_hurwitz
from ltpmor.lti import LtiSystem, h2_norm_gramian
from ltpmor.ltp import (
    FloquetFourierSystem,
    h2_inner_pole_residue,
    h2_norm_subsystem_sum,
    h2_norm_zhou_hagiwara,
)
from ltpmor.mor import error_bound_report, reduce_ltp_algorithm1
from ltpmor.sim import InputSignal, simulate_backward_euler

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from exc
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _emit(doc, output):
    text = io.dumps(doc)
    if output:
        io.atomic_write_text(output, text)
    else:
        sys.stdout.write(text)


def _as_ltp(sys_, N=None, steps=DEFAULT_STEPS):
    if isinstance(sys_, FloquetFourierSystem):
        return sys_ if N is None else sys_.with_order(N)
    if isinstance(sys_, SampledLtpSystem):
        return sys_.to_floquet_fourier(N, steps)[0]
    if isinstance(sys_, LtiSystem):
        if sys_.m != 1 or sys_.p != 1:
            raise UsageError("an LTI input must be single-input single-output here")
        return FloquetFourierSystem(sys_.A, 1.0, sys_.B.T, sys_.C)
    raise UsageError(f"unsupported system type {type(sys_).__name__}")


# ---------------------------------------------------------------- commands


def cmd_reduce(args):
    G = _as_ltp(io.load_system(args.input), args.fourier_trunc)
    if not 1 <= args.order < G.n:
        raise UsageError(f"--order must satisfy 1 <= r < n = {G.n}")
    pod_signal = InputSignal.parse(args.signal) if args.signal else None
    rep = reduce_ltp_algorithm1(
        G,
        args.order,
        method=args.method,
        irka_tol=args.tol,
        seed=args.seed,
        pod_signal=pod_signal,
        pod_dt=args.dt,
        pod_t_final=args.tfinal,
    )
    doc = rep.to_dict()
    reduced_path = args.reduced
    if reduced_path is None and args.output:
        out = Path(args.output)
        reduced_path = str(out.with_name(out.stem + "_reduced.json"))
    if reduced_path:
        io.save_system(reduced_path, rep.reduced)
    _emit(doc, args.output)
    return EXIT_OK if rep.stable else EXIT_NUMERICAL


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), np.finfo(float).tiny)


def cmd_h2norm(args):
    sys_ = io.load_system(args.input)
    if isinstance(sys_, LtiSystem):
        _emit({"kind": "lti", "gramian": h2_norm_gramian(sys_)}, args.output)
        return EXIT_OK
    G = _as_ltp(sys_, args.fourier_trunc)
    doc = {"kind": "ltp", "N": G.N, "hurwitz": is_hurwitz(G.Q), "paths": {}}
    if not doc["hurwitz"]:
        raise NumericalError("Q is not Hurwitz; the H2 norm is not finite")
    values = {}
    values["subsystem_sum"] = h2_norm_subsystem_sum(G)

    N_e = max(args.embed_order if args.embed_order is not None else G.N, G.N, 1)
    trace = []
    prev = None
    for _ in range(args.max_doublings + 1):
        res = h2_norm_zhou_hagiwara(G, N_e)
        trace.append({"N_e": N_e, "v_path": res.v_path, "w_path": res.w_path, "discrepancy": res.discrepancy})
        if prev is not None and _rel(res.value, prev) <= 1e-6:
            break
        prev = res.value
        N_e *= 2
    values["zhou_hagiwara"] = trace[-1]["v_path"]
    doc["zhou_hagiwara_trace"] = trace

    try:
        pr = h2_inner_pole_residue(G, G, args.ell_max)
        values["pole_residue"] = float(np.sqrt(max(pr.value.real, 0.0)))
        doc["pole_residue_remainder"] = pr.remainder
    except NumericalError as exc:
        doc["paths"]["pole_residue"] = f"refused: {_refusal(exc)}"
    for k, v in values.items():
        doc["paths"][k] = v
    names = sorted(values)
    doc["discrepancies"] = {
        f"{a}:{b}": _rel(values[a], values[b]) for i, a in enumerate(names) for b in names[i + 1 :]
    }
    _emit(doc, args.output)
    return EXIT_OK


def _refusal(exc):
    from ltpmor.errors import DefectivePolesError, SpectralGapError

    if isinstance(exc, SpectralGapError):
        return "spectral gap"
    if isinstance(exc, DefectivePolesError):
        return "defective poles"
    return type(exc).__name__


def cmd_bound(args):
    full = io.load_system(args.input)
    reduced = _as_ltp(io.load_system(args.reduced))
    if isinstance(full, LtiSystem):
        full = _as_ltp(full)
    N = args.fourier_trunc if args.fourier_trunc is not None else reduced.N
    _emit(error_bound_report(full, reduced, N).to_dict(), args.output)
    return EXIT_OK


def cmd_simulate(args):
    sys_ = io.load_system(args.input)
    if isinstance(sys_, FloquetFourierSystem) and args.fourier_trunc is not None:
        sys_ = sys_.with_order(args.fourier_trunc)
    u = InputSignal.parse(args.signal or "step")
    tr = simulate_backward_euler(sys_, u, args.dt, args.tfinal)
    y_ref = None
    if args.reference:
        ref = simulate_backward_euler(io.load_system(args.reference), u, args.dt, args.tfinal)
        y_ref = ref.outputs
    text = tr.to_csv(y_ref)
    if args.output:
        io.atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args):
    if args.rmin > args.rmax:
        raise UsageError("--rmin must not exceed --rmax")
    if args.benchmark == "heat":
        G = heat_system(args.n or 100, args.fourier_trunc if args.fourier_trunc is not None else HEAT_N)
    elif args.benchmark == "modulated":
        base = io.load_system(args.input) if args.input else None
        if base is not None and not isinstance(base, LtiSystem):
            raise UsageError("modulated benchmark needs an LTI base system file")
        G = modulated_system((args.n or 20) // 2, args.omega0, args.seed, base)
    else:
        G = synthetic_system(args.n or 40, args.fourier_trunc if args.fourier_trunc is not None else 3, args.seed)
    if args.rmax > G.n:
        raise UsageError(f"--rmax must not exceed n = {G.n}")
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in ("irka", "bt", "pod")]
    if bad:
        raise UsageError(f"unknown methods {bad}")
    cfg = SweepConfig(tuple(range(args.rmin, args.rmax + 1, args.rstep)), methods, args.seed, args.jobs, args.tol)
    text = bench_csv(run_sweep(G, cfg), timing=not args.no_timing)
    if args.output:
        io.atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_floquet(args):
    sys_ = io.load_system(args.input)
    if not isinstance(sys_, SampledLtpSystem):
        raise UsageError("floquet needs a periodic-matrix (A_samples) file")
    G, factors = sys_.to_floquet_fourier(args.fourier_trunc, args.steps)
    io.save_system(args.output, G) if args.output else sys.stdout.write(io.dumps(io.ltp_to_dict(G)))
    info = {"hurwitz": is_hurwitz(G.Q), "N": G.N, "n": G.n}
    sys.stderr.write(json.dumps(info) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltpmor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_input=True):
        sp.add_argument("--input", "-i", required=need_input, help="system file (JSON)")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.add_argument("--fourier-trunc", "-N", type=_nonneg_int, help="Fourier truncation order")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("reduce", help="lift, reduce and unlift an LTP system")
    common(sp)
    sp.add_argument("--order", "-r", type=_positive(int), required=True)
    sp.add_argument("--method", choices=("irka", "bt", "pod"), default="irka")
    sp.add_argument("--reduced", help="reduced system file (default: <output>_reduced.json)")
    sp.add_argument("--tol", type=_positive(float), default=1e-6, help="IRKA shift tolerance")
    sp.add_argument("--signal", help="POD training input (default: step)")
    sp.add_argument("--dt", type=_positive(float), help="POD time step")
    sp.add_argument("--tfinal", type=_positive(float), help="POD final time")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("h2norm", help="H2 norm by every applicable path")
    common(sp)
    sp.add_argument("--embed-order", type=_nonneg_int, help="starting embedding order N_e")
    sp.add_argument("--max-doublings", type=_nonneg_int, default=3)
    sp.add_argument("--ell-max", type=_positive(int), default=200)
    sp.set_defaults(func=cmd_h2norm)

    sp = sub.add_parser("bound", help="two-term error bound for a reduced system")
    common(sp)
    sp.add_argument("--reduced", required=True, help="reduced LTP system file")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("simulate", help="backward-Euler simulation to CSV")
    common(sp)
    sp.add_argument("--signal", default="step", help="step | zero | sine:<omega> | pulse:<t> | file:<path>")
    sp.add_argument("--dt", type=_positive(float), required=True)
    sp.add_argument("--tfinal", type=_positive(float), required=True)
    sp.add_argument("--reference", help="second system; adds y_ref and abs_err columns")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bench", help="reduction sweep over r to CSV")
    sp.add_argument("benchmark", choices=("heat", "modulated", "synthetic"))
    sp.add_argument("--input", "-i", help="3x3 LTI base for the modulated benchmark")
    sp.add_argument("--output", "-o")
    sp.add_argument("--fourier-trunc", "-N", type=_nonneg_int)
    sp.add_argument("--n", type=_positive(int), help="state dimension")
    sp.add_argument("--rmin", type=_positive(int), default=4)
    sp.add_argument("--rmax", type=_positive(int), default=24)
    sp.add_argument("--rstep", type=_positive(int), default=1)
    sp.add_argument("--methods", default="irka")
    sp.add_argument("--omega0", type=_positive(float), default=0.5)
    sp.add_argument("--tol", type=_positive(float), default=1e-6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-timing", action="store_true", help="leave wall_time_s empty (byte-reproducible)")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("floquet", help="periodic A(t) samples to Floquet-Fourier form")
    common(sp)
    sp.add_argument("--steps", type=_positive(int), default=DEFAULT_STEPS, help="RK4 steps per period")
    sp.set_defaults(func=cmd_floquet)

    for sp in sub.choices.values():
        sp.add_argument("--jobs", type=_positive(int), default=None, help="parallel workers (env LTPMOR_JOBS)")
    return p


def _fail(code, category, exc):
    sys.stderr.write(json.dumps({"error": category, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.jobs is None:
            args.jobs = default_jobs()
        return args.func(args)
    except (UsageError, ShapeError) as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (OSError, FileFormatError) as exc:
        return _fail(EXIT_IO, "io", exc)
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERICAL, "numerical", exc)
    except (LtpMorError, ValueError) as exc:
        return _fail(EXIT_USAGE, "usage", exc)


if __name__ == "__main__":
    sys.exit(main())
