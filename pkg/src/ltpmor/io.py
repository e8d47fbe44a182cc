"""JSON file formats for systems and reports.

Matrices are ``{"re": [[...]], "im": [[...]]}`` with ``"im"`` omitted for
real data, rows first. Floats are written with ``repr`` (shortest string
that round-trips exactly). Fourier coefficients use the ``exp(+i k w0 t)``
convention.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ltpmor.errors import FileFormatError, LtpMorError
from ltpmor.floquet import PeriodicMatrixSampler, SampledLtpSystem
from ltpmor.lti import LtiSystem
from ltpmor.ltp import FloquetFourierSystem


def encode_array(x) -> dict:
    x = np.asarray(x)
    out = {"re": np.real(x).tolist()}
    if np.iscomplexobj(x) and np.any(np.imag(x)):
        out["im"] = np.imag(x).tolist()
    return out


def decode_array(obj, shape=None, what="array") -> np.ndarray:
    if isinstance(obj, dict):
        if "re" not in obj:
            raise FileFormatError(f"{what}: missing 're'")
        try:
            x = np.asarray(obj["re"], dtype=float)
            if "im" in obj:
                x = x + 1j * np.asarray(obj["im"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{what}: {exc}") from exc
    else:
        try:
            x = np.asarray(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{what}: {exc}") from exc
    if shape is not None and x.shape != tuple(shape):
        raise FileFormatError(f"{what}: expected shape {tuple(shape)}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise FileFormatError(f"{what}: non-finite entries")
    return x


def _int(doc, key, what):
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise FileFormatError(f"{what}: '{key}' must be a nonnegative integer")
    return v


def lti_to_dict(sys: LtiSystem) -> dict:
    return {
        "n": sys.n,
        "m": sys.m,
        "p": sys.p,
        "A": encode_array(sys.A),
        "B": encode_array(sys.B),
        "C": encode_array(sys.C),
    }


def lti_from_dict(doc) -> LtiSystem:
    n, m, p = (_int(doc, k, "LTI file") for k in ("n", "m", "p"))
    return LtiSystem(
        decode_array(doc.get("A"), (n, n), "A"),
        decode_array(doc.get("B"), (n, m), "B"),
        decode_array(doc.get("C"), (p, n), "C"),
    )


def _coeffs_to_list(coeffs, N):
    return [{"k": k, **encode_array(coeffs[k + N])} for k in range(-N, N + 1)]


def _coeffs_from_list(items, N, n, what):
    if not isinstance(items, list):
        raise FileFormatError(f"{what} must be a list")
    out = np.zeros((2 * N + 1, n), dtype=complex)
    seen = set()
    for item in items:
        k = item.get("k") if isinstance(item, dict) else None
        if not isinstance(k, int) or not -N <= k <= N:
            raise FileFormatError(f"{what}: index {k!r} outside -{N}..{N}")
        if k in seen:
            raise FileFormatError(f"{what}: index {k} repeated")
        seen.add(k)
        out[k + N] = decode_array(item, (n,), f"{what}[k={k}]")
    if len(seen) != 2 * N + 1:
        missing = sorted(set(range(-N, N + 1)) - seen)
        raise FileFormatError(f"{what}: missing indices {missing}")
    return out if np.any(out.imag) else out.real


def ltp_to_dict(sys: FloquetFourierSystem) -> dict:
    return {
        "omega0": sys.omega0,
        "n": sys.n,
        "N": sys.N,
        "Q": encode_array(sys.Q),
        "b_coeffs": _coeffs_to_list(sys.b, sys.N),
        "c_coeffs": _coeffs_to_list(sys.c, sys.N),
    }


def ltp_from_dict(doc) -> FloquetFourierSystem:
    n, N = _int(doc, "n", "LTP file"), _int(doc, "N", "LTP file")
    omega0 = doc.get("omega0")
    if not isinstance(omega0, (int, float)) or not omega0 > 0 or not math.isfinite(omega0):
        raise FileFormatError("LTP file: 'omega0' must be a positive number")
    Q = decode_array(doc.get("Q"), (n, n), "Q")
    b = _coeffs_from_list(doc.get("b_coeffs"), N, n, "b_coeffs")
    c = _coeffs_from_list(doc.get("c_coeffs"), N, n, "c_coeffs")
    return FloquetFourierSystem(Q, float(omega0), b, c)


def periodic_to_dict(sys: SampledLtpSystem) -> dict:
    A = sys.A
    samples = A.samples if A.samples is not None else np.array([A(t) for t in np.arange(sys.grid) * A.period / sys.grid])
    if len(samples) == 1:
        samples = np.broadcast_to(samples[0], (sys.grid,) + samples.shape[1:])
    return {
        "T": A.period,
        "grid": sys.grid,
        "A_samples": [np.asarray(a).tolist() for a in samples],
        "b_samples": np.asarray(sys.b_samples).tolist(),
        "c_samples": np.asarray(sys.c_samples).tolist(),
    }


def periodic_from_dict(doc) -> SampledLtpSystem:
    T = doc.get("T")
    if not isinstance(T, (int, float)) or not T > 0:
        raise FileFormatError("periodic file: 'T' must be positive")
    grid = _int(doc, "grid", "periodic file")
    if grid == 0 or grid & (grid - 1):
        raise FileFormatError("periodic file: 'grid' must be a power of two")
    A = decode_array(doc.get("A_samples"), None, "A_samples")
    if A.ndim != 3 or A.shape[0] != grid or A.shape[1] != A.shape[2]:
        raise FileFormatError(f"A_samples must be ({grid}, n, n), got {A.shape}")
    n = A.shape[1]
    b = decode_array(doc.get("b_samples"), (grid, n), "b_samples")
    c = decode_array(doc.get("c_samples"), (grid, n), "c_samples")
    if np.all(A == A[0]):
        sampler = PeriodicMatrixSampler.constant(A[0], T)
    else:
        sampler = PeriodicMatrixSampler(T, samples=A)
    return SampledLtpSystem(sampler, b, c)


def system_to_dict(sys) -> dict:
    if isinstance(sys, LtiSystem):
        return lti_to_dict(sys)
    if isinstance(sys, FloquetFourierSystem):
        return ltp_to_dict(sys)
    if isinstance(sys, SampledLtpSystem):
        return periodic_to_dict(sys)
    raise TypeError(f"cannot serialise {type(sys).__name__}")


def system_from_dict(doc):
    """Dispatch on the keys present: LTP (``omega0``), periodic (``A_samples``) or LTI (``A``)."""
    if not isinstance(doc, dict):
        raise FileFormatError("top-level JSON value must be an object")
    if "omega0" in doc:
        return ltp_from_dict(doc)
    if "A_samples" in doc:
        return periodic_from_dict(doc)
    if "A" in doc:
        return lti_from_dict(doc)
    raise FileFormatError("unrecognised system file (expected LTI, LTP or periodic-matrix keys)")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc


def load_system(path):
    try:
        return system_from_dict(read_json(path))
    except FileFormatError:
        raise
    except LtpMorError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def write_json(path, doc) -> None:
    atomic_write_text(path, dumps(doc))


def save_system(path, sys) -> None:
    write_json(path, system_to_dict(sys))
