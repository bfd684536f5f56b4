"""Text formats: matrix/pair/certificate JSON, trace CSV and flat key=value configs.

Matrices are stored row-major as ``[re, im]`` pairs. Floats go through
``repr`` (via :mod:`json`), so every writer here round-trips exactly through
the matching reader.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .core import DensityMatrix, LindbladPair, fidelity, validate_density
from .errors import ConfigParse, IoFailure
from .verify import Certificate


def matrix_to_obj(m) -> dict:
    m = np.asarray(m.matrix if isinstance(m, DensityMatrix) else m, dtype=complex)
    obj = {"dim": int(m.shape[0]), "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m]}
    return obj


def matrix_from_obj(obj) -> np.ndarray:
    try:
        n = int(obj["dim"])
        arr = np.array(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParse(f"malformed matrix object: {exc}") from exc
    if arr.shape != (n, n, 2):
        raise ConfigParse(f"matrix entries have shape {arr.shape}, expected {(n, n, 2)}")
    return arr[..., 0] + 1j * arr[..., 1]


def density_to_obj(rho: DensityMatrix) -> dict:
    obj = matrix_to_obj(rho)
    obj["spectrum"] = [float(x) for x in rho.spectrum]
    return obj


def density_from_obj(obj) -> DensityMatrix:
    return validate_density(matrix_from_obj(obj))


def pair_to_obj(pair: LindbladPair, provenance: dict | None = None) -> dict:
    obj = {
        "provenance": provenance or {},
        "hamiltonian": matrix_to_obj(pair.hamiltonian),
        "lindblad": matrix_to_obj(pair.lindblad),
    }
    if pair.extra:
        obj["extra"] = [matrix_to_obj(x) for x in pair.extra]
    return obj


def pair_from_obj(obj) -> tuple[LindbladPair, dict]:
    try:
        h = matrix_from_obj(obj["hamiltonian"])
        l = matrix_from_obj(obj["lindblad"])
    except KeyError as exc:
        raise ConfigParse(f"pair file lacks {exc}") from exc
    extra = tuple(matrix_from_obj(x) for x in obj.get("extra", []))
    try:
        return LindbladPair(h, l, extra), dict(obj.get("provenance", {}))
    except ValueError as exc:
        raise ConfigParse(str(exc)) from exc


def certificate_from_obj(obj) -> Certificate:
    try:
        return Certificate(
            obj["stationarity_residual"],
            tuple(obj["block_residuals"]),
            obj["kernel_dim"],
            obj["gas"],
            obj["min_pair_overlap"],
            obj["min_H_coupling"],
            obj["gap"],
            list(obj["notes"]),
        )
    except KeyError as exc:
        raise ConfigParse(f"certificate lacks {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=True) + "\n"


def write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def write_json(path, obj) -> None:
    write_text(path, dumps(obj))


def read_json(path):
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}: {exc}") from exc


def load_matrix(path) -> np.ndarray:
    return matrix_from_obj(read_json(path))


def load_density(path) -> DensityMatrix:
    return density_from_obj(read_json(path))


def load_pair(path):
    return pair_from_obj(read_json(path))


def load_certificate(path) -> Certificate:
    return certificate_from_obj(read_json(path))


def trace_csv(trace, target, basis=None) -> str:
    """Rows ``t,trace_distance,fidelity,p_1..p_N``; populations are taken in ``basis``
    (the target eigenbasis), which defaults to the standard one."""
    target = np.asarray(target.matrix if isinstance(target, DensityMatrix) else target)
    n = target.shape[0]
    basis = np.eye(n) if basis is None else np.asarray(basis)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "trace_distance", "fidelity", *(f"p_{k + 1}" for k in range(n))])
    for t, d, s in zip(trace.times, trace.distances, trace.states):
        pops = np.einsum("ij,jk,ki->i", basis.conj().T, s.matrix, basis).real
        w.writerow([repr(float(t)), repr(float(d)), repr(fidelity(s.matrix, target)), *(repr(float(p)) for p in pops)])
    return buf.getvalue()


def eigenvalue_csv(eigenvalues) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im"])
    for z in eigenvalues:
        w.writerow([repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigParse("empty CSV")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(rows[0]))
    except ValueError as exc:
        raise ConfigParse(f"bad CSV value: {exc}") from exc
    return rows[0], data


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. Values stay strings;
    list values are comma separated and split by the consumer."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParse(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigParse(f"line {lineno}: empty key")
        if key in out:
            raise ConfigParse(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def format_config(cfg: dict) -> str:
    lines = []
    for k, v in cfg.items():
        if isinstance(v, (list, tuple)):
            v = ",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def parse_floats(value: str, name: str = "value") -> list[float]:
    try:
        vals = [float(x) for x in value.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigParse(f"{name}: {exc}") from exc
    if not vals:
        raise ConfigParse(f"{name}: empty list")
    return vals
