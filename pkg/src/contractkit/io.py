"""File parsing and report serialization.

Laws and channels are JSON files (a list, or an object with ``mass`` /
``rows`` and optional ``labels``), parsed with exact decimals before any
validation. Graphs are plain text: the vertex count on the first line, then
one ``u v`` pair per line. Named shorthands such as ``bsc_0.1`` stand in for
files on the command line.
"""

from __future__ import annotations

import json
import math
import re
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import errors as E
from .errors import ContractError
from .foundation import TOL, Alphabet, Channel, Dist, Graph, bern, bsc, identity_channel, uniform

DIGITS = 12


def _load_json(path: Path):
    try:
        text = path.read_text()
    except OSError as err:
        raise ContractError(E.PARSE, f"{path}: {err.strerror}") from err
    try:
        return json.loads(text, parse_float=Decimal, parse_int=Decimal)
    except json.JSONDecodeError as err:
        raise ContractError(E.PARSE, f"{path}:{err.lineno}: {err.msg}") from err


def _decimal_vector(values, where: str):
    if not isinstance(values, list) or not values:
        raise ContractError(E.PARSE, f"{where}: expected a nonempty list of numbers")
    out = []
    for i, v in enumerate(values):
        if isinstance(v, str):
            try:
                v = Decimal(v)
            except InvalidOperation as err:
                raise ContractError(E.PARSE, f"{where}: entry {i} is not a number") from err
        if not isinstance(v, Decimal) or not v.is_finite():
            raise ContractError(E.PARSE, f"{where}: entry {i} is not a finite number")
        out.append(v)
    return out


def _check_mass(vals, where: str, row: int | None = None):
    label = f"row {row}" if row is not None else "mass"
    for i, v in enumerate(vals):
        if v < 0:
            raise ContractError(E.VALIDATION, f"{where}: {label} has negative entry at index {i}",
                                row if row is not None else i)
    total = sum(vals, Decimal(0))
    if abs(total - 1) > Decimal(str(TOL)):
        raise ContractError(E.VALIDATION, f"{where}: {label} sums to {total}, not 1", row)


def parse_dist(obj, where: str = "<dist>") -> Dist:
    labels = None
    if isinstance(obj, dict):
        labels = obj.get("labels")
        obj = obj.get("mass")
    vals = _decimal_vector(obj, where)
    _check_mass(vals, where)
    mass = np.array([float(v) for v in vals])
    alpha = Alphabet(len(vals), tuple(str(x) for x in labels)) if labels else None
    return Dist(mass / mass.sum(), alpha)


def parse_channel(obj, where: str = "<channel>") -> Channel:
    if isinstance(obj, dict):
        obj = obj.get("rows")
    if not isinstance(obj, list) or not obj:
        raise ContractError(E.PARSE, f"{where}: expected a list of rows")
    rows = []
    for r, row in enumerate(obj):
        vals = _decimal_vector(row, f"{where} row {r}")
        _check_mass(vals, where, r)
        rows.append([float(v) for v in vals])
    if len({len(r) for r in rows}) != 1:
        raise ContractError(E.PARSE, f"{where}: rows have different lengths")
    m = np.array(rows)
    return Channel(m / m.sum(axis=1, keepdims=True))


_NAMED = re.compile(r"^(bern|uniform|bsc|identity)_(half|[0-9.eE+-]+)$")


def named(spec: str):
    """Resolve shorthands: bern_half, bern_<p>, uniform_<n>, bsc_<eps>, identity_<n>."""
    m = _NAMED.match(spec)
    if not m:
        return None
    kind, arg = m.groups()
    try:
        if kind == "bern":
            return bern(0.5 if arg == "half" else float(arg))
        if kind == "uniform":
            return uniform(int(arg))
        if kind == "bsc":
            return bsc(float(arg))
        return identity_channel(int(arg))
    except ValueError as err:
        raise ContractError(E.PARSE, f"bad shorthand {spec!r}") from err


def load_dist(spec: str) -> Dist:
    obj = named(spec)
    if isinstance(obj, Dist):
        return obj
    if obj is not None:
        raise ContractError(E.VALIDATION, f"{spec!r} names a channel, not a law")
    return parse_dist(_load_json(Path(spec)), spec)


def load_channel(spec: str) -> Channel:
    obj = named(spec)
    if isinstance(obj, Channel):
        return obj
    if obj is not None:
        raise ContractError(E.VALIDATION, f"{spec!r} names a law, not a channel")
    return parse_channel(_load_json(Path(spec)), spec)


def parse_graph_text(text: str, where: str = "<graph>") -> Graph:
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise ContractError(E.PARSE, f"{where}: empty graph file")
    lineno, first = lines[0]
    try:
        n = int(first)
    except ValueError as err:
        raise ContractError(E.PARSE, f"{where}:{lineno}: expected the vertex count") from err
    if n < 1:
        raise ContractError(E.VALIDATION, f"{where}:{lineno}: vertex count must be positive")
    edges = []
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ContractError(E.PARSE, f"{where}:{lineno}: expected 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as err:
            raise ContractError(E.PARSE, f"{where}:{lineno}: vertices must be integers") from err
        if not (0 <= u < n and 0 <= v < n):
            raise ContractError(E.VALIDATION, f"{where}:{lineno}: vertex out of range 0..{n - 1}")
        edges.append((u, v))
    return Graph(n, edges)


def load_graph(path: str) -> Graph:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ContractError(E.PARSE, f"{path}: {err.strerror}") from err
    return parse_graph_text(text, path)


# ---------------------------------------------------------------------------
# reports


def _round(x: float):
    if not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(f"{x:.{DIGITS}g}")


def to_plain(obj):
    """Convert numpy containers and dataclasses into JSON-ready values with rounded floats."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Decimal)):
        return _round(float(obj))
    if isinstance(obj, Dist):
        return to_plain(obj.mass)
    if isinstance(obj, Channel):
        return to_plain(obj.rows)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_report(report) -> str:
    return json.dumps(to_plain(report), indent=2, sort_keys=True)


def loads_report(text: str):
    return json.loads(text)
