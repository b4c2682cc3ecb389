"""Plain-text file formats.

Instance file::

    n d n0
    i j lower_sq upper_sq      (n0 lines, 1-based node labels)

Positions file (ground truth or estimate)::

    i x y                      (n lines, 1-based)

Reals are written with 12 significant digits.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidNetworkError, ParseError
from .network import NetworkInstance


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


def format_instance(net: NetworkInstance) -> str:
    lines = [f"{net.node_count} {net.dimension} {net.n_edges}"]
    for i, j, lo, up in zip(net.edge_i, net.edge_j, net.lower_sq, net.upper_sq):
        lines.append(f"{i + 1} {j + 1} {_fmt(lo)} {_fmt(up)}")
    return "\n".join(lines) + "\n"


def write_instance(net: NetworkInstance, path) -> None:
    Path(path).write_text(format_instance(net))


def _rows(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_instance(text: str, path=None) -> NetworkInstance:
    rows = list(_rows(text))
    if not rows:
        raise ParseError("empty instance file", path)
    lineno, head = rows[0]
    try:
        n, d, m = (int(v) for v in head)
    except ValueError:
        raise ParseError(f"header must be 'n d n0', got {' '.join(head)!r}", path, lineno) from None
    if len(rows) - 1 != m:
        raise ParseError(f"header announces {m} edges, found {len(rows) - 1}", path, lineno)
    ei, ej, lo, up = [], [], [], []
    for lineno, fields in rows[1:]:
        if len(fields) != 4:
            raise ParseError("edge line must be 'i j lower_sq upper_sq'", path, lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
            a, b = float(fields[2]), float(fields[3])
        except ValueError:
            raise ParseError(f"cannot parse edge line {' '.join(fields)!r}", path, lineno) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"node label out of range 1..{n}", path, lineno)
        ei.append(i - 1)
        ej.append(j - 1)
        lo.append(a)
        up.append(b)
    try:
        return NetworkInstance(n, np.array(ei), np.array(ej), np.array(lo), np.array(up), dimension=d)
    except InvalidNetworkError as exc:
        raise ParseError(str(exc), path) from exc


def read_instance(path) -> NetworkInstance:
    return parse_instance(Path(path).read_text(), path)


def format_positions(x) -> str:
    pts = np.asarray(x, dtype=float).reshape(-1, 2)
    return "".join(f"{k + 1} {_fmt(px)} {_fmt(py)}\n" for k, (px, py) in enumerate(pts))


def write_positions(x, path) -> None:
    Path(path).write_text(format_positions(x))


def parse_positions(text: str, path=None) -> np.ndarray:
    """Flat coordinate array ordered by node label."""
    found = {}
    for lineno, fields in _rows(text):
        if len(fields) != 3:
            raise ParseError("position line must be 'i x y'", path, lineno)
        try:
            label = int(fields[0])
            point = (float(fields[1]), float(fields[2]))
        except ValueError:
            raise ParseError(f"cannot parse position line {' '.join(fields)!r}", path, lineno) from None
        if label in found:
            raise ParseError(f"duplicate node label {label}", path, lineno)
        found[label] = point
    if not found:
        raise ParseError("no positions found", path)
    n = len(found)
    if sorted(found) != list(range(1, n + 1)):
        raise ParseError("node labels must be exactly 1..n", path)
    return np.array([found[k] for k in range(1, n + 1)]).ravel()


def read_positions(path) -> np.ndarray:
    return parse_positions(Path(path).read_text(), path)
