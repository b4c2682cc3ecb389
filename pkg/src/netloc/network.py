"""Noisy-distance network instances and their constraint functions.

Constraint indexing (r = 2 * n_edges):

* ``k = 0``            sum of squared norms of all node positions
* ``1 <= k <= n0``     squared length of edge ``k``
* ``n0 < k <= r``      reflected lower-bound constraint ``2*lower_sq - |x_i - x_j|^2``

Node indices are 0-based in memory; the file layer converts from 1-based labels.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstraintIndexError,
    DegenerateNetworkError,
    InvalidNetworkError,
    ParameterError,
    ShapeError,
)


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    lower_sq: float
    upper_sq: float


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """Immutable anchor-free network with squared distance bounds per edge."""

    node_count: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    lower_sq: np.ndarray
    upper_sq: np.ndarray
    dimension: int = 2
    _incidence: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise InvalidNetworkError(f"node_count must be positive, got {n}")
        if self.dimension != 2:
            raise InvalidNetworkError("only planar networks (dimension 2) are supported")
        ei = np.asarray(self.edge_i, dtype=np.intp).ravel()
        ej = np.asarray(self.edge_j, dtype=np.intp).ravel()
        lo = np.asarray(self.lower_sq, dtype=float).ravel()
        up = np.asarray(self.upper_sq, dtype=float).ravel()
        if not (len(ei) == len(ej) == len(lo) == len(up)):
            raise InvalidNetworkError("edge arrays have inconsistent lengths")
        if len(ei) == 0:
            raise InvalidNetworkError("a network needs at least one edge")
        if ei.min() < 0 or ej.min() < 0 or ei.max() >= n or ej.max() >= n:
            raise InvalidNetworkError("edge endpoint outside node range")
        if np.any(ei == ej):
            raise InvalidNetworkError("self-loop edges are not allowed")
        pairs = {(min(a, b), max(a, b)) for a, b in zip(ei.tolist(), ej.tolist())}
        if len(pairs) != len(ei):
            raise InvalidNetworkError("duplicate edges are not allowed")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise InvalidNetworkError("bounds must be finite")
        if np.any(lo <= 0):
            raise InvalidNetworkError("lower_sq must be strictly positive")
        bad = np.flatnonzero(lo > up)
        if bad.size:
            raise InvalidNetworkError(f"lower_sq > upper_sq on edge(s) {bad.tolist()}")

        for name, arr in (("edge_i", ei), ("edge_j", ej), ("lower_sq", lo), ("upper_sq", up)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "node_count", n)

        inc = np.zeros((len(ei), n))
        inc[np.arange(len(ei)), ei] = 1.0
        inc[np.arange(len(ei)), ej] = -1.0
        inc.setflags(write=False)
        object.__setattr__(self, "_incidence", inc)

    @classmethod
    def from_edges(cls, node_count: int, edges, dimension: int = 2) -> "NetworkInstance":
        """Build from an iterable of ``Edge`` or ``(i, j, lower_sq, upper_sq)`` tuples (0-based)."""
        rows = [(e.i, e.j, e.lower_sq, e.upper_sq) if isinstance(e, Edge) else tuple(e) for e in edges]
        if not rows:
            raise InvalidNetworkError("a network needs at least one edge")
        ei, ej, lo, up = zip(*rows)
        return cls(node_count, np.array(ei), np.array(ej), np.array(lo), np.array(up), dimension)

    @property
    def n_edges(self) -> int:
        return len(self.edge_i)

    @property
    def num_constraints(self) -> int:
        """r = 2 * n_edges (the objective term k=0 is not counted)."""
        return 2 * self.n_edges

    @property
    def incidence(self) -> np.ndarray:
        """Signed edge-node incidence matrix, +1 at ``i`` and -1 at ``j``."""
        return self._incidence

    @property
    def edges(self) -> list[Edge]:
        return [
            Edge(int(a), int(b), float(lo), float(up))
            for a, b, lo, up in zip(self.edge_i, self.edge_j, self.lower_sq, self.upper_sq)
        ]

    def constraint_bounds(self) -> np.ndarray:
        """Right-hand sides c_1..c_r: upper_sq for edge constraints, lower_sq for reflected ones."""
        return np.concatenate([self.upper_sq, self.lower_sq])

    def points(self, x) -> np.ndarray:
        """View a flat configuration as an ``(n, 2)`` array, validating its length."""
        x = np.asarray(x, dtype=float)
        expected = self.dimension * self.node_count
        if x.ndim == 2 and x.shape == (self.node_count, self.dimension):
            return x
        if x.ndim != 1 or x.shape[0] != expected:
            raise ShapeError(f"configuration must have length {expected}, got shape {x.shape}")
        return x.reshape(self.node_count, self.dimension)

    def edge_lengths_sq(self, x) -> np.ndarray:
        diff = self._incidence @ self.points(x)
        return np.einsum("ij,ij->i", diff, diff)


def _check_index(net: NetworkInstance, k: int) -> int:
    k = int(k)
    if not 0 <= k <= net.num_constraints:
        raise ConstraintIndexError(f"constraint index {k} outside 0..{net.num_constraints}")
    return k


def all_constraint_values(net: NetworkInstance, x) -> np.ndarray:
    """Vector ``[f_0(x), f_1(x), ..., f_r(x)]``."""
    pts = net.points(x)
    sq = net.edge_lengths_sq(pts)
    return np.concatenate([[np.sum(pts * pts)], sq, 2.0 * net.lower_sq - sq])


def constraint_value(net: NetworkInstance, k: int, x) -> float:
    k = _check_index(net, k)
    pts = net.points(x)
    if k == 0:
        return float(np.sum(pts * pts))
    e = (k - 1) % net.n_edges
    diff = pts[net.edge_i[e]] - pts[net.edge_j[e]]
    sq = float(diff @ diff)
    if k <= net.n_edges:
        return sq
    return 2.0 * float(net.lower_sq[e]) - sq


def constraint_gradient(net: NetworkInstance, k: int, x) -> np.ndarray:
    """Gradient of ``f_k`` as a flat vector of length ``2 * n``."""
    k = _check_index(net, k)
    pts = net.points(x)
    if k == 0:
        return 2.0 * pts.ravel()
    e = (k - 1) % net.n_edges
    i, j = net.edge_i[e], net.edge_j[e]
    g = np.zeros_like(pts)
    diff = pts[i] - pts[j]
    g[i] = 2.0 * diff
    g[j] = -2.0 * diff
    if k > net.n_edges:
        g = -g
    return g.ravel()


@dataclass(frozen=True)
class FeasibilityReport:
    max_relative_violation: float
    violating_constraint_indices: list[int]
    feasible: bool
    tolerance: float


def feasibility_check(net: NetworkInstance, x, rel_tol: float) -> FeasibilityReport:
    """Relative violation ``max(0, (f_k - c_k) / c_k)`` over the r distance constraints."""
    if rel_tol < 0:
        raise ParameterError("rel_tol must be non-negative")
    values = all_constraint_values(net, x)[1:]
    rel = np.maximum(0.0, (values - net.constraint_bounds()) / net.constraint_bounds())
    worst = float(rel.max())
    violating = (np.flatnonzero(rel > rel_tol) + 1).tolist()
    return FeasibilityReport(worst, violating, worst <= rel_tol, float(rel_tol))


def network_density(net: NetworkInstance) -> float:
    n = net.node_count
    if n < 2:
        raise DegenerateNetworkError("density is undefined for fewer than two nodes")
    return 2.0 * net.n_edges / (n * (n - 1))
