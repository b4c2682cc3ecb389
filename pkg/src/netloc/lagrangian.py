"""Max-ratio Lagrangian, its log-sum-exp smoothing, and the smoothing gradient.

The ratio vector is ``rho_k = f_k(x) / c_k`` for ``k = 0..r`` where ``c_0`` is the
free objective level and ``c_1..c_r`` come from the network bounds. The smoothing
sums over all ``r + 1`` terms, so the gap to the true max is at most
``mu * log(r + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .network import NetworkInstance, all_constraint_values


@dataclass(frozen=True, eq=False)
class LagrangianCoefficients:
    c0: float
    edge_coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.edge_coeffs, dtype=float).ravel()
        if not np.isfinite(self.c0) or self.c0 <= 0:
            raise ParameterError(f"c0 must be a positive finite number, got {self.c0}")
        if np.any(coeffs <= 0) or not np.all(np.isfinite(coeffs)):
            raise ParameterError("all constraint coefficients must be positive and finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "edge_coeffs", coeffs)

    @classmethod
    def for_network(cls, net: NetworkInstance, c0: float) -> "LagrangianCoefficients":
        return cls(c0, net.constraint_bounds())

    @property
    def r(self) -> int:
        return len(self.edge_coeffs)

    def full(self) -> np.ndarray:
        """``[c_0, c_1, ..., c_r]``."""
        return np.concatenate([[self.c0], self.edge_coeffs])


@dataclass(frozen=True)
class SmoothedEvaluation:
    value: float
    gradient: np.ndarray
    active_weights: np.ndarray


def _check(net: NetworkInstance, coef: LagrangianCoefficients) -> None:
    if coef.r != net.num_constraints:
        raise ShapeError(f"coefficients have r={coef.r}, network has r={net.num_constraints}")


def ratios(net: NetworkInstance, coef: LagrangianCoefficients, x) -> np.ndarray:
    _check(net, coef)
    rho = all_constraint_values(net, x) / coef.full()
    if not np.all(np.isfinite(rho)):
        raise NumericError("non-finite constraint ratio (is x finite?)")
    return rho


def lagrangian_value(net: NetworkInstance, coef: LagrangianCoefficients, x) -> float:
    """``max_k f_k(x) / c_k`` including the objective term ``k = 0``."""
    return float(ratios(net, coef, x).max())


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise ParameterError(f"smoothing parameter must be positive, got {mu}")


def _logsumexp(rho: np.ndarray, mu: float) -> tuple[float, np.ndarray]:
    top = rho.max()
    e = np.exp((rho - top) / mu)
    s = e.sum()
    return top + mu * np.log(s), e / s


def smoothed_value(net: NetworkInstance, coef: LagrangianCoefficients, x, mu: float) -> float:
    _check_mu(mu)
    value, _ = _logsumexp(ratios(net, coef, x), mu)
    return float(value)


def smoothed_evaluate(net: NetworkInstance, coef: LagrangianCoefficients, x, mu: float) -> SmoothedEvaluation:
    """Smoothed value, its gradient and the softmax weights in one pass."""
    _check_mu(mu)
    _check(net, coef)
    pts = net.points(x)
    inc = net.incidence
    diff = inc @ pts
    sq = np.einsum("ij,ij->i", diff, diff)
    values = np.concatenate([[np.sum(pts * pts)], sq, 2.0 * net.lower_sq - sq])
    rho = values / coef.full()
    if not np.all(np.isfinite(rho)):
        raise NumericError("non-finite constraint ratio (is x finite?)")
    value, w = _logsumexp(rho, mu)
    m = net.n_edges
    c = coef.edge_coeffs
    edge_weight = w[1 : m + 1] / c[:m] - w[m + 1 :] / c[m:]
    grad = (2.0 * w[0] / coef.c0) * pts + 2.0 * (inc.T @ (edge_weight[:, None] * diff))
    return SmoothedEvaluation(float(value), grad.ravel(), w)


def smoothed_gradient(net: NetworkInstance, coef: LagrangianCoefficients, x, mu: float) -> np.ndarray:
    return smoothed_evaluate(net, coef, x, mu).gradient


def smoothing_gap_bound(mu: float, num_terms: int) -> float:
    """Worst-case excess of the smoothed value over the true max for ``num_terms`` ratios."""
    _check_mu(mu)
    if num_terms < 1:
        raise ParameterError("num_terms must be at least 1")
    return float(mu * np.log(num_terms))
