"""Smoothing-gradient descent for ``min_x max_k f_k(x)/c_k`` over a coordinate box.

Each outer iteration takes a steepest-descent step on the log-sum-exp smoothing at
the current ``mu`` with a bisection/doubling Wolfe line search, then shrinks ``mu``
by ``gamma1`` once the gradient norm at the new point falls below ``gamma * mu``.
The run stops when ``mu < epsilon``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DirectionError, LocalizationError, NumericError, ParameterError, SolverError
from .lagrangian import LagrangianCoefficients, SmoothedEvaluation, lagrangian_value, smoothed_evaluate
from .network import NetworkInstance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    sigma1: float = 0.1
    sigma2: float = 0.9
    gamma: float = 1.0
    gamma1: float = 0.5
    epsilon: float = 1e-4
    mu0: float = 1.0
    max_outer_iterations: int = 200_000
    max_line_search_iterations: int = 60
    multistart_count: int = 5
    rng_seed: int = 0
    screen_keep: int | None = None
    screen_mu: float = 1e-2

    def __post_init__(self):
        if not 0 < self.sigma1 < 0.5:
            raise ParameterError(f"sigma1 must lie in (0, 0.5), got {self.sigma1}")
        if not self.sigma1 < self.sigma2 < 1:
            raise ParameterError(f"sigma2 must lie in (sigma1, 1), got {self.sigma2}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.gamma1 < 1:
            raise ParameterError(f"gamma1 must lie in (0, 1), got {self.gamma1}")
        if not self.epsilon > 0 or not self.mu0 > 0:
            raise ParameterError("epsilon and mu0 must be positive")
        if self.max_outer_iterations < 1 or self.max_line_search_iterations < 1:
            raise ParameterError("iteration caps must be at least 1")
        if self.multistart_count < 1:
            raise ParameterError("multistart_count must be at least 1")
        if self.screen_keep is not None and self.screen_keep < 1:
            raise ParameterError("screen_keep must be at least 1 (or None to disable screening)")
        if not self.screen_mu > 0:
            raise ParameterError("screen_mu must be positive")


@dataclass(frozen=True)
class BoxRegion:
    """The same closed interval ``[lower, upper]`` applied to every coordinate."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"box needs lower < upper, got [{self.lower}, {self.upper}]")

    @classmethod
    def symmetric(cls, half_width: float) -> "BoxRegion":
        return cls(-float(half_width), float(half_width))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size)


@dataclass
class LineSearchResult:
    step: float
    verified: bool
    evaluation: SmoothedEvaluation
    trials: int


@dataclass
class StepRecord:
    """One outer iteration; enough to re-check the Wolfe conditions independently."""

    iteration: int
    mu: float
    smoothed_value: float
    grad_norm: float
    step: float
    next_value: float
    next_grad_norm: float
    verified: bool
    projected: bool
    accepted: bool
    x: np.ndarray | None = None
    direction: np.ndarray | None = None


@dataclass
class MinimaxSolution:
    x_star: np.ndarray
    smoothed_value: float
    exact_max_value: float
    final_mu: float
    final_gradient_norm: float
    outer_iterations: int
    converged: bool
    trace: list[StepRecord] = field(default_factory=list, repr=False)
    start_index: int = 0
    multistart_iterations: int = 0


def wolfe_line_search(
    net: NetworkInstance,
    coef: LagrangianCoefficients,
    x,
    d,
    mu: float,
    sigma1: float = 0.1,
    sigma2: float = 0.9,
    max_iters: int = 60,
    current: SmoothedEvaluation | None = None,
    objective=None,
) -> LineSearchResult:
    """Find ``t`` with sufficient decrease (``sigma1``) and curvature (``sigma2``).

    Starts at ``t = 1``; a failed decrease test halves toward the lower end of the
    bracket, a failed curvature test doubles (unbounded) or bisects (bounded).
    ``objective`` may replace the smoothed Lagrangian with any callable
    ``x -> (value, gradient)``; it is used by tests on closed-form functions.
    If ``max_iters`` trials pass without acceptance, the tried step with the
    lowest value is returned with ``verified=False``.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if objective is None:
        def evaluate(z):
            return smoothed_evaluate(net, coef, z, mu)
    else:
        def evaluate(z):
            value, grad = objective(z)
            return SmoothedEvaluation(float(value), np.asarray(grad, dtype=float), np.ones(1))

    if current is None:
        current = evaluate(x)
    if not np.any(d):
        raise DirectionError("search direction is zero")
    slope = float(current.gradient @ d)
    if not slope < 0:
        raise DirectionError(f"direction is not a descent direction (g.d = {slope:g})")

    lo, hi, t = 0.0, np.inf, 1.0
    best_t, best_ev = None, None
    for trial in range(1, max_iters + 1):
        ev = evaluate(x + t * d)
        if best_ev is None or ev.value < best_ev.value:
            best_t, best_ev = t, ev
        if ev.value > current.value + sigma1 * t * slope:
            hi = t
            t = 0.5 * (lo + hi)
        elif float(ev.gradient @ d) < sigma2 * slope:
            lo = t
            t = 2.0 * lo if hi == np.inf else 0.5 * (lo + hi)
        else:
            return LineSearchResult(t, True, ev, trial)
    return LineSearchResult(best_t, False, best_ev, max_iters)


def smoothing_gradient_solve(
    net: NetworkInstance,
    coef: LagrangianCoefficients,
    x0,
    box: BoxRegion,
    cfg: SolverConfig,
    mu0: float | None = None,
    trace: bool = False,
    engine: str = "compiled",
    stop_mu: float | None = None,
    max_iterations: int | None = None,
) -> MinimaxSolution:
    """Run the smoothing gradient method from ``x0``; ``mu0`` overrides ``cfg.mu0``.

    ``stop_mu`` pauses the run as soon as ``mu`` drops below it (used for
    screening); calling again with ``x0=sol.x_star, mu0=sol.final_mu`` resumes
    exactly where it stopped. ``max_iterations`` overrides the configured cap.
    ``engine="python"`` runs the numpy reference loop instead of the compiled one.
    Both follow the same iteration; they can drift apart only through rounding.
    """
    mu = cfg.mu0 if mu0 is None else float(mu0)
    if not mu > 0:
        raise ParameterError(f"initial smoothing parameter must be positive, got {mu}")
    x = box.clip(np.asarray(x0, dtype=float).ravel())
    net.points(x)
    if coef.r != net.num_constraints:
        raise ParameterError(f"coefficients have r={coef.r}, network has r={net.num_constraints}")
    if not np.all(np.isfinite(x)):
        raise NumericError("starting point is not finite")
    threshold = cfg.epsilon if stop_mu is None else max(cfg.epsilon, float(stop_mu))
    cap = cfg.max_outer_iterations if max_iterations is None else int(max_iterations)
    if cap < 0:
        raise ParameterError("max_iterations must be non-negative")
    if engine == "python":
        return _solve_python(net, coef, x, box, cfg, mu, trace, threshold, cap)
    if engine != "compiled":
        raise ParameterError(f"unknown engine {engine!r}")

    x, mu, iterations, tested, value, rows, xs, ds = _kernels.solve(
        x, net.edge_i.astype(np.int64), net.edge_j.astype(np.int64), np.asarray(net.lower_sq), coef.full(),
        float(box.lower), float(box.upper), mu, threshold, cfg.gamma, cfg.gamma1, cfg.sigma1, cfg.sigma2,
        cap, cfg.max_line_search_iterations, trace, trace,
    )
    if not (np.isfinite(value) and np.all(np.isfinite(x))):
        raise NumericError("solver produced a non-finite iterate")
    records = []
    for it, row in enumerate(rows):
        records.append(
            StepRecord(
                it, row[_kernels.MU], row[_kernels.VALUE], row[_kernels.GNORM], row[_kernels.STEP],
                row[_kernels.NEXT_VALUE], row[_kernels.NEXT_GNORM], bool(row[_kernels.VERIFIED]),
                bool(row[_kernels.PROJECTED]), bool(row[_kernels.ACCEPTED]), xs[it], ds[it],
            )
        )
    return _finish(net, coef, x, mu, cfg, iterations, tested, value, records)


def _finish(net, coef, x, mu, cfg, iterations, tested, value, records) -> MinimaxSolution:
    converged = mu < cfg.epsilon
    if not converged:
        log.debug("smoothing gradient stopped at iteration cap with mu=%g", mu)
    return MinimaxSolution(
        x_star=x,
        smoothed_value=float(value),
        exact_max_value=lagrangian_value(net, coef, x),
        final_mu=float(mu),
        final_gradient_norm=float(tested),
        outer_iterations=int(iterations),
        converged=converged,
        trace=records,
    )


def _solve_python(net, coef, x, box, cfg, mu, trace, threshold, cap) -> MinimaxSolution:
    ev = smoothed_evaluate(net, coef, x, mu)
    records: list[StepRecord] = []
    last_tested_norm = float(np.linalg.norm(ev.gradient))
    iteration = 0

    while mu >= threshold and iteration < cap:
        g = ev.gradient
        gnorm = float(np.linalg.norm(g))
        shrink = False
        step, verified, projected, accepted = 0.0, True, False, False
        if gnorm == 0.0:
            new_x, new_ev = x, ev
        else:
            d = -g
            ls = wolfe_line_search(
                net, coef, x, d, mu, cfg.sigma1, cfg.sigma2, cfg.max_line_search_iterations, current=ev
            )
            step, verified = ls.step, ls.verified
            new_x = x + step * d
            clipped = box.clip(new_x)
            projected = not np.array_equal(clipped, new_x)
            new_x = clipped
            new_ev = smoothed_evaluate(net, coef, new_x, mu) if projected else ls.evaluation
            accepted = True
            if not verified and not new_ev.value < ev.value:
                new_x, new_ev, accepted, shrink = x, ev, False, True
        tested = float(np.linalg.norm(new_ev.gradient))
        if trace:
            records.append(
                StepRecord(
                    iteration, mu, ev.value, gnorm, step, new_ev.value, tested, verified, projected, accepted,
                    x.copy(), (-g).copy(),
                )
            )
        if shrink or tested < cfg.gamma * mu:
            last_tested_norm = tested
            mu *= cfg.gamma1
            x = new_x
            ev = smoothed_evaluate(net, coef, x, mu)
        else:
            x, ev = new_x, new_ev
        iteration += 1

    if mu >= threshold:
        last_tested_norm = float(np.linalg.norm(ev.gradient))
    return _finish(net, coef, x, mu, cfg, iteration, last_tested_norm, ev.value, records)


def start_points(box: BoxRegion, size: int, count: int, seed: int) -> list[np.ndarray]:
    """Deterministic uniform starts; start ``s`` draws from its own stream ``(seed, s)``."""
    return [box.sample(np.random.default_rng([seed, s]), size) for s in range(count)]


def minimize_lagrangian(
    net: NetworkInstance,
    coef: LagrangianCoefficients,
    box: BoxRegion,
    cfg: SolverConfig,
    mu0: float | None = None,
    warm_starts=(),
    trace: bool = False,
) -> MinimaxSolution:
    """Best (lowest exact max-ratio) solution over seeded random starts plus ``warm_starts``.

    With ``cfg.screen_keep`` set, every start first runs until ``mu`` drops below
    ``cfg.screen_mu``; only the ``screen_keep`` best of those (by exact max-ratio)
    are resumed to full convergence. Resuming is exact, so a kept start follows
    the same trajectory it would have without screening.
    """
    size = net.dimension * net.node_count
    starts = start_points(box, size, cfg.multistart_count, cfg.rng_seed)
    starts += [np.asarray(w, dtype=float).ravel() for w in warm_starts]
    screening = cfg.screen_keep is not None and cfg.screen_keep < len(starts)
    stop_mu = cfg.screen_mu if screening else None

    results: list[MinimaxSolution] = []
    failures = []
    for index, x0 in enumerate(starts):
        try:
            sol = smoothing_gradient_solve(net, coef, x0, box, cfg, mu0=mu0, trace=trace, stop_mu=stop_mu)
        except LocalizationError as exc:
            failures.append(exc)
            log.warning("start %d failed: %s", index, exc)
            continue
        sol.start_index = index
        results.append(sol)
    if not results:
        raise SolverError(f"all {len(starts)} starts failed; first error: {failures[0]}")

    if screening:
        ranked = sorted(results, key=lambda s: (s.exact_max_value, s.start_index))
        finished = [_resume(net, coef, box, cfg, part, trace) for part in ranked[: cfg.screen_keep]]
        results = finished + ranked[cfg.screen_keep :]
    best = min(results, key=lambda s: (s.exact_max_value, s.start_index))
    best.multistart_iterations = sum(s.outer_iterations for s in results)
    return best


def _resume(net, coef, box, cfg, part: MinimaxSolution, trace: bool) -> MinimaxSolution:
    if part.final_mu < cfg.epsilon or part.outer_iterations >= cfg.max_outer_iterations:
        return part
    rest = smoothing_gradient_solve(
        net, coef, part.x_star, box, cfg, mu0=part.final_mu, trace=trace,
        max_iterations=cfg.max_outer_iterations - part.outer_iterations,
    )
    for rec in rest.trace:
        rec.iteration += part.outer_iterations
    rest.trace = part.trace + rest.trace
    rest.outer_iterations += part.outer_iterations
    rest.start_index = part.start_index
    return rest


def write_solver_trace(records, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iter", "mu", "smoothed_value", "grad_norm", "step"])
        for rec in records:
            out.writerow([rec.iteration, f"{rec.mu:.12g}", f"{rec.smoothed_value:.12g}",
                          f"{rec.grad_norm:.12g}", f"{rec.step:.12g}"])
