"""Root finding on the value function ``psi(c0) = min_x max_k f_k(x)/c_k``.

``psi`` is non-increasing in ``c0`` and crosses 1 at the optimal objective value,
so the localization problem becomes a one-dimensional bracket-and-bisect search.
Every estimate of ``psi`` comes from a local minimax solve, which makes its
``upper`` field a true upper bound but not a certified value: a ``NEGATIVE``
sign is always justified by the witness, a ``POSITIVE`` sign trusts multistart.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LocalizationError, NoBracketError, ParameterError, SolverError
from .lagrangian import LagrangianCoefficients
from .minimax import BoxRegion, MinimaxSolution, SolverConfig, minimize_lagrangian
from .network import FeasibilityReport, NetworkInstance, feasibility_check

log = logging.getLogger(__name__)

MAX_EXPANSIONS = 40


class Sign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ROOT = "root"


@dataclass
class PsiEstimate:
    c0: float
    upper: float
    witness: MinimaxSolution
    uncertainty: float


@dataclass
class Bracket:
    c_lo: float
    c_hi: float
    psi_lo: PsiEstimate
    psi_hi: PsiEstimate


@dataclass
class RootTraceRow:
    step: int
    c_lo: float
    c_hi: float
    c_mid: float
    psi_upper: float
    sign: Sign


@dataclass
class LocalizationResult:
    c0_star: float
    x_star: np.ndarray
    residual: float
    feasibility: FeasibilityReport
    bisection_iterations: int
    total_solver_iterations: int
    converged: bool
    positive_signs_heuristic: bool = True
    evaluations: list[PsiEstimate] = field(default_factory=list, repr=False)
    trace: list[RootTraceRow] = field(default_factory=list, repr=False)


class PsiEvaluator:
    """Evaluates ``psi`` at successive ``c0`` values with a shared seed stream.

    The witness of the previous evaluation is added as a warm start, and the
    starting smoothing level for the ``i``-th evaluation is ``max(epsilon, 1/i)``.
    """

    def __init__(
        self, net: NetworkInstance, box: BoxRegion, cfg: SolverConfig, warm_start: bool = True, trace: bool = False
    ):
        self.net = net
        self.trace = trace
        self.box = box
        self.cfg = cfg
        self.warm_start = warm_start
        self.count = 0
        self.solver_iterations = 0
        self.history: list[PsiEstimate] = []
        self._last_witness = None

    def __call__(self, c0: float) -> PsiEstimate:
        self.count += 1
        warm = [self._last_witness] if self.warm_start and self._last_witness is not None else []
        est = estimate_psi(self.net, c0, self.box, self.cfg, self.count, warm_starts=warm, trace=self.trace)
        self.solver_iterations += est.witness.multistart_iterations
        self._last_witness = est.witness.x_star
        self.history.append(est)
        return est


def initial_mu(cfg: SolverConfig, outer_index: int) -> float:
    return min(cfg.mu0, max(cfg.epsilon, 1.0 / max(1, outer_index)))


def estimate_psi(
    net: NetworkInstance,
    c0: float,
    box: BoxRegion,
    cfg: SolverConfig,
    outer_index: int = 1,
    warm_starts=(),
    trace: bool = False,
) -> PsiEstimate:
    if not (c0 > 0 and math.isfinite(c0)):
        raise ParameterError(f"c0 must be positive, got {c0}")
    coef = LagrangianCoefficients.for_network(net, c0)
    try:
        sol = minimize_lagrangian(
            net, coef, box, cfg, mu0=initial_mu(cfg, outer_index), warm_starts=warm_starts, trace=trace
        )
    except LocalizationError as exc:
        raise SolverError(f"psi evaluation failed at c0={c0:g}: {exc}") from exc
    gap = sol.final_mu * math.log(net.num_constraints + 1)
    return PsiEstimate(c0, sol.exact_max_value, sol, gap)


def decide_sign(est: PsiEstimate, root_tol: float) -> Sign:
    if not root_tol > 0:
        raise ParameterError("root_tol must be positive")
    excess = est.upper - 1.0
    if excess < -root_tol:
        return Sign.NEGATIVE
    if excess > root_tol:
        return Sign.POSITIVE
    return Sign.ROOT


def default_c_init(net: NetworkInstance, box: BoxRegion) -> float:
    """``n * M'^2 * d / 4`` with ``M'`` the largest coordinate magnitude of the box."""
    reach = max(abs(box.lower), abs(box.upper))
    return net.node_count * reach**2 * net.dimension / 4.0


def bracket_root(
    net: NetworkInstance,
    c_init: float,
    box: BoxRegion,
    cfg: SolverConfig,
    root_tol: float = 1e-2,
    evaluator: PsiEvaluator | None = None,
) -> Bracket | PsiEstimate:
    """Enclose the crossing of 1, or return the estimate that already sits on it.

    From a positive start the offset above ``c_init`` doubles each step; from a
    negative start ``c0`` halves.
    """
    if not c_init > 0:
        raise ParameterError("c_init must be positive")
    psi = evaluator or PsiEvaluator(net, box, cfg)
    first = psi(c_init)
    sign = decide_sign(first, root_tol)
    if sign is Sign.ROOT:
        return first
    prev = first
    offset = c_init
    for _ in range(MAX_EXPANSIONS):
        if sign is Sign.POSITIVE:
            c = c_init + offset
            offset *= 2.0
        else:
            c = prev.c0 / 2.0
        est = psi(c)
        s = decide_sign(est, root_tol)
        if s is Sign.ROOT:
            return est
        if s is not sign:
            lo, hi = (prev, est) if sign is Sign.POSITIVE else (est, prev)
            return Bracket(lo.c0, hi.c0, lo, hi)
        prev = est
    raise NoBracketError(
        f"no sign change after {MAX_EXPANSIONS} expansions from c0={c_init:g} (last upper={prev.upper:.6g})"
    )


def find_root(
    net: NetworkInstance,
    bracket: Bracket,
    root_tol: float,
    c_tol: float,
    box: BoxRegion,
    cfg: SolverConfig,
    evaluator: PsiEvaluator | None = None,
) -> LocalizationResult:
    """Bisect ``bracket`` until a midpoint lands within ``root_tol`` of 1 or the width drops below ``c_tol``."""
    if not bracket.c_lo < bracket.c_hi:
        raise ParameterError("bracket needs c_lo < c_hi")
    psi = evaluator or PsiEvaluator(net, box, cfg)
    lo, hi = bracket.psi_lo, bracket.psi_hi
    trace: list[RootTraceRow] = []
    steps = 0
    final = None
    while hi.c0 - lo.c0 >= c_tol:
        steps += 1
        mid = psi(0.5 * (lo.c0 + hi.c0))
        sign = decide_sign(mid, root_tol)
        trace.append(RootTraceRow(steps, lo.c0, hi.c0, mid.c0, mid.upper, sign))
        if sign is Sign.ROOT:
            final = mid
            break
        if sign is Sign.POSITIVE:
            lo = mid
        else:
            hi = mid
    if final is None:
        final = min((lo, hi), key=lambda e: abs(e.upper - 1.0))
    return _result(net, final, root_tol, steps, psi, trace)


def _result(net, est: PsiEstimate, root_tol, steps, psi: PsiEvaluator, trace) -> LocalizationResult:
    residual = est.upper - 1.0
    return LocalizationResult(
        c0_star=est.c0,
        x_star=est.witness.x_star,
        residual=residual,
        feasibility=feasibility_check(net, est.witness.x_star, root_tol),
        bisection_iterations=steps,
        total_solver_iterations=psi.solver_iterations,
        converged=abs(residual) <= root_tol,
        evaluations=list(psi.history),
        trace=trace,
    )


def localize(
    net: NetworkInstance,
    box: BoxRegion,
    cfg: SolverConfig | None = None,
    root_tol: float = 1e-2,
    c_tol: float | None = None,
    c_init: float | None = None,
    trace: bool = False,
) -> LocalizationResult:
    """Bracket then bisect; the usual entry point.

    ``trace`` keeps per-iteration solver records on every witness (memory heavy).
    """
    cfg = cfg or SolverConfig()
    c_init = default_c_init(net, box) if c_init is None else float(c_init)
    c_tol = 1e-3 * c_init if c_tol is None else float(c_tol)
    psi = PsiEvaluator(net, box, cfg, trace=trace)
    found = bracket_root(net, c_init, box, cfg, root_tol, evaluator=psi)
    if isinstance(found, PsiEstimate):
        return _result(net, found, root_tol, 0, psi, [])
    return find_root(net, found, root_tol, c_tol, box, cfg, evaluator=psi)


def write_root_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["step", "c_lo", "c_hi", "c_mid", "psi_upper", "sign"])
        for row in rows:
            out.writerow([row.step, f"{row.c_lo:.12g}", f"{row.c_hi:.12g}", f"{row.c_mid:.12g}",
                          f"{row.psi_upper:.12g}", row.sign.value])
