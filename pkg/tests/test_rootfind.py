import csv
import math

import numpy as np
import pytest

from netloc.errors import NoBracketError, ParameterError
from netloc.harness import align
from netloc.lagrangian import LagrangianCoefficients, lagrangian_value
from netloc.minimax import BoxRegion, MinimaxSolution, SolverConfig
from netloc.network import NetworkInstance
from netloc.rootfind import (
    Bracket,
    PsiEstimate,
    PsiEvaluator,
    Sign,
    bracket_root,
    decide_sign,
    default_c_init,
    estimate_psi,
    find_root,
    initial_mu,
    localize,
    write_root_trace,
)

from conftest import ANALYTIC_LO, ANALYTIC_UP

BOX = BoxRegion.symmetric(3.0)
CFG = SolverConfig()
TARGET = np.array([-1.0, 0.0, 1.0, 0.0])
# above this tolerance the flat tail of psi (about 0.999 for c0 >= 2) counts as a root
SHARP_TOL = 5e-4


def _estimate(upper):
    dummy = MinimaxSolution(np.zeros(4), upper, upper, 1e-5, 0.0, 1, True)
    return PsiEstimate(1.0, upper, dummy, 0.0)


def test_plateau_level(analytic):
    # min over the edge terms alone, reached where f/up = 2 - f/lo
    plateau = 2 * ANALYTIC_LO / (ANALYTIC_LO + ANALYTIC_UP)
    assert 1 - 1e-3 - 1e-6 < plateau < 1 - 1e-3 + 1e-6
    est = estimate_psi(analytic, 9.0, BOX, CFG)
    assert est.upper == pytest.approx(plateau, abs=1e-4)
    assert decide_sign(est, 1e-2) is Sign.ROOT
    assert decide_sign(est, SHARP_TOL) is Sign.NEGATIVE


class TestEstimatePsi:
    def test_at_root(self, analytic):
        est = estimate_psi(analytic, 2.0, BOX, CFG)
        assert abs(est.upper - 1.0) <= 1e-2

    def test_above_root(self, analytic):
        assert estimate_psi(analytic, 4.0, BOX, CFG).upper <= 1.0

    def test_below_root(self, analytic):
        assert estimate_psi(analytic, 0.5, BOX, CFG).upper > 1.0

    def test_fields(self, analytic):
        est = estimate_psi(analytic, 3.0, BOX, CFG, outer_index=4)
        coef = LagrangianCoefficients.for_network(analytic, 3.0)
        assert est.upper == lagrangian_value(analytic, coef, est.witness.x_star)
        assert est.uncertainty == pytest.approx(est.witness.final_mu * math.log(3))
        assert est.upper >= est.witness.smoothed_value - est.uncertainty

    def test_rejects_bad_c0(self, analytic):
        with pytest.raises(ParameterError):
            estimate_psi(analytic, 0.0, BOX, CFG)


class TestDecideSign:
    def test_examples(self):
        assert decide_sign(_estimate(0.98), 1e-3) is Sign.NEGATIVE
        assert decide_sign(_estimate(1.0004), 1e-3) is Sign.ROOT
        assert decide_sign(_estimate(1.2), 1e-3) is Sign.POSITIVE

    def test_band_edges(self):
        assert decide_sign(_estimate(1.0 + 0.999e-3), 1e-3) is Sign.ROOT
        assert decide_sign(_estimate(1.0 - 0.999e-3), 1e-3) is Sign.ROOT
        assert decide_sign(_estimate(1.0 + 1.001e-3), 1e-3) is Sign.POSITIVE
        assert decide_sign(_estimate(1.0 - 1.001e-3), 1e-3) is Sign.NEGATIVE

    def test_rejects_tolerance(self):
        with pytest.raises(ParameterError):
            decide_sign(_estimate(1.0), 0.0)


def test_initial_mu_schedule():
    assert [initial_mu(CFG, i) for i in (1, 2, 4)] == [1.0, 0.5, 0.25]
    assert initial_mu(CFG, 10**6) == CFG.epsilon
    assert initial_mu(SolverConfig(mu0=0.1), 1) == 0.1


def test_default_c_init(analytic):
    assert default_c_init(analytic, BOX) == 2 * 9.0 * 2 / 4
    assert default_c_init(analytic, BoxRegion(-1.0, 4.0)) == 2 * 16.0 * 2 / 4


class TestBracket:
    def test_encloses_analytic_root(self, analytic):
        found = bracket_root(analytic, 0.5, BOX, CFG, root_tol=SHARP_TOL)
        assert isinstance(found, Bracket)
        assert found.c_lo < 2.0 < found.c_hi
        assert decide_sign(found.psi_lo, SHARP_TOL) is Sign.POSITIVE
        assert decide_sign(found.psi_hi, SHARP_TOL) is not Sign.POSITIVE

    def test_contracts_from_above(self, analytic):
        found = bracket_root(analytic, 9.0, BOX, CFG, root_tol=SHARP_TOL)
        assert isinstance(found, Bracket)
        assert found.c_lo < 2.0 < found.c_hi
        assert found.c_hi == 2 * found.c_lo

    def test_root_short_circuit(self, analytic):
        found = bracket_root(analytic, 2.0, BOX, CFG, root_tol=1e-2)
        assert isinstance(found, PsiEstimate) and found.c0 == 2.0

    def test_contradictory_bounds(self):
        # two short edges and one long edge violate the triangle inequality
        net = NetworkInstance.from_edges(3, [(0, 1, 1.0, 1.02), (1, 2, 1.0, 1.02), (0, 2, 25.0, 25.1)])
        evaluator = PsiEvaluator(net, BOX, SolverConfig(multistart_count=1))
        with pytest.raises(NoBracketError):
            bracket_root(net, 1.0, BOX, SolverConfig(multistart_count=1), evaluator=evaluator)
        assert evaluator.count == 41
        assert all(e.upper > 1.01 for e in evaluator.history)

    def test_rejects_nonpositive_start(self, analytic):
        with pytest.raises(ParameterError):
            bracket_root(analytic, 0.0, BOX, CFG)


def _bracket(net, lo, hi, cfg=CFG):
    psi = PsiEvaluator(net, BOX, cfg)
    return Bracket(lo, hi, psi(lo), psi(hi)), psi


class TestFindRoot:
    def test_analytic_bracket_default_tolerance(self, analytic):
        bracket, psi = _bracket(analytic, 0.5, 8.0)
        res = find_root(analytic, bracket, 1e-2, 1e-4, BOX, CFG, evaluator=psi)
        assert abs(res.c0_star - 2.0) <= 0.1
        np.testing.assert_allclose(align(res.x_star, TARGET), TARGET, atol=0.1)

    def test_analytic_bracket_sharp_tolerance(self, analytic):
        bracket, psi = _bracket(analytic, 0.5, 8.0)
        res = find_root(analytic, bracket, SHARP_TOL, 1e-4, BOX, CFG, evaluator=psi)
        assert res.converged
        assert abs(res.c0_star - 2.0) <= 0.1
        np.testing.assert_allclose(align(res.x_star, TARGET), TARGET, atol=0.1)
        assert res.feasibility.feasible and res.feasibility.tolerance == SHARP_TOL

    def test_iteration_bound(self, analytic):
        c_tol = 1e-3
        bracket, psi = _bracket(analytic, 0.5, 8.0)
        res = find_root(analytic, bracket, 1e-9, c_tol, BOX, CFG, evaluator=psi)
        assert res.bisection_iterations <= math.ceil(math.log2(7.5 / c_tol)) + 1
        assert not res.converged

    def test_degenerate_bracket(self, analytic):
        bracket, psi = _bracket(analytic, 1.9, 2.1)
        res = find_root(analytic, bracket, SHARP_TOL, 1.0, BOX, CFG, evaluator=psi)
        assert res.bisection_iterations == 0 and res.trace == []
        best = min((bracket.psi_lo, bracket.psi_hi), key=lambda e: abs(e.upper - 1))
        assert res.c0_star == best.c0

    def test_rejects_inverted(self, analytic):
        bracket, psi = _bracket(analytic, 2.5, 1.5)
        with pytest.raises(ParameterError):
            find_root(analytic, bracket, 1e-2, 1e-3, BOX, CFG, evaluator=psi)


@pytest.fixture(scope="module")
def run():
    net = NetworkInstance(2, np.array([0]), np.array([1]), np.array([ANALYTIC_LO]), np.array([ANALYTIC_UP]))
    return net, localize(net, BOX, CFG, root_tol=SHARP_TOL, c_tol=1e-4, trace=True)


class TestLocalize:
    def test_analytic(self, run):
        _, res = run
        assert res.converged and abs(res.c0_star - 2.0) <= 0.1
        assert abs(res.residual) <= SHARP_TOL
        assert res.total_solver_iterations == sum(e.witness.multistart_iterations for e in res.evaluations)
        assert res.positive_signs_heuristic

    def test_negative_signs_are_certified(self, run):
        net, res = run
        for est in res.evaluations:
            if decide_sign(est, SHARP_TOL) is Sign.NEGATIVE:
                coef = LagrangianCoefficients.for_network(net, est.c0)
                assert lagrangian_value(net, coef, est.witness.x_star) < 1 - SHARP_TOL

    def test_bracket_preserved(self, run):
        _, res = run
        signs = {e.c0: decide_sign(e, SHARP_TOL) for e in res.evaluations}
        for row in res.trace:
            assert signs[row.c_lo] is Sign.POSITIVE
            assert signs[row.c_hi] is not Sign.POSITIVE
            assert row.c_mid == 0.5 * (row.c_lo + row.c_hi)

    def test_root_trace_csv(self, run, tmp_path):
        _, res = run
        path = tmp_path / "root.csv"
        write_root_trace(res.trace, path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["step", "c_lo", "c_hi", "c_mid", "psi_upper", "sign"]
        assert len(rows) == len(res.trace) + 1
        assert rows[-1][-1] == "root"
