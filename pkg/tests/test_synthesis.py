from __future__ import annotations

import csv
import math

import pytest

from dsfc import BasisSpec, PlantModel, supply_from_template
from dsfc.errors import ConfigurationError, StabilizabilityError
from dsfc.synthesis import AlgorithmConfig, bmi_max_eig, initialize, positivity_min_eig, prepare, relative_change, run


@pytest.fixture(scope="module")
def demo_run(demo_problem):
    return run(demo_problem, AlgorithmConfig(max_iter=6))


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(rho1=0.0), dict(rho2=-1.0), dict(eps=0.0), dict(max_iter=-1)])
    def test_rejects(self, kw):
        with pytest.raises(ConfigurationError):
            AlgorithmConfig(**kw)

    def test_defaults(self):
        cfg = AlgorithmConfig()
        assert (cfg.rho1, cfg.rho2, cfg.eps, cfg.max_iter) == (0.01, 0.01, 1e-6, 100)


def test_relative_change():
    assert relative_change([[1.0, 2.0]], [[3.0]], [[1.0, 2.0]], [[3.0]]) == 0.0
    assert relative_change([[1.0, 2.0]], [[5.0]], [[1.0, 2.0]], [[3.0]]) == pytest.approx(2.0 / 4.0)


class TestRun:
    def test_initial_values(self, demo_run):
        assert demo_run.gamma0 == pytest.approx(0.27660780, abs=1e-6)
        assert demo_run.gamma1 <= demo_run.gamma0 + 1e-9

    def test_monotone(self, demo_run):
        hist = [t.gamma for t in demo_run.trace if t.accepted]
        assert all(b <= a + 1e-6 for a, b in zip(hist, hist[1:]))

    def test_accepted_iterates_certified(self, demo_problem, demo_run):
        eps = demo_problem.eps_strict
        assert all(t.bmi_max_eig <= -eps / 2 for t in demo_run.trace if t.accepted and t.iteration >= 0)
        assert positivity_min_eig(demo_problem, demo_run.certificate) > 0

    def test_final_certificate(self, demo_problem, demo_run):
        res = demo_run
        assert bmi_max_eig(demo_problem, res.certificate, res.gains, res.gamma_final) < 0
        assert res.recheck_status == "optimal"
        assert res.recheck_gamma <= res.gamma_final + 1e-6

    def test_trace_rows(self, demo_run):
        assert [t.iteration for t in demo_run.trace] == list(range(-1, 7))
        assert demo_run.stop_reason == "max-iter"

    def test_zero_iterations(self, demo_problem):
        res = run(demo_problem, AlgorithmConfig(max_iter=0))
        assert res.gamma_final == res.gamma1
        assert len(res.trace) == 2 and res.stop_reason == "max-iter"

    def test_infinite_eps_stops_after_one(self, toy_problem):
        res = run(toy_problem, AlgorithmConfig(eps=math.inf, max_iter=10))
        assert res.stop_reason == "converged"
        assert res.trace[-1].iteration == 1

    def test_write_trace(self, demo_run, tmp_path):
        path = tmp_path / "trace.csv"
        demo_run.write_trace(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["iteration", "gamma", "status", "relative_change", "accepted", "bmi_max_eig"]
        assert len(rows) == len(demo_run.trace) + 1
        assert float(rows[-1][1]) == demo_run.trace[-1].gamma


def test_open_loop_stable_without_input():
    """B = 0 with Hurwitz A: the zero controller is certified and gamma is finite."""
    z = [[0.0]]
    plant = PlantModel([[-1.0]], z, [[1.0]], [[1.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], z, z, 1.0)
    spec = BasisSpec.diagonal([0.0], 1.0)
    pb = prepare(plant, spec, supply_from_template("l2gain", 1, 1))
    state, _, gamma0, gamma1 = initialize(pb, AlgorithmConfig())
    # the H-infinity norm of 1/(s+1) is 1
    assert gamma0 == pytest.approx(1.0, abs=1e-3)
    assert gamma1 <= gamma0 + 1e-9


def test_unstabilizable_plant():
    z = [[0.0]]
    plant = PlantModel([[0.5]], z, [[1.0]], [[1.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], z, z, 1.0)
    with pytest.raises(StabilizabilityError):
        prepare(plant, BasisSpec.diagonal([0.0], 1.0), supply_from_template("l2gain", 1, 1))


def test_supply_dimension_mismatch(demo_setup):
    with pytest.raises(ConfigurationError):
        prepare(demo_setup.plant, demo_setup.spec, supply_from_template("l2gain", 1, 1))


def test_passivity_supply_runs():
    """z = x/2 + w/2: the feedthrough gives the w-w entry 2d - d^2 > 0 needed for strictness."""
    plant = PlantModel([[-1.0]], [[1.0]], [[1.0]], [[0.5, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0]], [[0.5]], 0.5)
    pb = prepare(plant, BasisSpec.diagonal([1.0], 0.5), supply_from_template("passivity", 1, 1))
    res = run(pb, AlgorithmConfig(max_iter=2))
    assert res.gamma_final is None
    assert all(t.bmi_max_eig < 0 for t in res.trace if t.accepted and t.iteration >= 0)
    assert res.recheck_status == "optimal"
