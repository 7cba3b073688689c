from __future__ import annotations

import numpy as np
import pytest

from dsfc import BasisSpec, ControllerGains, PlantModel, build_augmented, build_gram, supply_from_template, validate_plant
from dsfc.errors import DimensionError, StabilizabilityError, UsageError
from dsfc.model import SupplyRate
from dsfc.predictor import predictor_init
from dsfc.verify import closed_loop, distributed_state, simulate

from .conftest import demo_plant, demo_spec


def scalar_plant(**kw):
    base = dict(A=[[0.3]], B=[[2.0]], D1=[[5.0]], C1=[[1.0, 0.0]], C2=[[0.0, 0.0]], C3bar=[[0.0, 0.0]],
                D2=[[7.0]], D3=[[0.0]], r=1.0)
    base.update(kw)
    return PlantModel(**base)


class TestSupplyTemplates:
    def test_l2(self):
        s = supply_from_template("l2gain", 2, 1)
        assert s.gamma_role
        J1, Jt, J2, J3 = s.at(0.7)
        np.testing.assert_array_equal(J1, -0.7 * np.eye(2))
        np.testing.assert_array_equal(Jt, np.eye(2))
        np.testing.assert_array_equal(J2, np.zeros((2, 1)))
        np.testing.assert_array_equal(J3, 0.7 * np.eye(1))

    def test_passivity(self):
        s = supply_from_template("passivity", 1, 1)
        assert not s.gamma_role
        assert (s.J1[0, 0], s.Jtilde[0, 0], s.J2[0, 0], s.J3[0, 0]) == (-1.0, 0.0, 1.0, 0.0)

    def test_sector(self):
        s = supply_from_template("sector", 1, 1, alpha=-1.0, beta=1.0)
        assert (s.J1[0, 0], s.Jtilde[0, 0], s.J2[0, 0], s.J3[0, 0]) == (-1.0, -1.0, 0.0, -1.0)

    def test_sector_needs_square(self):
        with pytest.raises(DimensionError):
            supply_from_template("sector", 2, 1, alpha=0.0, beta=1.0)

    def test_unknown(self):
        with pytest.raises(UsageError):
            supply_from_template("hinf", 1, 1)

    def test_j1_must_be_negative(self):
        with pytest.raises(DimensionError):
            SupplyRate([[1.0]], [[1.0]], [[0.0]], [[0.0]])

    def test_evaluate_l2(self):
        s = supply_from_template("l2gain", 1, 1)
        # gamma |w|^2 - |z|^2 / gamma
        np.testing.assert_allclose(s.evaluate([[2.0]], [[3.0]], 0.5), [0.5 * 9 - 4 / 0.5])

    def test_gamma_required(self):
        with pytest.raises(UsageError):
            supply_from_template("l2gain", 1, 1).at()


class TestValidate:
    def test_example_passes(self):
        assert validate_plant(demo_plant(), demo_spec()).ok

    def test_uncontrollable_unstable(self):
        rep = validate_plant(scalar_plant(A=[[0.1]], B=[[0.0]]), BasisSpec.diagonal([0.0], 1.0))
        assert not rep.ok and any(d.name == "stabilizability" for d in rep.diagnostics)
        with pytest.raises(StabilizabilityError):
            rep.raise_if_fatal()

    def test_c3bar_columns(self):
        rep = validate_plant(scalar_plant(C3bar=[[0.0, 0.0, 0.0]]), BasisSpec.diagonal([0.0], 1.0))
        assert [d.name for d in rep.diagnostics] == ["dimension"]
        assert "C3bar" in rep.diagnostics[0].message

    def test_delay_mismatch(self):
        rep = validate_plant(scalar_plant(), BasisSpec.diagonal([0.0], 2.0))
        assert any(d.name == "delay" for d in rep.diagnostics)


class TestAugmented:
    def test_scalar_layout(self):
        spec = BasisSpec.diagonal([0.0], 1.0)
        plant = scalar_plant()
        aug = build_augmented(plant, build_gram(spec, 2), spec)
        assert aug.ell == 8 and aug.bbA.shape == (2, 8)
        want = np.zeros((2, 8))
        want[0, 0] = 0.3  # A on x(t)
        want[0, 3] = 2.0  # B on u(t - r)
        want[0, 6] = 5.0  # D1 on w
        want[1, 6] = 7.0  # D2 on w
        np.testing.assert_array_equal(aug.bbA, want)
        np.testing.assert_array_equal(aug.bbB, [[0.0], [1.0]])

    def test_example_dimensions(self, demo_problem):
        aug = demo_problem.aug
        assert aug.ell == 24
        assert aug.Sigma.shape == (2, 22)
        assert [s.stop - s.start for _, s in aug.layout.blocks()] == [3, 3, 15, 1, 2]

    def test_example_rows(self, demo_problem):
        aug, lay = demo_problem.aug, demo_problem.aug.layout
        x_row = aug.bbA[:2]
        np.testing.assert_array_equal(x_row[:, :2], demo_plant().A)
        np.testing.assert_array_equal(x_row[:, 2], 0.0)
        np.testing.assert_array_equal(x_row[:, 3:5], 0.0)
        np.testing.assert_array_equal(x_row[:, 5:6], demo_plant().B)
        np.testing.assert_array_equal(x_row[:, lay.eta], 0.0)
        np.testing.assert_array_equal(x_row[:, lay.w], demo_plant().D1)
        np.testing.assert_array_equal(x_row[:, lay.zeta], 0.0)
        u_row = np.delete(aug.bbA[2], lay.w.start)
        assert not u_row.any() and aug.bbA[2, lay.w.start] == 0.12

    def test_zero_plant(self):
        spec = BasisSpec.diagonal([0.0], 1.0)
        z = [[0.0]]
        plant = PlantModel(z, z, z, [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], z, z, 1.0)
        aug = build_augmented(plant, build_gram(spec, 2), spec)
        assert aug.bbA.shape == (2, 8) and not aug.bbA.any()

    def test_gains_padding(self, demo_problem):
        aug = demo_problem.aug
        K = np.arange(21.0).reshape(1, 21)
        full = aug.bbK(ControllerGains.from_stacked(K, 3))
        assert full.shape == (1, 24)
        np.testing.assert_array_equal(full[:, :21], K)
        assert not full[:, 21:].any()


def test_augmented_map_reproduces_trajectory(demo_problem):
    """(bbA + bbB bbK) xi(t) matches the simulated chi'(t); Sigma xi(t) matches z(t)."""
    pb = demo_problem
    seed = predictor_init(pb.plant, pb.spec, pb.gram)
    cl = closed_loop(pb.plant, pb.spec, pb.gram, seed.gains)
    h = 1e-3
    tr = simulate(cl, psi=lambda s: np.array([1.0, -0.5, 0.2]), w=lambda t: np.array([np.sin(2 * t)]),
                  horizon=1.5, step=h)
    F = lambda taus: np.stack([np.kron((pb.gram.sqrtF @ f)[:, None], np.eye(3)) for f in pb.spec.f(taus)])
    eta = distributed_state(tr, F)
    M, lay = tr.M, pb.aug.layout
    Acl = pb.aug.bbA + pb.aug.bbB @ pb.aug.bbK(seed.gains)
    worst_dyn = worst_out = 0.0
    for k in range(M + 1, tr.t.size - 1, 97):
        xi = np.zeros(pb.aug.ell)
        xi[lay.chi] = tr.chi[k]
        xi[lay.chi_r] = tr.chi[k - M]
        xi[lay.eta] = eta[k - M]
        xi[lay.w] = tr.w[k]
        fd = (tr.chi[k + 1] - tr.chi[k - 1]) / (2 * h)
        worst_dyn = max(worst_dyn, np.abs(Acl @ xi - fd).max())
        worst_out = max(worst_out, np.abs(pb.aug.Sigma @ xi[: pb.aug.Sigma.shape[1]] - tr.z[k]).max())
    assert worst_dyn <= 1e-4
    assert worst_out <= 1e-8
