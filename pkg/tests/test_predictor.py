from __future__ import annotations

import numpy as np
import pytest

from dsfc import BasisSpec, PlantModel, build_gram, eval_F, predictor_init
from dsfc.errors import BasisInsufficientError, StabilizabilityError
from dsfc.matfun import expm, stabilizing_gain
from dsfc.verify import closed_loop, spectral_abscissa

from .conftest import demo_plant, demo_spec


def scalar(a=0.0, r=1.0):
    z = [[0.0]]
    return PlantModel([[a]], [[1.0]], z, [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], z, z, r)


def test_scalar_hand_case():
    spec = BasisSpec.diagonal([0.0], 1.0)
    seed = predictor_init(scalar(), spec, build_gram(spec, 2), K=[[-1.0]], X=[[-0.1]])
    np.testing.assert_allclose(seed.gains.K1, [[-0.1, -1.1]], atol=1e-14)
    np.testing.assert_array_equal(seed.gains.K2, [[0.0, 0.0]])
    np.testing.assert_allclose(seed.Gamma, [[0.0, -0.1]], atol=1e-13)


def test_collapses_when_ka_equals_xk():
    spec = BasisSpec.diagonal([1.0], 1.0)
    seed = predictor_init(scalar(a=-1.0), spec, build_gram(spec, 2), K=[[0.0]], X=[[-0.3]])
    np.testing.assert_allclose(seed.gains.K1, [[0.0, -0.3]], atol=1e-15)
    assert not seed.Gamma.any()


def test_example_structure():
    plant, spec = demo_plant(), demo_spec()
    g = build_gram(spec, 3)
    seed = predictor_init(plant, spec, g)
    assert not seed.gains.K2.any()
    plain = seed.Gamma @ np.kron(g.sqrtF, np.eye(3))
    support = np.flatnonzero(np.abs(plain[0]) > 1e-8)
    # u-columns of e^t (function 1) and e^-0.1t (function 4)
    assert support.tolist() == [1 * 3 + 2, 4 * 3 + 2]


def test_example_printed_values():
    """With r = 3 and K = [-0.4295*11/9, -0.4173] the printed seed is reproduced."""
    plant, spec = demo_plant(3.0), demo_spec(3.0)
    g = build_gram(spec, 3)
    seed = predictor_init(plant, spec, g, K=[[-0.4295 * 11 / 9, -0.4173]], X=[[-0.1]])
    np.testing.assert_allclose(seed.gains.K1, [[0.0235, -0.2629, -0.5173]], atol=5e-5)
    plain = seed.Gamma @ np.kron(g.sqrtF, np.eye(3))
    want = np.zeros(15)
    want[5], want[14] = -0.4295, -0.1789
    np.testing.assert_allclose(plain[0], want, atol=5e-5)


def test_reconstruction():
    plant, spec = demo_plant(), demo_spec()
    g = build_gram(spec, 3)
    seed = predictor_init(plant, spec, g)
    M = seed.K @ plant.A - seed.X @ seed.K
    for tau in np.linspace(-1.0, 0.0, 11):
        want = np.hstack([np.zeros((1, 2)), M @ expm(plant.A, -tau) @ plant.B])
        np.testing.assert_allclose(seed.Gamma @ eval_F(g, spec, tau), want, atol=1e-7)


def test_spectrum_assignment():
    plant, spec = demo_plant(), demo_spec()
    g = build_gram(spec, 3)
    seed = predictor_init(plant, spec, g)
    rep = spectral_abscissa(closed_loop(plant, spec, g, seed.gains), (20, 40))
    target = np.concatenate([np.linalg.eigvals(plant.A + plant.B @ seed.K), [-0.1]])
    alpha = target.real.max()
    assert abs(rep.abscissa - alpha) <= 1e-3
    roots = rep.rightmost[40]
    for s in roots[roots.real >= alpha - 1.0]:
        assert np.abs(target - s).min() <= 1e-3


def test_insufficient_basis_message():
    spec = BasisSpec.diagonal([0.0], 1.0)
    with pytest.raises(BasisInsufficientError, match="Enlarge the basis"):
        predictor_init(scalar(a=0.2), spec, build_gram(spec, 2))


def test_unstabilizable():
    z = [[0.0]]
    plant = PlantModel([[0.1]], z, z, [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], z, z, 1.0)
    spec = BasisSpec.diagonal([0.0], 1.0)
    with pytest.raises(StabilizabilityError):
        predictor_init(plant, spec, build_gram(spec, 2))


def test_x_must_be_hurwitz():
    spec = BasisSpec.diagonal([0.0], 1.0)
    with pytest.raises(StabilizabilityError):
        predictor_init(scalar(), spec, build_gram(spec, 2), K=[[-1.0]], X=[[0.1]])


def test_default_gain_is_bass():
    plant, spec = demo_plant(), demo_spec()
    seed = predictor_init(plant, spec, build_gram(spec, 3))
    np.testing.assert_allclose(seed.K, stabilizing_gain(plant.A, plant.B))
    np.testing.assert_allclose(seed.X, [[-0.1]])
