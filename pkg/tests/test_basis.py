from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from dsfc import BasisSpec, build_gram, eval_F, expand_in_basis, orthonormalize_coeffs
from dsfc.basis import eval_F_many
from dsfc.errors import BasisInsufficientError, ConfigurationError, DimensionError, DomainError
from dsfc.matfun import expm

from .conftest import DEMO_A, DEMO_B, DEMO_EXPONENTS


def gauss_grid(r: float, pieces: int = 40, order: int = 12):
    """Composite Gauss-Legendre nodes and weights on [-r, 0]."""
    x, w = leggauss(order)
    edges = np.linspace(-r, 0.0, pieces + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    return t, wt


@pytest.fixture(scope="module")
def example():
    spec = BasisSpec.diagonal(DEMO_EXPONENTS, 1.0)
    return spec, build_gram(spec, 3)


class TestBuildGram:
    def test_trivial(self):
        g = build_gram(BasisSpec.diagonal([0.0], 1.0), 1)
        for M in (g.Finv, g.F, g.sqrtF, g.sqrtFinv):
            np.testing.assert_allclose(M, [[1.0]], rtol=1e-14)
        np.testing.assert_allclose(g.PiHat, [[0.0]], atol=0)

    def test_example_shapes(self, example):
        spec, g = example
        assert g.Finv.shape == (5, 5) and g.PiHat.shape == (15, 15)
        assert np.linalg.eigvalsh(g.Finv).min() > 0

    def test_example_gram_closed_form(self, example):
        lam = np.array(DEMO_EXPONENTS)
        s = lam[:, None] + lam[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            want = np.where(s == 0, 1.0, (1 - np.exp(-s)) / s)
        np.testing.assert_allclose(example[1].Finv, want, rtol=1e-12)

    def test_inverse(self, example):
        g = example[1]
        assert np.abs(g.F @ g.Finv - np.eye(5)).max() <= 1e-9

    def test_inverse_well_conditioned(self):
        g = build_gram(BasisSpec.diagonal([0.0, 1.0, -0.5], 2.0), 2)
        assert np.abs(g.F @ g.Finv - np.eye(3)).max() <= 1e-9

    def test_square_root(self, example):
        g = example[1]
        assert np.abs(g.sqrtF @ g.sqrtF - g.F).max() <= 1e-9 * np.abs(g.F).max()
        assert np.abs(g.sqrtF @ g.sqrtFinv - np.eye(5)).max() <= 1e-6

    def test_orthonormality_by_quadrature(self, example):
        spec, g = example
        t, w = gauss_grid(1.0)
        G = spec.f(t) @ g.sqrtF.T
        M = (w[:, None, None] * np.einsum("ki,kj->kij", G, G)).sum(axis=0)
        assert np.abs(M - np.eye(5)).max() <= 1e-8
        assert g.orthonormality_defect <= 1e-8

    def test_pihat(self, example):
        spec, g = example
        np.testing.assert_allclose(g.PiHat, np.kron(g.sqrtF @ spec.Pi @ g.sqrtFinv, np.eye(3)), atol=1e-12)

    def test_degenerate(self):
        with pytest.raises(ConfigurationError, match="condition number"):
            build_gram(BasisSpec(np.zeros((2, 2)), [1.0, 1.0], 1.0), 1)


class TestEvalF:
    def test_constant_basis(self):
        spec = BasisSpec.diagonal([0.0], 1.0)
        g = build_gram(spec, 2)
        for tau in (-1.0, -0.3, 0.0):
            np.testing.assert_allclose(eval_F(g, spec, tau), np.eye(2), rtol=1e-14)

    def test_endpoint(self, example):
        spec, g = example
        np.testing.assert_allclose(eval_F(g, spec, 0.0), np.kron((g.sqrtF @ spec.f0)[:, None], np.eye(3)))

    def test_tall_shape(self, example):
        spec, g = example
        assert eval_F(g, spec, -0.5).shape == (15, 3)

    def test_matrix_ode(self, example):
        spec, g = example
        h, tau = 1e-5, -0.5
        fd = (eval_F(g, spec, tau + h) - eval_F(g, spec, tau - h)) / (2 * h)
        np.testing.assert_allclose(fd, g.PiHat @ eval_F(g, spec, tau), atol=1e-6 * np.abs(fd).max())

    def test_many_matches_single(self, example):
        spec, g = example
        taus = np.linspace(-1, 0, 7)
        stack = eval_F_many(g, spec, taus)
        for k, t in enumerate(taus):
            np.testing.assert_allclose(stack[k], eval_F(g, spec, t), atol=1e-14)

    def test_non_diagonal_generator(self):
        # f = (1, tau) from a Jordan block, written in reverse time
        spec = BasisSpec([[0.0, 0.0], [1.0, 0.0]], [1.0, 0.0], 1.0)
        np.testing.assert_allclose(spec.f(-0.4), [1.0, -0.4], atol=1e-14)

    def test_domain(self, example):
        spec, g = example
        with pytest.raises(DomainError):
            eval_F(g, spec, 0.1)
        with pytest.raises(DomainError):
            eval_F(g, spec, -1.5)


class TestExpand:
    def test_scalar_closed_form(self):
        coeff, res = expand_in_basis([[1.0]], [[-0.1]], [[1.0]], BasisSpec.diagonal([0.1], 1.0))
        np.testing.assert_allclose(coeff, [[1.0]], rtol=1e-12)
        assert res < 1e-12

    def test_zero(self, example):
        coeff, res = expand_in_basis(np.zeros((1, 2)), DEMO_A, DEMO_B, example[0])
        assert not coeff.any() and res == 0.0

    def test_example_plant(self, example):
        M = np.array([[0.3, -0.7]])
        coeff, res = expand_in_basis(M, DEMO_A, DEMO_B, example[0])
        assert res <= 1e-8
        # only the e^t and e^-0.1t components are present
        np.testing.assert_allclose(coeff[0, [0, 2, 3]], 0.0, atol=1e-9)
        taus = np.linspace(-1, 0, 33)
        recon = example[0].f(taus) @ coeff[0]
        direct = np.array([(M @ expm(DEMO_A, -t) @ DEMO_B)[0, 0] for t in taus])
        assert np.abs(recon - direct).max() <= max(res, 1e-12) * 1.01

    def test_insufficient(self):
        with pytest.raises(BasisInsufficientError):
            expand_in_basis([[1.0]], [[-0.2]], [[1.0]], BasisSpec.diagonal([0.0], 1.0))

    def test_shapes(self, example):
        with pytest.raises(DimensionError):
            expand_in_basis(np.zeros((1, 3)), DEMO_A, DEMO_B, example[0])


class TestOrthonormalize:
    def test_identity_gram(self):
        spec = BasisSpec.diagonal([0.0], 1.0)
        g = build_gram(spec, 2)
        plain = np.array([[1.0, 2.0]])
        np.testing.assert_allclose(orthonormalize_coeffs(plain, g), plain, rtol=1e-14)

    def test_scalar_halves(self):
        # f = 1 on [-1/4, 0]: Finv = 1/4, F = 4, sqrt(F^-1) = 1/2
        spec = BasisSpec.diagonal([0.0], 0.25)
        g = build_gram(spec, 1)
        np.testing.assert_allclose(g.F, [[4.0]], rtol=1e-13)
        np.testing.assert_allclose(orthonormalize_coeffs([[3.0]], g), [[1.5]], rtol=1e-13)

    def test_round_trip(self, example, rng):
        g = example[1]
        plain = rng.standard_normal((2, 15))
        back = orthonormalize_coeffs(plain, g) @ np.kron(g.sqrtF, np.eye(3))
        np.testing.assert_allclose(back, plain, atol=1e-10 * np.abs(plain).max() * np.abs(g.sqrtF).max())

    def test_same_function(self, example, rng):
        spec, g = example
        plain = rng.standard_normal((2, 15))
        ortho = orthonormalize_coeffs(plain, g)
        tau = -0.37
        lhs = plain @ np.kron(spec.f(tau)[:, None], np.eye(3))
        np.testing.assert_allclose(lhs, ortho @ eval_F(g, spec, tau), atol=1e-7)

    def test_dimension(self, example):
        with pytest.raises(DimensionError):
            orthonormalize_coeffs(np.zeros((1, 14)), example[1])


def bessel_excess(seed: int) -> float:
    """eta^T (I_d kron U) eta - int psi^T U psi for a seeded random segment and U > 0."""
    spec = BasisSpec.diagonal(DEMO_EXPONENTS, 1.0)
    g = _EXAMPLE_GRAM
    rng = np.random.default_rng(seed)
    knots = np.linspace(-1.0, 0.0, 9)
    psi = CubicSpline(knots, rng.standard_normal((knots.size, 3)))
    L = rng.standard_normal((3, 3))
    U = L @ L.T + 0.01 * np.eye(3)
    t, w = gauss_grid(1.0, pieces=32)
    vals = psi(t)
    lhs = float(np.sum(w * np.einsum("ki,ij,kj->k", vals, U, vals)))
    eta = np.einsum("k,kij,kj->i", w, eval_F_many(g, spec, t), vals)
    return float(eta @ np.kron(np.eye(5), U) @ eta) - lhs


@given(st.integers(0, 99))
def test_bessel_inequality(seed):
    """int psi^T U psi >= eta^T (I_d kron U) eta for random segments and random U > 0."""
    assert bessel_excess(seed) <= 1e-6


_EXAMPLE_GRAM = build_gram(BasisSpec.diagonal(DEMO_EXPONENTS, 1.0), 3)
