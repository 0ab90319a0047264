import math

import numpy as np
import pytest

import driftflow as df
from driftflow.errors import ConfigurationError, DomainError, ExtinctionError
from driftflow.flow import flow_equation_residual

TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)


class TestScaledGaussianFamily:
    def test_static_fixed_point(self):
        fam = df.scaled_gaussian_family(1.0, 1, 0.0)
        for t in (-3.0, 0.0, 0.7, 12.0):
            assert fam.scale_at(t) == 1.0

    def test_growth_closed_form(self):
        fam = df.scaled_gaussian_family(2.0, 1, 0.0)
        # u = 1 + (2 - 1) * e^{log 2} = 3
        assert fam.scale_at(math.log(2.0)) == pytest.approx(3.0, rel=1e-15)

    def test_reference_time_reproduces_parameters(self):
        fam = df.scaled_gaussian_family(1.7, 2, t0=0.4)
        state = df.evaluate_family(fam, 0.4)
        assert state.t == 0.4
        assert len(state.factors) == 2
        assert all(f.scale == pytest.approx(1.7, rel=1e-15) for f in state.factors)

    def test_weight_log_term_rides_the_scale(self):
        # the per-line weight is x^2/4 + (1/2) log u(t); that sign is the one
        # compatible with the weight equation and keeps e^{-f} dv constant
        fam = df.scaled_gaussian_family(2.0, 1, 0.0)
        dm = df.discretize(df.evaluate_family(fam, math.log(2.0)))
        ax = dm.axes[0]
        expected = ax.nodes**2 / 4.0 + 0.5 * math.log(3.0)
        np.testing.assert_allclose(ax.f, expected, rtol=1e-14)

    def test_lowest_eigenvalue_matches_half_inverse_scale(self):
        fam = df.scaled_gaussian_family(2.0, 1, 0.0)
        dm = df.discretize(df.evaluate_family(fam, 0.0))
        res = df.lowest_eigenpairs(df.assemble_forms(dm), 1)
        assert res.eigenvalues[1] == pytest.approx(0.25, abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            df.scaled_gaussian_family(-1.0, 1)
        with pytest.raises(DomainError):
            df.scaled_gaussian_family(0.0, 1)
        with pytest.raises(DomainError):
            df.scaled_gaussian_family(1.0, 0)

    def test_extinction(self):
        fam = df.scaled_gaussian_family(0.5, 1, 0.0)
        assert fam.extinction_time == pytest.approx(math.log(2.0), rel=1e-15)
        # still alive just before
        assert fam.scale_at(0.69) > 0.0
        with pytest.raises(ExtinctionError) as err:
            df.evaluate_family(fam, 0.7)
        assert err.value.extinction_time == pytest.approx(math.log(2.0), rel=1e-12)


class TestRoundCircleFamily:
    def test_identity_at_reference_time(self):
        state = df.evaluate_family(df.round_circle_family(1.0), 0.0)
        assert state.factors[0].a == pytest.approx(1.0)

    def test_exponential_metric_and_linear_weight(self):
        fam = df.round_circle_family(2.0, t0=0.5, f0=0.3)
        state = df.evaluate_family(fam, 1.5)
        assert state.factors[0].a == pytest.approx(2.0 * math.e, rel=1e-15)
        assert state.factors[0].f == pytest.approx(0.8, rel=1e-15)

    def test_eigenvalue_scaling(self):
        dm = df.discretize(df.evaluate_family(df.round_circle_family(4.0), 0.0))
        res = df.lowest_eigenpairs(df.assemble_forms(dm), 2)
        np.testing.assert_allclose(res.eigenvalues, [0.0, 0.25, 0.25], atol=1e-12)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            df.round_circle_family(-1.0)


class TestProductFamily:
    def test_mismatched_reference_time(self):
        with pytest.raises(ConfigurationError):
            df.product_family(
                [df.scaled_gaussian_family(1.0, 1, 0.0), df.round_circle_family(1.0, t0=1.0)]
            )

    def test_two_circles_rejected(self):
        with pytest.raises(ConfigurationError):
            df.product_family([df.round_circle_family(1.0), df.round_circle_family(2.0)])

    def test_single_factor_degenerates(self):
        fam = df.product_family([df.round_circle_family(1.0)])
        assert isinstance(fam, df.geometry.RoundCircleFamily)

    def test_minkowski_spectrum(self):
        fam = df.product_family([df.scaled_gaussian_family(1.0, 1), df.round_circle_family(4.0)])
        dm = df.discretize(df.evaluate_family(fam, 0.0), resolution=64, hermite_order=10)
        res = df.lowest_eigenpairs(df.assemble_forms(dm), 4)
        # gaussian {0, 1/2, 1, ...} + circle {0, 1/4, 1/4, 1, ...}
        np.testing.assert_allclose(res.eigenvalues, [0.0, 0.25, 0.25, 0.5, 0.75], atol=1e-12)

    def test_lowest_comes_from_gaussian_factor_when_circle_is_small(self):
        fam = df.product_family([df.scaled_gaussian_family(1.0, 1), df.round_circle_family(0.25)])
        dm = df.discretize(df.evaluate_family(fam, 0.0), resolution=64, hermite_order=10)
        res = df.lowest_eigenpairs(df.assemble_forms(dm), 1)
        assert res.eigenvalues[1] == pytest.approx(0.5, abs=1e-12)
        # the eigenfunction is the gaussian coordinate: flat along the circle
        u = res.eigenfunctions[1]
        assert float(np.max(np.abs(u - u[:, :1]))) < 1e-10


class TestDiscretize:
    def test_uniform_circle_weights(self):
        dm = df.weighted_circle(64)
        np.testing.assert_allclose(dm.axes[0].weights, 2.0 * math.pi / 64.0)
        assert dm.weighted_volume() == pytest.approx(2.0 * math.pi, rel=1e-14)

    def test_gaussian_volume(self):
        dm = df.gaussian_line(1.0)
        assert dm.weighted_volume() == pytest.approx(TWO_SQRT_PI, rel=1e-13)

    def test_resolution_floor(self):
        state = df.evaluate_family(df.round_circle_family(1.0), 0.0)
        with pytest.raises(ConfigurationError):
            df.discretize(state, resolution=4)

    def test_volume_constant_along_families(self):
        # the weighted volume element is preserved by the evolution
        for fam in (
            df.scaled_gaussian_family(2.0, 1),
            df.scaled_gaussian_family(0.5, 1),
            df.round_circle_family(0.5),
            df.product_family([df.scaled_gaussian_family(3.0, 1), df.round_circle_family(1.0)]),
        ):
            vols = [
                df.discretize(df.evaluate_family(fam, t), resolution=32, hermite_order=8).weighted_volume()
                for t in (0.0, 0.3, 0.6)
            ]
            np.testing.assert_allclose(vols, vols[0], rtol=1e-12)

    def test_volume_converges_spectrally_in_circle_resolution(self):
        # f = 2 cos(theta): closed-form weighted length is 2 pi I_0(2)
        from scipy.special import iv

        exact = 2.0 * math.pi * float(iv(0, 2.0))
        errors = {}
        for n in (8, 16):
            dm = df.weighted_circle(n, f=lambda th: 2.0 * np.cos(th))
            errors[n] = abs(dm.weighted_volume() - exact) / exact
        assert errors[8] < 1e-3
        assert errors[16] < 1e-12  # far beyond any algebraic rate

    def test_additive_constant_scales_volume(self):
        state = df.geometry.ContinuumState(
            t=0.0, factors=(df.geometry.CircleModel(a=1.0, f=0.0),), f_constant=1.0
        )
        dm = df.discretize(state)
        assert dm.weighted_volume() == pytest.approx(2.0 * math.pi * math.exp(-1.0), rel=1e-13)


class TestFlowEquationResiduals:
    @pytest.mark.parametrize(
        "family",
        [
            df.scaled_gaussian_family(2.0, 1),
            df.scaled_gaussian_family(0.7, 1),
            df.round_circle_family(1.5),
            df.product_family([df.scaled_gaussian_family(2.0, 1), df.round_circle_family(1.0)]),
        ],
    )
    def test_families_solve_the_flow_to_second_order(self, family):
        coarse = flow_equation_residual(family, t=0.1, dt=1e-2)
        fine = flow_equation_residual(family, t=0.1, dt=5e-3)
        for key in ("metric", "weight"):
            assert coarse[key] < 1e-3
            # halving dt divides an O(dt^2) residual by about 4, unless the
            # residual already sits at the floating-point floor
            assert fine[key] < max(coarse[key] / 3.0, 1e-13)

    def test_static_soliton_exact(self):
        res = flow_equation_residual(df.scaled_gaussian_family(1.0, 1), t=0.2, dt=1e-3)
        assert res["metric"] < 1e-14
        assert res["weight"] < 1e-14
