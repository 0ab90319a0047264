import math

import numpy as np
import pytest

import driftflow as df
from driftflow.errors import ConfigurationError, DegeneracyError, StabilityError, UsageError
from driftflow.flow import FlowState, RunRequest
from driftflow.oracles import finite_diff_time_derivative

LOG2 = math.log(2.0)


def _state(family, t=0.0, **kw):
    return FlowState.from_manifold(df.discretize(df.evaluate_family(family, t), **kw))


class TestSingleStep:
    def test_static_soliton_is_fixed(self):
        st = _state(df.scaled_gaussian_family(1.0, 1))
        st2 = df.step_modified_flow(st, 0.02)
        assert abs(st2.manifold.axes[0].scale - 1.0) < 1e-13

    def test_round_circle_exponential(self):
        st = _state(df.round_circle_family(1.0))
        st2 = df.step_modified_flow(st, 0.01)
        assert float(np.max(np.abs(st2.manifold.axes[0].a - math.exp(0.01)))) < 1e-12

    def test_gaussian_matches_closed_form(self):
        st = _state(df.scaled_gaussian_family(2.0, 1))
        st2 = df.step_modified_flow(st, 0.01)
        exact = 1.0 + math.exp(0.01)
        assert abs(st2.manifold.axes[0].scale - exact) < 1e-12

    def test_step_size_cap(self):
        st = _state(df.round_circle_family(1.0))
        with pytest.raises(ConfigurationError):
            df.step_modified_flow(st, 0.2)

    def test_mode_energy_monitor(self):
        st = FlowState.from_manifold(df.weighted_circle(64, f=lambda th: 0.01 * np.cos(2 * th)))
        with pytest.raises(StabilityError):
            df.step_modified_flow(st, 1e-3, stability_threshold=1e-4)

    def test_positivity_breakdown(self):
        req = RunRequest(
            family=df.scaled_gaussian_family(0.5, 1), horizon=1.0, dt=1e-3, cadence=100, k=1,
            track_scalars=False,
        )
        with pytest.raises(df.FlowBreakdownError):
            df.run_flow(req)


class TestFlowState:
    def test_phi_vanishes_on_shrinker(self):
        st = _state(df.scaled_gaussian_family(1.0, 1))
        assert float(np.max(np.abs(st.phi[0]))) == 0.0

    def test_two_phi_equals_metric_velocity(self):
        # g_t = u'(t) = u - 1 on the rescaled Gaussian; phi = (u - 1)/2
        fam = df.scaled_gaussian_family(2.0, 1)
        for t in (0.0, 0.4):
            st = _state(fam, t)
            u = fam.scale_at(t)
            np.testing.assert_allclose(2.0 * st.phi[0], u - 1.0, rtol=1e-14)

    def test_volume_field(self):
        st = _state(df.round_circle_family(1.0))
        assert st.volume == pytest.approx(2.0 * math.pi, rel=1e-13)


class TestRunFlow:
    def test_zero_horizon(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.0, k=1, track_scalars=False)
        traj = df.run_flow(req)
        assert len(traj.times) == 1
        assert traj.spectra[0].eigenvalues[1] == pytest.approx(1.0, abs=1e-11)

    def test_circle_eigenvalue_decay(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.5, dt=1e-3, cadence=25, k=1,
                         track_scalars=False)
        traj = df.run_flow(req)
        lam = np.array([sp.eigenvalues[1] for sp in traj.spectra])
        assert float(np.max(np.abs(lam - np.exp(-traj.times)))) < 1e-8

    def test_sharp_family_matches_formula(self):
        req = RunRequest(family=df.scaled_gaussian_family(2.0, 1), horizon=LOG2, dt=1e-3,
                         cadence=70, k=1, track_scalars=False)
        traj = df.run_flow(req)
        s = traj.times
        lam = np.array([sp.eigenvalues[1] for sp in traj.spectra])
        formula = 0.25 / (0.5 * (1.0 - np.exp(s)) + np.exp(s))
        np.testing.assert_allclose(lam, formula, rtol=1e-8)

    def test_measure_preserved(self):
        for family in (df.round_circle_family(2.0), df.scaled_gaussian_family(1.5, 1)):
            req = RunRequest(family=family, horizon=1.0, dt=1e-3, cadence=100, k=1, track_scalars=False)
            traj = df.run_flow(req)
            drift = float(np.max(np.abs(traj.volumes / traj.volumes[0] - 1.0)))
            assert drift < 1e-6

    def test_bound_columns_respect_horizon(self):
        req = RunRequest(family=df.round_circle_family(0.25), horizon=0.5, dt=1e-3, cadence=50, k=1,
                         track_scalars=False)
        traj = df.run_flow(req)
        # lambda_1(0) = 4 blows up at log(8/7) ~ 0.1335: later bounds are inf
        assert math.isinf(traj.bounds[-1, 0])
        assert np.isfinite(traj.bounds[1, 0])

    def test_eigenvalue_quotients_satisfy_comparison_ode(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.4, dt=1e-3, cadence=10, k=1,
                         track_scalars=False)
        traj = df.run_flow(req)
        lam = np.array([sp.eigenvalues[1] for sp in traj.spectra])
        verdict = df.forward_diff_check(
            lam, lambda t, v: (2.0 * v - 1.0) * v, dt=traj.output_dt, slack=1e-6
        )
        assert verdict.passed


@pytest.fixture(scope="module")
def static_traj():
    req = RunRequest(family=df.scaled_gaussian_family(1.0, 1), horizon=0.2, dt=1e-3,
                     cadence=20, k=1)
    return df.run_flow(req)


class TestEvolveScalar:
    def test_eigenfunction_at_half_is_stationary(self, static_traj):
        x = static_traj.states[0].manifold.axes[0].nodes.copy()
        out = df.evolve_scalar(x, static_traj)
        assert float(np.max(np.abs(out.values[-1] - x))) < 1e-12

    def test_constant_grows_at_half_rate(self, static_traj):
        ones = np.ones(static_traj.states[0].manifold.shape)
        out = df.evolve_scalar(ones, static_traj)
        np.testing.assert_allclose(out.values[-1], math.exp(0.1), rtol=1e-10)

    def test_mean_zero_preserved(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.3, dt=1e-3, cadence=30, k=1)
        traj = df.run_flow(req)
        u0 = np.sin(traj.states[0].manifold.axes[0].nodes)
        out = df.evolve_scalar(u0, traj)
        assert float(np.max(np.abs(out.means))) < 1e-9

    def test_shape_check(self, static_traj):
        with pytest.raises(UsageError):
            df.evolve_scalar(np.ones(5), static_traj)


class TestFunctionalResiduals:
    def test_static_soliton_energy_identity(self):
        req = RunRequest(family=df.scaled_gaussian_family(1.0, 1), horizon=0.05, dt=1e-3,
                         cadence=1, k=1)
        traj = df.run_flow(req)
        # u = x normalized: I = 1 and I - 2E = 0 hold exactly on the shrinker
        I = traj.series["I"][:, 0]
        E = traj.series["E"][:, 0]
        np.testing.assert_allclose(I, 1.0, atol=1e-12)
        np.testing.assert_allclose(I - 2.0 * E, 0.0, atol=1e-12)

    def test_circle_run_identities(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.1, dt=1e-3, cadence=1, k=2)
        traj = df.run_flow(req)
        rep = df.functional_residuals(traj)
        assert rep.max_rel_J < 1e-4
        assert rep.max_rel_I < 1e-4
        assert rep.max_rel_E < 1e-3
        assert rep.max_rel_F < 1e-3
        assert rep.energy_violation <= 1e-8 * rep.energy_scale
        assert rep.quotient_excess <= 1e-6

    def test_requires_tracked_scalars(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.05, dt=1e-3, cadence=10,
                         k=1, track_scalars=False)
        traj = df.run_flow(req)
        with pytest.raises(UsageError):
            df.functional_residuals(traj)


class TestGramSchmidtFrame:
    def test_orthonormal_inputs_give_identity(self):
        dm = df.weighted_circle(64)
        res = df.lowest_eigenpairs(df.assemble_forms(dm), 2)
        frame, mixing = df.gram_schmidt_frame(res.eigenfunctions, FlowState.from_manifold(dm))
        np.testing.assert_allclose(mixing, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(frame[1], res.eigenfunctions[1], atol=1e-10)

    def test_static_diagonal_is_flat(self):
        req = RunRequest(family=df.scaled_gaussian_family(1.0, 1), horizon=5e-3, dt=1e-3, cadence=1, k=1)
        traj = df.run_flow(req)
        d = finite_diff_time_derivative(traj.mixing[:, 0, 0], traj.output_dt)
        assert abs(d[0]) < 1e-10

    def test_moving_diagonal_rate(self):
        req = RunRequest(family=df.scaled_gaussian_family(2.0, 1), horizon=5e-3, dt=1e-3, cadence=1, k=1)
        traj = df.run_flow(req)
        d = finite_diff_time_derivative(traj.mixing[:, 0, 0], traj.output_dt)
        assert abs(d[0] - (-0.25)) < 1e-4

    def test_rank_deficiency(self):
        dm = df.weighted_circle(64)
        u = np.sin(dm.axes[0].nodes)
        with pytest.raises(DegeneracyError):
            df.gram_schmidt_frame([u, 2.0 * u], FlowState.from_manifold(dm))


class TestCommutatorResidual:
    def test_static_soliton(self):
        req = RunRequest(family=df.scaled_gaussian_family(1.0, 1), horizon=0.02, dt=1e-3,
                         cadence=1, k=1, track_scalars=False)
        traj = df.run_flow(req)
        x = traj.states[0].manifold.axes[0].nodes.copy()
        assert df.commutator_residual(x, traj, len(traj.times) // 2) < 1e-12

    def test_constant_field(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.02, dt=1e-3, cadence=1,
                         k=1, track_scalars=False)
        traj = df.run_flow(req)
        assert df.commutator_residual(np.ones(traj.states[0].manifold.shape), traj, 1) < 1e-14

    def test_circle_cosine(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.05, dt=1e-3, cadence=1,
                         k=1, track_scalars=False)
        traj = df.run_flow(req)
        u = np.cos(traj.states[0].manifold.axes[0].nodes)
        assert df.commutator_residual(u, traj, len(traj.times) // 2) < 1e-5

    def test_interior_index_required(self):
        req = RunRequest(family=df.round_circle_family(1.0), horizon=0.02, dt=1e-3, cadence=1,
                         k=1, track_scalars=False)
        traj = df.run_flow(req)
        with pytest.raises(UsageError):
            df.commutator_residual(np.ones(traj.states[0].manifold.shape), traj, 0)


class TestScalarOrthogonalityAlongFlow:
    def test_distinct_eigenvalue_scalars_stay_orthogonal(self):
        # Jic'(0) is diagonal, so off-diagonal pairings stay at zero initially
        fam = df.product_family([df.scaled_gaussian_family(1.0, 1), df.round_circle_family(4.0)])
        req = RunRequest(family=fam, horizon=0.05, dt=1e-3, cadence=5, k=3, hermite_order=8)
        traj = df.run_flow(req)
        J = traj.series["J"]
        offdiag = J.copy()
        for m in range(J.shape[0]):
            np.fill_diagonal(offdiag[m], 0.0)
        assert float(np.max(np.abs(offdiag))) < 1e-8
