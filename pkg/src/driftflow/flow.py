"""Time integration of the coupled metric/weight system and its diagnostics.

The metric and weight evolve by

    g_t = g - 2 Hess_f - 2 Ric,      f_t = n/2 - S - Delta f

(Ric and S vanish on the supported flat factors).  The weight equation
contains a backward heat operator, so naive forward integration is ill posed;
the integrator therefore works in a fixed Fourier-Galerkin truncation with an
explicit RK4 step, a per-step noise floor that keeps round-off from seeding
the unstable modes, and a mode-energy monitor that aborts genuine blow-up.
Exact analytic families make the truncation exact and serve as validation.

Tracked scalars follow the drift heat equation u_t = L u + u/2, advanced with
the same RK4 stages as the geometry (one-way coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .axes import CircleAxis, HermiteLineAxis, lowpass, mode_amplitudes
from .comparison import eigenvalue_bound
from .errors import (
    ConfigurationError,
    DegeneracyError,
    FlowBreakdownError,
    HorizonError,
    StabilityError,
    UsageError,
)
from .geometry import DiscreteWeightedManifold, discretize, evaluate_family
from .oracles import finite_diff_time_derivative
from .spectral import (
    assemble_forms,
    drift_divergence,
    drift_laplacian,
    gradient_inner,
    hessian_norm_sq,
    lowest_eigenpairs,
    partials,
    soliton_defect_profiles,
)

__all__ = [
    "FlowState",
    "FlowTrajectory",
    "RunRequest",
    "step_modified_flow",
    "run_flow",
    "evolve_scalar",
    "ScalarTrajectory",
    "functional_residuals",
    "FunctionalResidualReport",
    "gram_schmidt_frame",
    "commutator_residual",
    "flow_equation_residual",
]

MAX_STEP = 0.05


@dataclass(frozen=True)
class FlowState:
    """One instant of the flow: sampled geometry plus derived quantities.

    ``phi`` holds the per-axis soliton defect g/2 - Hess_f - Ric; it vanishes
    identically on the static Gaussian shrinker and equals half the metric
    velocity along exact solutions.
    """

    manifold: DiscreteWeightedManifold
    phi: list
    volume: float

    @classmethod
    def from_manifold(cls, dm: DiscreteWeightedManifold) -> "FlowState":
        return cls(manifold=dm, phi=soliton_defect_profiles(dm), volume=dm.weighted_volume())

    @property
    def t(self) -> float:
        return self.manifold.t


# --------------------------------------------------------------------------
# Geometry state plumbing
# --------------------------------------------------------------------------


def _geo_from_manifold(dm: DiscreteWeightedManifold):
    geo = []
    for ax in dm.axes:
        if ax.kind == "circle":
            geo.append(["circle", ax.a.copy(), ax.f.copy()])
        else:
            geo.append(["hermite", ax.scale, ax.size])
    return geo


def _manifold_from_geo(geo, f_constant: float, t: float) -> DiscreteWeightedManifold:
    axes = []
    for entry in geo:
        if entry[0] == "circle":
            a = entry[1]
            if np.min(a) <= 0.0:
                raise FlowBreakdownError(int(np.argmin(a)))
            axes.append(CircleAxis(a, entry[2]))
        else:
            if entry[1] <= 0.0:
                raise FlowBreakdownError(0)
            axes.append(HermiteLineAxis(entry[2], entry[1]))
    return DiscreteWeightedManifold(axes, f_constant=f_constant, t=t)


def _geo_rhs(dm: DiscreteWeightedManifold, modes: int):
    rhs = []
    for ax in dm.axes:
        if ax.kind == "circle":
            hess_f = ax.d2_vec(ax.f) - ax.christoffel * ax.fprime
            a_t = ax.a - 2.0 * hess_f
            f_t = 0.5 - hess_f / ax.a
            rhs.append(["circle", lowpass(a_t, modes), lowpass(f_t, modes)])
        else:
            rhs.append(["hermite", ax.scale - 1.0, ax.size])
    return rhs


def _geo_add(geo, rhs, c: float):
    out = []
    for g, r in zip(geo, rhs):
        if g[0] == "circle":
            out.append(["circle", g[1] + c * r[1], g[2] + c * r[2]])
        else:
            out.append(["hermite", g[1] + c * r[1], g[2]])
    return out


def _geo_diff(g1, g2) -> float:
    worst = 0.0
    for a, b in zip(g1, g2):
        if a[0] == "circle":
            worst = max(worst, float(np.max(np.abs(a[1] - b[1]))), float(np.max(np.abs(a[2] - b[2]))))
        else:
            worst = max(worst, abs(a[1] - b[1]))
    return worst


def _clamp_noise(geo, modes: int, floor: float):
    for entry in geo:
        if entry[0] != "circle":
            continue
        for slot in (1, 2):
            coef = np.fft.rfft(entry[slot])
            scale = max(1.0, abs(coef[0]) / coef.size)
            small = np.abs(coef[1:]) < floor * scale * coef.size
            coef[1:][small] = 0.0
            coef[modes + 1 :] = 0.0
            entry[slot] = np.fft.irfft(coef, n=entry[slot].size)
    return geo


def _check_stability(geo, threshold: float):
    for entry in geo:
        if entry[0] != "circle":
            continue
        for slot in (1, 2):
            amps = mode_amplitudes(entry[slot])
            if amps[1:].size and float(np.max(amps[1:])) > threshold:
                raise StabilityError(
                    f"circle mode energy {np.max(amps[1:]):.3e} exceeds threshold {threshold:.3e}; "
                    "use a shorter horizon or a lower mode cutoff"
                )


def _rk4(geo, scalars, f_constant, t, dt, modes):
    """One joint RK4 step of geometry and tracked scalars."""

    def stage(g, s, tt):
        dm = _manifold_from_geo(g, f_constant, tt)
        gr = _geo_rhs(dm, modes)
        sr = None
        if s is not None:
            sr = np.stack([drift_laplacian(dm, u) + 0.5 * u for u in s])
        return gr, sr

    k1g, k1s = stage(geo, scalars, t)
    k2g, k2s = stage(_geo_add(geo, k1g, dt / 2), None if scalars is None else scalars + (dt / 2) * k1s, t + dt / 2)
    k3g, k3s = stage(_geo_add(geo, k2g, dt / 2), None if scalars is None else scalars + (dt / 2) * k2s, t + dt / 2)
    k4g, k4s = stage(_geo_add(geo, k3g, dt), None if scalars is None else scalars + dt * k3s, t + dt)

    new_geo = geo
    for kg, w in ((k1g, 1.0), (k2g, 2.0), (k3g, 2.0), (k4g, 1.0)):
        new_geo = _geo_add(new_geo, kg, w * dt / 6.0)
    new_scal = None
    if scalars is not None:
        new_scal = scalars + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    return new_geo, new_scal


def step_modified_flow(
    state: FlowState,
    dt: float,
    *,
    modes: int = 32,
    noise_floor: float = 1e-13,
    stability_threshold: float | None = None,
    max_dt: float = MAX_STEP,
) -> FlowState:
    """Advance the coupled system by one explicit RK4 step.

    Local truncation error is O(dt^5) on resolved solutions.  Raises
    FlowBreakdownError if the metric coefficient loses positivity and
    StabilityError if truncated backward-heat modes outgrow the threshold.
    """
    if dt <= 0.0 or dt > max_dt:
        raise ConfigurationError(f"step size {dt} outside (0, {max_dt}]")
    dm = state.manifold
    geo = _geo_from_manifold(dm)
    if stability_threshold is None:
        stability_threshold = 1e6 * (1.0 + _geo_scale(geo))
    new_geo, _ = _rk4(geo, None, dm.f_constant, dm.t, dt, modes)
    new_geo = _clamp_noise(new_geo, modes, noise_floor)
    _check_stability(new_geo, stability_threshold)
    return FlowState.from_manifold(_manifold_from_geo(new_geo, dm.f_constant, dm.t + dt))


def _geo_scale(geo) -> float:
    scale = 0.0
    for entry in geo:
        if entry[0] == "circle":
            scale = max(scale, float(np.max(np.abs(entry[1]))), float(np.max(np.abs(entry[2]))))
        else:
            scale = max(scale, abs(entry[1]))
    return scale


# --------------------------------------------------------------------------
# Full runs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRequest:
    """Everything needed to reproduce one flow run deterministically."""

    family: object
    horizon: float
    dt: float = 1e-3
    cadence: int = 10
    resolution: int = 64
    hermite_order: int = 12
    modes: int = 32
    k: int = 2
    backend: str = "galerkin"
    eig_tol: float = 1e-10
    adaptive_tol: float = 1e-9
    noise_floor: float = 1e-13
    stability_factor: float = 1e6
    track_scalars: bool = True

    def __post_init__(self):
        if self.horizon < 0.0:
            raise ConfigurationError(f"horizon must be nonnegative, got {self.horizon}")
        if self.backend not in ("galerkin", "analytic"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if self.cadence < 1:
            raise ConfigurationError("output cadence must be a positive integer")
        if not (0.0 < self.dt <= MAX_STEP):
            raise ConfigurationError(f"dt {self.dt} outside (0, {MAX_STEP}]")


@dataclass
class FlowTrajectory:
    """Recorded outputs of one run plus everything needed to replay it."""

    request: RunRequest
    times: np.ndarray
    states: list
    spectra: list
    volumes: np.ndarray
    scalar_values: np.ndarray | None
    series: dict
    mixing: np.ndarray | None
    bounds: np.ndarray
    residual_ij: np.ndarray
    residual_commutator: np.ndarray

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def output_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def index_at(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 0.5 * max(self.output_dt, 1e-12):
            raise UsageError(f"no recorded output near t = {t}")
        return idx


def _advance(geo, scalars, f_constant, t, dt, modes, adaptive_tol, depth=0):
    """Plain RK4 step, recursively halved when step doubling flags the error."""
    full_geo, full_scal = _rk4(geo, scalars, f_constant, t, dt, modes)
    half_geo, half_scal = _rk4(geo, scalars, f_constant, t, dt / 2, modes)
    half_geo, half_scal = _rk4(half_geo, half_scal, f_constant, t + dt / 2, dt / 2, modes)
    err = _geo_diff(full_geo, half_geo) / 15.0
    if full_scal is not None:
        err = max(err, float(np.max(np.abs(full_scal - half_scal))) / 15.0)
    if err <= adaptive_tol or depth >= 12:
        if err > adaptive_tol:
            raise StabilityError(f"step error {err:.3e} persists after 12 halvings")
        return full_geo, full_scal
    g, s = _advance(geo, scalars, f_constant, t, dt / 2, modes, adaptive_tol, depth + 1)
    return _advance(g, s, f_constant, t + dt / 2, dt / 2, modes, adaptive_tol, depth + 1)


def _scalar_pairings(dm, scalars):
    n = scalars.shape[0]
    J = np.empty((n, n))
    D = np.empty((n, n))
    parts = [partials(dm, u) for u in scalars]
    for i in range(n):
        for j in range(i, n):
            J[i, j] = J[j, i] = dm.integrate(scalars[i] * scalars[j])
            D[i, j] = D[j, i] = dm.integrate(gradient_inner(dm, parts[i], parts[j]))
    hess = np.array([hessian_norm_sq(u, dm) for u in scalars])
    return J, D, hess


def _run_loop(request: RunRequest, scalars0):
    """Shared deterministic integration loop for runs and scalar replays."""
    family = request.family
    t0 = family.t0
    state0 = discretize(
        evaluate_family(family, t0),
        resolution=request.resolution,
        hermite_order=request.hermite_order,
    )
    nsteps = int(round(request.horizon / request.dt)) if request.horizon > 0 else 0
    dt = request.horizon / nsteps if nsteps else request.dt

    geo = _geo_from_manifold(state0)
    threshold = request.stability_factor * (1.0 + _geo_scale(geo))
    scalars = None if scalars0 is None else np.array(scalars0, dtype=float)

    out_steps = sorted({0, nsteps, *range(0, nsteps + 1, request.cadence)})
    outputs = []
    step = 0
    for step_target in out_steps:
        while step < step_target:
            t = t0 + step * dt
            if request.backend == "analytic":
                # Geometry advances by the exact closed form; scalars still
                # take RK4 stages against exact stage geometries.
                if scalars is not None:

                    def stage_rhs(s, tt):
                        dm_s = discretize(
                            evaluate_family(family, tt),
                            resolution=request.resolution,
                            hermite_order=request.hermite_order,
                        )
                        return np.stack([drift_laplacian(dm_s, u) + 0.5 * u for u in s])

                    k1 = stage_rhs(scalars, t)
                    k2 = stage_rhs(scalars + (dt / 2) * k1, t + dt / 2)
                    k3 = stage_rhs(scalars + (dt / 2) * k2, t + dt / 2)
                    k4 = stage_rhs(scalars + dt * k3, t + dt)
                    scalars = scalars + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            else:
                geo, scalars = _advance(
                    geo, scalars, state0.f_constant, t, dt, request.modes, request.adaptive_tol
                )
                geo = _clamp_noise(geo, request.modes, request.noise_floor)
                _check_stability(geo, threshold)
            step += 1
        t_now = t0 + step * dt
        if request.backend == "analytic":
            dm = discretize(
                evaluate_family(family, t_now),
                resolution=request.resolution,
                hermite_order=request.hermite_order,
            )
        else:
            dm = _manifold_from_geo(geo, state0.f_constant, t_now)
        outputs.append((t_now, dm, None if scalars is None else scalars.copy()))
    return state0, outputs


def run_flow(request: RunRequest) -> FlowTrajectory:
    """Integrate a scenario and record spectra, functionals, and diagnostics.

    Eigenvalue curves are matched across time by sorted order with
    multiplicity.  When scalars are tracked, the initial eigenfunctions
    u_1..u_k (weighted-L2 normalized, mean zero) evolve by the drift heat
    equation and their mass/energy pairings are recorded per output.
    """
    state0 = discretize(
        evaluate_family(request.family, request.family.t0),
        resolution=request.resolution,
        hermite_order=request.hermite_order,
    )
    spectrum0 = lowest_eigenpairs(assemble_forms(state0), request.k, request.eig_tol)
    scalars0 = (
        np.stack([spectrum0.eigenfunctions[i] for i in range(1, request.k + 1)])
        if request.track_scalars
        else None
    )

    _, outputs = _run_loop(request, scalars0)

    times = np.array([t for t, _, _ in outputs])
    states = [FlowState.from_manifold(dm) for _, dm, _ in outputs]
    spectra = [lowest_eigenpairs(assemble_forms(st.manifold), request.k, request.eig_tol) for st in states]
    volumes = np.array([st.volume for st in states])

    scalar_values = None
    series = {}
    mixing = None
    if scalars0 is not None:
        scalar_values = np.stack([s for _, _, s in outputs])
        n_out, ns = scalar_values.shape[0], scalar_values.shape[1]
        J = np.empty((n_out, ns, ns))
        D = np.empty((n_out, ns, ns))
        hess = np.empty((n_out, ns))
        mixing = np.empty((n_out, ns, ns))
        for m, st in enumerate(states):
            J[m], D[m], hess[m] = _scalar_pairings(st.manifold, scalar_values[m])
            _, mixing[m] = gram_schmidt_frame(list(scalar_values[m]), st, gram=J[m])
        I = np.einsum("mii->mi", J).copy()
        E = np.einsum("mii->mi", D).copy()
        series = {"J": J, "D": D, "I": I, "E": E, "F": E / I, "hessian": hess}

    lam0 = spectra[0].eigenvalues
    bounds = np.full((len(times), request.k), np.inf)
    for j in range(1, request.k + 1):
        for m, t in enumerate(times):
            try:
                bounds[m, j - 1] = eigenvalue_bound(lam0[j], t - times[0])
            except HorizonError:
                bounds[m, j - 1] = np.inf

    traj = FlowTrajectory(
        request=request,
        times=times,
        states=states,
        spectra=spectra,
        volumes=volumes,
        scalar_values=scalar_values,
        series=series,
        mixing=mixing,
        bounds=bounds,
        residual_ij=np.full(len(times), np.nan),
        residual_commutator=np.full(len(times), np.nan),
    )

    if scalars0 is not None and len(times) >= 3:
        rep = functional_residuals(traj)
        traj.residual_ij = rep.pointwise_ij
    if len(times) >= 3:
        probe = spectrum0.eigenfunctions[1]
        traj.residual_commutator = _commutator_series(probe, traj)
    return traj


# --------------------------------------------------------------------------
# Scalar evolution and evolution-identity residuals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarTrajectory:
    times: np.ndarray
    values: np.ndarray  # (n_outputs, *grid)
    means: np.ndarray  # weighted means against e^{-f} dv

    def final(self) -> np.ndarray:
        return self.values[-1]


def evolve_scalar(u0, traj: FlowTrajectory) -> ScalarTrajectory:
    """Evolve u_t = L u + u/2 along a recorded run with matching RK4 stages.

    The geometry replay is deterministic, so the scalar sees exactly the
    stage states of the original integration.  If the weighted mean of u0
    vanishes it stays zero for all later times (up to integration error).
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != traj.states[0].manifold.shape:
        raise UsageError(f"scalar shape {u0.shape} does not match grid {traj.states[0].manifold.shape}")
    _, outputs = _run_loop(traj.request, np.stack([u0]))
    times = np.array([t for t, _, _ in outputs])
    values = np.stack([s[0] for _, _, s in outputs])
    means = np.array([dm.integrate(s[0]) for _, dm, s in outputs])
    return ScalarTrajectory(times=times, values=values, means=means)


@dataclass(frozen=True)
class FunctionalResidualReport:
    """Finite-difference defects of the evolution identities along a run.

    ``max_rel_*`` compare d/dt of the recorded pairings against their exact
    right-hand sides (J' = J - 2D and so on), normalized by the sup of the
    series involved.  Sign records cover E' <= 0 and F' <= F (2F - 1).
    """

    max_rel_J: float
    max_rel_I: float
    max_rel_E: float
    max_rel_F: float
    energy_violation: float
    energy_scale: float
    quotient_excess: float
    pointwise_ij: np.ndarray

    @property
    def energy_nonincreasing(self) -> bool:
        return self.energy_violation <= 1e-8 * max(self.energy_scale, 1e-300)


def functional_residuals(traj: FlowTrajectory, scalar_indices=None) -> FunctionalResidualReport:
    if not traj.series:
        raise UsageError("trajectory has no tracked scalars")
    if len(traj.times) < 3:
        raise UsageError("need at least 3 outputs for time derivatives")
    dt = traj.output_dt
    if scalar_indices is None:
        J, D = traj.series["J"], traj.series["D"]
        I, E, F = traj.series["I"], traj.series["E"], traj.series["F"]
        hess = traj.series["hessian"]
    else:
        sel = list(scalar_indices)
        block = np.ix_(np.arange(len(traj.times)), sel, sel)
        J, D = traj.series["J"][block], traj.series["D"][block]
        I, E, F = (traj.series[key][:, sel] for key in ("I", "E", "F"))
        hess = traj.series["hessian"][:, sel]

    dJ = finite_diff_time_derivative(J, dt)
    rhsJ = J - 2.0 * D
    scaleJ = max(float(np.max(np.abs(rhsJ))), float(np.max(np.abs(dJ))), 1e-12)
    resJ = np.abs(dJ - rhsJ)
    max_rel_J = float(np.max(resJ)) / scaleJ

    dI = finite_diff_time_derivative(I, dt)
    rhsI = I - 2.0 * E
    scaleI = max(float(np.max(np.abs(rhsI))), float(np.max(np.abs(dI))), 1e-12)
    max_rel_I = float(np.max(np.abs(dI - rhsI))) / scaleI

    dE = finite_diff_time_derivative(E, dt)
    rhsE = -2.0 * hess
    scaleE = max(float(np.max(np.abs(E))), 1e-12)
    max_rel_E = float(np.max(np.abs(dE - rhsE))) / scaleE

    dF = finite_diff_time_derivative(F, dt)
    rhsF = -2.0 * hess / I + F * (2.0 * F - 1.0)
    scaleF = max(float(np.max(np.abs(rhsF))), float(np.max(np.abs(dF))), 1e-12)
    max_rel_F = float(np.max(np.abs(dF - rhsF))) / scaleF

    energy_violation = max(0.0, float(np.max(np.diff(E, axis=0))))
    quotient_excess = max(0.0, float(np.max(np.diff(F, axis=0) / dt - F[:-1] * (2.0 * F[:-1] - 1.0))))

    pointwise = np.max(np.abs(dJ - rhsJ), axis=(1, 2)) / scaleJ
    return FunctionalResidualReport(
        max_rel_J=max_rel_J,
        max_rel_I=max_rel_I,
        max_rel_E=max_rel_E,
        max_rel_F=max_rel_F,
        energy_violation=energy_violation,
        energy_scale=scaleE,
        quotient_excess=quotient_excess,
        pointwise_ij=pointwise,
    )


# --------------------------------------------------------------------------
# Gram-Schmidt frames and the commutator residual
# --------------------------------------------------------------------------


def gram_schmidt_frame(scalars, state, gram=None):
    """Lower-triangular mixing onto a weighted-L2 orthonormal frame.

    Returns (frame, mixing) with frame_i = sum_j mixing[i, j] * scalars[j].
    Along a run started from orthonormal eigenfunctions, the diagonal drifts
    at rate (2 lambda_i - 1)/2 at the initial time.
    """
    dm = state.manifold if isinstance(state, FlowState) else state
    fields = [np.asarray(u, dtype=float) for u in scalars]
    n = len(fields)
    if gram is None:
        gram = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                gram[i, j] = gram[j, i] = dm.integrate(fields[i] * fields[j])
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("scalars are linearly dependent in weighted L2") from exc
    # a rank-deficient Gram matrix can slip through Cholesky with a pivot of
    # order sqrt(machine epsilon) times the scale
    if np.min(np.diag(L)) < 1e-7 * math.sqrt(max(np.max(np.diag(gram)), 1e-300)):
        raise DegeneracyError("scalars are numerically rank deficient in weighted L2")
    from scipy.linalg import solve_triangular

    mixing = solve_triangular(L, np.eye(n), lower=True)
    frame = [sum(mixing[i, j] * fields[j] for j in range(i + 1)) for i in range(n)]
    return frame, mixing


def _commutator_series(u, traj: FlowTrajectory) -> np.ndarray:
    lus = [drift_laplacian(st.manifold, u) for st in traj.states]
    out = np.full(len(traj.times), np.nan)
    for m in range(1, len(traj.times) - 1):
        out[m] = _commutator_at(u, traj, m, lus)
    return out


def _commutator_at(u, traj, index, lus=None) -> float:
    dt = traj.output_dt
    st = traj.states[index]
    dm = st.manifold
    if lus is None:
        lu_prev = drift_laplacian(traj.states[index - 1].manifold, u)
        lu_next = drift_laplacian(traj.states[index + 1].manifold, u)
    else:
        lu_prev, lu_next = lus[index - 1], lus[index + 1]
    d_lu = (lu_next - lu_prev) / (2.0 * dt)
    du = partials(dm, u)
    W = []
    for i, ax in enumerate(dm.axes):
        a = dm.axis_profile(i, ax.a)
        W.append(dm.axis_profile(i, st.phi[i]) * du[i] / (a * a))
    div_term = 2.0 * drift_divergence(W, dm)
    resid = d_lu + div_term  # L u_t vanishes: u is fixed in coordinates
    norm = lambda g: math.sqrt(max(dm.integrate(g * g), 0.0))
    scale = max(norm(d_lu), norm(div_term))
    if scale < 1e-300:
        return float(norm(resid))
    return float(norm(resid) / scale)


def commutator_residual(u, traj: FlowTrajectory, index: int) -> float:
    """Weighted-L2 defect of d/dt(L u) = L u_t - 2 div_f(phi(grad u)).

    ``u`` is held fixed in coordinates so the time derivative acts only
    through the evolving metric and weight; d/dt is a central difference at
    the recorded output times, hence O(dt^2) on smooth runs.
    """
    u = np.asarray(u, dtype=float)
    if index < 1 or index > len(traj.times) - 2:
        raise UsageError("commutator residual needs an interior output index")
    return _commutator_at(u, traj, index)


# --------------------------------------------------------------------------
# Closed-form family residual (finite differences in time)
# --------------------------------------------------------------------------


def flow_equation_residual(family, t: float, dt: float, resolution: int = 64, hermite_order: int = 12) -> dict:
    """Sup-norm defect of the flow equations for a closed-form family at t.

    Central time differences of the sampled (g, f) are compared against the
    exact right-hand sides; for a genuine solution both defects are O(dt^2).
    """
    dms = [
        discretize(evaluate_family(family, t + s), resolution=resolution, hermite_order=hermite_order)
        for s in (-dt, 0.0, dt)
    ]
    metric_res = 0.0
    weight_res = 0.0
    for i, ax in enumerate(dms[1].axes):
        if ax.kind == "circle":
            prev_ax, next_ax = dms[0].axes[i], dms[2].axes[i]
            a_dot = (next_ax.a - prev_ax.a) / (2.0 * dt)
            f_dot = (next_ax.f - prev_ax.f) / (2.0 * dt)
            hess_f = ax.d2_vec(ax.f) - ax.christoffel * ax.fprime
            metric_res = max(metric_res, float(np.max(np.abs(a_dot - (ax.a - 2.0 * hess_f)))))
            weight_res = max(weight_res, float(np.max(np.abs(f_dot - (0.5 - hess_f / ax.a)))))
        else:
            a_dot = (dms[2].axes[i].scale - dms[0].axes[i].scale) / (2.0 * dt)
            f_dot = (dms[2].axes[i].f - dms[0].axes[i].f) / (2.0 * dt)
            metric_res = max(metric_res, abs(a_dot - (ax.scale - 1.0)))
            weight_res = max(
                weight_res,
                float(np.max(np.abs(f_dot - (0.5 - 0.5 / ax.scale)))),
            )
    return {"metric": metric_res, "weight": weight_res}
