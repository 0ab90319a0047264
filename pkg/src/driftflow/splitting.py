"""Numerical rigidity certificates for flat-direction splitting.

When the k-th eigenvalue sits at 1/2 at time t0 and the first eigenvalue is
still at least 1/2 at a later t1, the state must split off k flat directions
carrying a Gaussian weight.  The certificate records the measurable
consequences of that rigidity instead of reconstructing the complement
factor: vanishing Hessian energy of the direction fields, orthonormal
parallel gradients, the weight decomposition f = f_N + (1/4) sum u_i^2, and
the reduced factor equations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .flow import FlowState, FlowTrajectory
from .spectral import gradient_inner, hessian_norm_sq, partials

__all__ = [
    "SplittingTolerances",
    "SplittingCertificate",
    "SplittingHypothesisFailure",
    "detect_splitting",
    "certificate_residuals",
]


@dataclass(frozen=True)
class SplittingTolerances:
    eigenvalue: float
    hessian_energy: float
    gradient: float
    weight_decomposition: float
    metric_block: float
    factor_equations: float

    @classmethod
    def for_backend(cls, backend: str) -> "SplittingTolerances":
        if backend == "analytic":
            return cls(1e-8, 1e-10, 1e-8, 1e-8, 1e-8, 1e-8)
        return cls(1e-5, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6)


@dataclass(frozen=True)
class SplittingHypothesisFailure:
    """Names the hypothesis that blocked certificate construction."""

    violated: str
    lambda_cluster_t0: float
    lambda_1_t1: float
    message: str

    def __bool__(self) -> bool:
        return False


@dataclass
class SplittingCertificate:
    """Evidence that the state splits off k flat Gaussian-weighted directions."""

    k: int
    directions: list
    hessian_energies: np.ndarray
    gradient_gram_mean: float
    gradient_gram_deviation: float
    gradient_norm_deviation: float
    weight_residual: float
    metric_residual: float
    factor_eq_residuals: dict
    eigenvalue_window_deviation: float
    lambda_cluster_t0: float
    lambda_1_t1: float
    tolerances: SplittingTolerances

    @property
    def valid(self) -> bool:
        tol = self.tolerances
        return bool(
            self.k >= 1
            and self.eigenvalue_window_deviation <= tol.eigenvalue
            and np.all(self.hessian_energies <= tol.hessian_energy)
            and self.gradient_gram_deviation <= tol.gradient
            and self.gradient_norm_deviation <= tol.gradient
            and self.weight_residual <= tol.weight_decomposition
            and self.metric_residual <= tol.metric_block
            and self.factor_eq_residuals["check1"] <= tol.factor_equations
            and self.factor_eq_residuals["check2"] <= tol.factor_equations
        )

    def __bool__(self) -> bool:
        return True

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "valid": self.valid,
            "hypotheses": {
                "lambda_cluster_t0": self.lambda_cluster_t0,
                "lambda_1_t1": self.lambda_1_t1,
            },
            "residuals": {
                "hessian_energies": [float(x) for x in self.hessian_energies],
                "gradient_gram_mean": self.gradient_gram_mean,
                "gradient_gram_deviation": self.gradient_gram_deviation,
                "gradient_norm_deviation": self.gradient_norm_deviation,
                "weight_decomposition": self.weight_residual,
                "metric_block": self.metric_residual,
                "factor_equation_1": self.factor_eq_residuals["check1"],
                "factor_equation_2": self.factor_eq_residuals["check2"],
                "eigenvalue_window_deviation": self.eigenvalue_window_deviation,
            },
            "tolerances": {
                "eigenvalue": self.tolerances.eigenvalue,
                "hessian_energy": self.tolerances.hessian_energy,
                "gradient": self.tolerances.gradient,
                "weight_decomposition": self.tolerances.weight_decomposition,
                "metric_block": self.tolerances.metric_block,
                "factor_equations": self.tolerances.factor_equations,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _axis_hessian_f(dm, i):
    ax = dm.axes[i]
    if ax.kind == "circle":
        return ax.d2_vec(ax.f) - ax.christoffel * ax.fprime
    return np.full(ax.size, 0.5)


def _split_axes(dm, grads):
    """Axes along which some direction field actually varies."""
    strengths = np.zeros(dm.dimension)
    for i in range(dm.dimension):
        for du in grads:
            strengths[i] = max(strengths[i], float(np.max(np.abs(du[i]))))
    scale = max(float(np.max(strengths)), 1e-300)
    return [i for i in range(dm.dimension) if strengths[i] > 1e-3 * scale]


def _axis_average(dm, field, axes_to_avg):
    """Weighted average of a field over the given axes, broadcast back."""
    out = field
    for i in axes_to_avg:
        w = dm.axes[i].wdens
        w = w / np.sum(w)
        shape = [1] * dm.dimension
        shape[i] = dm.shape[i]
        out = np.sum(out * np.reshape(w, shape), axis=i, keepdims=True)
    return np.broadcast_to(out, dm.shape)


def certificate_residuals(cert: SplittingCertificate, state: FlowState) -> dict:
    """Recompute every certificate residual on a given state.

    Covers the parallelism test (Hessian energies), the unit-speed and
    orthogonality tests on the gradients, the weight decomposition, the
    metric block structure, and the reduced factor equations for the
    non-split part.
    """
    dm = state.manifold
    if cert.k == 0:
        return {
            "hessian_energies": np.zeros(0),
            "gradient_norm_deviation": 0.0,
            "gradient_gram_mean": 0.0,
            "gradient_gram_deviation": 0.0,
            "weight_residual": 0.0,
            "metric_residual": 0.0,
            "check1": 0.0,
            "check2": 0.0,
        }
    dirs = [np.asarray(u, dtype=float) for u in cert.directions]
    grads = [partials(dm, u) for u in dirs]
    hess_energies = np.array([hessian_norm_sq(u, dm) for u in dirs])

    # Pointwise gradient inner products: parallel orthonormal gradients make
    # these constant delta_ij fields.
    norm_dev = 0.0
    gram_dev = 0.0
    gram_sum = 0.0
    for i in range(cert.k):
        for j in range(i, cert.k):
            pij = gradient_inner(dm, grads[i], grads[j])
            target = 1.0 if i == j else 0.0
            dev = float(np.max(np.abs(pij - target)))
            if i == j:
                norm_dev = max(norm_dev, dev)
            else:
                gram_dev = max(gram_dev, dev)
            gram_sum += dm.integrate(pij) / dm.weighted_volume()
    gram_mean = gram_sum / (cert.k * (cert.k + 1) / 2)
    gram_dev = max(gram_dev, norm_dev)

    split = _split_axes(dm, grads)
    quarter_sq = 0.25 * sum(u * u for u in dirs)

    fbar = dm.f_field() - quarter_sq
    f_n = _axis_average(dm, fbar, split)
    weight_residual = float(np.max(np.abs(fbar - f_n)))

    metric_residual = 0.0
    for i, ax in enumerate(dm.axes):
        a = dm.axis_profile(i, ax.a)
        speed = sum(du[i] * du[i] for du in grads) / a
        target = 1.0 if i in split else 0.0
        metric_residual = max(metric_residual, float(np.max(np.abs(speed - target))))

    # Reduced factor equations: the split block of g - 2 Hess_f must be
    # static, the complement must see Hess_f through fbar only, and the
    # weight equation loses exactly k/2 through Delta(quarter_sq).
    check1 = 0.0
    dq = partials(dm, quarter_sq)
    for i, ax in enumerate(dm.axes):
        hess_f = dm.axis_profile(i, _axis_hessian_f(dm, i))
        gamma = dm.axis_profile(i, ax.christoffel)
        hess_q = ax.d2(quarter_sq, i) - gamma * dq[i]
        a = dm.axis_profile(i, ax.a)
        if i in split:
            check1 = max(check1, float(np.max(np.abs(a - 2.0 * hess_f))))
        else:
            check1 = max(check1, float(np.max(np.abs(2.0 * hess_q))))
        for j in range(i + 1, dm.dimension):
            cross = dm.axes[j].d1(dq[i], j)
            check1 = max(check1, float(np.max(np.abs(2.0 * cross))))

    lap_q = np.zeros(dm.shape)
    for i, ax in enumerate(dm.axes):
        gamma = dm.axis_profile(i, ax.christoffel)
        a = dm.axis_profile(i, ax.a)
        lap_q += (ax.d2(quarter_sq, i) - gamma * dq[i]) / a
    check2 = float(np.max(np.abs(lap_q - cert.k / 2.0)))

    return {
        "hessian_energies": hess_energies,
        "gradient_norm_deviation": norm_dev,
        "gradient_gram_mean": gram_mean,
        "gradient_gram_deviation": gram_dev,
        "weight_residual": weight_residual,
        "metric_residual": metric_residual,
        "check1": check1,
        "check2": check2,
    }


def detect_splitting(traj: FlowTrajectory, t0: float, t1: float, tol: SplittingTolerances | None = None):
    """Build a splitting certificate from the eigenvalue-1/2 cluster.

    Requires recorded spectra at both times; returns a
    SplittingHypothesisFailure naming the violated hypothesis when the
    eigenvalue conditions do not hold.
    """
    if t1 <= t0:
        raise UsageError("need t0 < t1 inside the trajectory")
    if not traj.spectra:
        raise UsageError("trajectory carries no spectra")
    if tol is None:
        tol = SplittingTolerances.for_backend(traj.request.backend)
    i0 = traj.index_at(t0)
    i1 = traj.index_at(t1)

    lam0 = traj.spectra[i0].eigenvalues
    lam1 = traj.spectra[i1].eigenvalues
    cluster = [i for i in range(1, len(lam0)) if abs(lam0[i] - 0.5) <= tol.eigenvalue]
    if not cluster:
        nearest = float(lam0[1]) if len(lam0) > 1 else math.nan
        return SplittingHypothesisFailure(
            violated="lambda_k(t0) = 1/2",
            lambda_cluster_t0=nearest,
            lambda_1_t1=float(lam1[1]),
            message=f"no eigenvalue within {tol.eigenvalue:g} of 1/2 at t0 (lambda_1 = {nearest:.6g})",
        )
    if lam1[1] < 0.5 - tol.eigenvalue:
        return SplittingHypothesisFailure(
            violated="lambda_1(t1) >= 1/2",
            lambda_cluster_t0=float(lam0[cluster[-1]]),
            lambda_1_t1=float(lam1[1]),
            message=f"lambda_1(t1) = {lam1[1]:.6g} dropped below 1/2",
        )

    k = len(cluster)
    window_dev = 0.0
    for m in range(i0, i1 + 1):
        lam = traj.spectra[m].eigenvalues
        for i in cluster:
            window_dev = max(window_dev, abs(float(lam[i]) - 0.5))

    state0 = traj.states[i0]
    dm = state0.manifold
    volume = dm.weighted_volume()
    directions = []
    for i in cluster:
        u = traj.spectra[i0].eigenfunctions[i]
        du = partials(dm, u)
        energy = dm.integrate(gradient_inner(dm, du, du))
        directions.append(u * math.sqrt(volume / energy))

    cert = SplittingCertificate(
        k=k,
        directions=directions,
        hessian_energies=np.zeros(k),
        gradient_gram_mean=0.0,
        gradient_gram_deviation=0.0,
        gradient_norm_deviation=0.0,
        weight_residual=0.0,
        metric_residual=0.0,
        factor_eq_residuals={"check1": 0.0, "check2": 0.0},
        eigenvalue_window_deviation=window_dev,
        lambda_cluster_t0=float(lam0[cluster[-1]]),
        lambda_1_t1=float(lam1[1]),
        tolerances=tol,
    )
    worst = {}
    for state in (traj.states[i0], traj.states[i1]):
        res = certificate_residuals(cert, state)
        for key, val in res.items():
            cur = worst.get(key)
            if key == "hessian_energies":
                worst[key] = val if cur is None else np.maximum(cur, val)
            else:
                worst[key] = val if cur is None else max(cur, val)
    cert.hessian_energies = worst["hessian_energies"]
    cert.gradient_gram_mean = worst["gradient_gram_mean"]
    cert.gradient_gram_deviation = worst["gradient_gram_deviation"]
    cert.gradient_norm_deviation = worst["gradient_norm_deviation"]
    cert.weight_residual = worst["weight_residual"]
    cert.metric_residual = worst["metric_residual"]
    cert.factor_eq_residuals = {"check1": worst["check1"], "check2": worst["check2"]}
    return cert
