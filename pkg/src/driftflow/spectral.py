"""Drift-Laplacian quadratic forms, eigenpairs, and weighted functionals.

The operator L = Delta - grad_f is represented weakly by the pair of forms

    D(u, v) = integral <grad u, grad v> e^{-f} dv      (stiffness)
    J(u, v) = integral u v e^{-f} dv                   (mass)

so that D u = lambda J u is the weak form of -L u = lambda u.  On product
grids the stiffness is the sum of per-axis blocks; the mass is diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, UndefinedQuotientError, UsageError
from .geometry import DiscreteWeightedManifold

__all__ = [
    "QuadraticForms",
    "SpectralResult",
    "assemble_forms",
    "lowest_eigenpairs",
    "weighted_pairings",
    "energy_profile",
    "hessian_norm_sq",
    "bochner_sides",
    "bochner_residual",
    "drift_divergence",
    "partials",
    "gradient_inner",
    "drift_laplacian",
    "soliton_defect_profiles",
]


def _check_field(dm: DiscreteWeightedManifold, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != dm.shape:
        raise UsageError(f"field shape {u.shape} does not match grid {dm.shape}")
    return u


def partials(dm: DiscreteWeightedManifold, u) -> list[np.ndarray]:
    """Coordinate partial derivatives of ``u`` along every axis."""
    u = _check_field(dm, u)
    return [ax.d1(u, i) for i, ax in enumerate(dm.axes)]


def gradient_inner(dm: DiscreteWeightedManifold, du: list, dv: list) -> np.ndarray:
    """Pointwise <grad u, grad v> from coordinate partials (diagonal metric)."""
    out = np.zeros(dm.shape)
    for i, ax in enumerate(dm.axes):
        ainv = 1.0 / dm.axis_profile(i, ax.a)
        out += ainv * du[i] * dv[i]
    return out


def drift_laplacian(dm: DiscreteWeightedManifold, u) -> np.ndarray:
    """L u = Delta u - <grad u, grad f> evaluated pseudo-spectrally."""
    u = _check_field(dm, u)
    out = np.zeros(dm.shape)
    for i, ax in enumerate(dm.axes):
        du = ax.d1(u, i)
        d2u = ax.d2(u, i)
        gamma = dm.axis_profile(i, ax.christoffel)
        fp = dm.axis_profile(i, ax.fprime)
        ainv = 1.0 / dm.axis_profile(i, ax.a)
        out += ainv * (d2u - gamma * du) - ainv * du * fp
    return out


def drift_divergence(V, dm: DiscreteWeightedManifold) -> np.ndarray:
    """f-divergence of a vector field given by contravariant components.

    div_f V = div V - <V, grad f>; for the weighted measure this integrates
    to zero on closed factors, and div_f(grad u) = L u.
    """
    if len(V) != dm.dimension:
        raise UsageError(f"expected {dm.dimension} vector components, got {len(V)}")
    out = np.zeros(dm.shape)
    for i, ax in enumerate(dm.axes):
        Vi = _check_field(dm, V[i])
        gamma = dm.axis_profile(i, ax.christoffel)
        fp = dm.axis_profile(i, ax.fprime)
        out += ax.d1(Vi, i) + Vi * (gamma - fp)
    return out


def weighted_pairings(u, v, dm: DiscreteWeightedManifold) -> dict:
    """Quadrature values of the mass and Dirichlet pairings of two fields."""
    u = _check_field(dm, u)
    v = _check_field(dm, v)
    du = partials(dm, u)
    dv = partials(dm, v)
    return {
        "J": dm.integrate(u * v),
        "D": dm.integrate(gradient_inner(dm, du, dv)),
    }


def energy_profile(u, dm: DiscreteWeightedManifold) -> dict:
    """Weighted L2 mass I, Dirichlet energy E, and Rayleigh quotient F = E/I."""
    p = weighted_pairings(u, u, dm)
    I, E = p["J"], p["D"]
    if not (I > 0.0):
        raise UndefinedQuotientError("Rayleigh quotient undefined: field has zero weighted mass")
    return {"I": I, "E": E, "F": E / I}


def _hessian_components(dm: DiscreteWeightedManifold, u: np.ndarray):
    """Upper-triangular covariant Hessian components keyed by axis pair."""
    du = partials(dm, u)
    comps = {}
    for i, ax in enumerate(dm.axes):
        gamma = dm.axis_profile(i, ax.christoffel)
        comps[(i, i)] = ax.d2(u, i) - gamma * du[i]
        for j in range(i + 1, dm.dimension):
            comps[(i, j)] = dm.axes[j].d1(du[i], j)
    return comps


def hessian_norm_sq(u, dm: DiscreteWeightedManifold) -> float:
    """Weighted integral of |Hess u|^2.

    In circle coordinates the single-axis component is u'' - (a'/2a) u' with
    squared norm a^{-2} (u'' - Gamma u')^2; cross components on products are
    plain mixed partials (the metric is block diagonal and flat).
    """
    u = _check_field(dm, u)
    comps = _hessian_components(dm, u)
    total = np.zeros(dm.shape)
    for (i, j), h in comps.items():
        ai = dm.axis_profile(i, dm.axes[i].a)
        aj = dm.axis_profile(j, dm.axes[j].a)
        term = h * h / (ai * aj)
        total += term if i == j else 2.0 * term
    return dm.integrate(total)


def soliton_defect_profiles(dm: DiscreteWeightedManifold) -> list:
    """Per-axis samples of phi = g/2 - Hess_f - Ric (diagonal on products).

    Vanishes identically on the static Gaussian shrinker and equals half the
    metric velocity along exact solutions of the coupled flow.
    """
    profiles = []
    for ax in dm.axes:
        if ax.kind == "circle":
            hess_f = ax.d2_vec(ax.f) - ax.christoffel * ax.fprime
            profiles.append(0.5 * ax.a - hess_f)
        else:
            # Hess of x^2/4 is 1/2; the log-constant part is spatially flat.
            profiles.append(np.full(ax.size, 0.5 * ax.a - 0.5))
    return profiles


def bochner_sides(u, dm: DiscreteWeightedManifold) -> tuple[float, float]:
    """Both sides of the integrated drift Bochner identity.

    Left: the soliton defect paired with grad u against e^{-f} dv.  Right:
    Hessian energy plus half the Dirichlet energy minus the L-image mass.
    The two agree for smooth fields.
    """
    u = _check_field(dm, u)
    du = partials(dm, u)
    phi = soliton_defect_profiles(dm)
    lhs_integrand = np.zeros(dm.shape)
    for i, ax in enumerate(dm.axes):
        ainv = 1.0 / dm.axis_profile(i, ax.a)
        lhs_integrand += dm.axis_profile(i, phi[i]) * (ainv * du[i]) ** 2
    lhs = dm.integrate(lhs_integrand)
    lu = drift_laplacian(dm, u)
    rhs = (
        hessian_norm_sq(u, dm)
        + 0.5 * dm.integrate(gradient_inner(dm, du, du))
        - dm.integrate(lu * lu)
    )
    return lhs, rhs


def bochner_residual(u, dm: DiscreteWeightedManifold) -> float:
    """Absolute defect of the integrated drift Bochner identity for ``u``."""
    lhs, rhs = bochner_sides(u, dm)
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# Forms and eigenpairs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticForms:
    """Assembled stiffness/mass pair over the flattened tensor grid."""

    manifold: DiscreteWeightedManifold
    stiffness: np.ndarray
    mass_diag: np.ndarray

    def J(self, u, v) -> float:
        uf = _check_field(self.manifold, u).ravel()
        vf = _check_field(self.manifold, v).ravel()
        return float(uf @ (self.mass_diag * vf))

    def D(self, u, v) -> float:
        uf = _check_field(self.manifold, u).ravel()
        vf = _check_field(self.manifold, v).ravel()
        return float(uf @ (self.stiffness @ vf))

    @property
    def dimension(self) -> int:
        return self.mass_diag.size


def assemble_forms(dm: DiscreteWeightedManifold) -> QuadraticForms:
    """Build the generalized eigenproblem matrices D u = lambda J u.

    Circle-axis stiffness weights u'v' by a^{-1/2} e^{-f} per node (the weak
    form of the drift Laplacian on a dtheta^2); Gaussian axes contribute their
    exact Hermite blocks.  The mass is the diagonal quadrature weight.
    """
    scale = math.exp(-dm.f_constant)
    mass = dm.flatten_weight()
    size = dm.size
    stiff = np.zeros((size, size))
    for i, ax in enumerate(dm.axes):
        block = ax.stiffness_matrix()
        factor = np.ones((1, 1))
        for j, other in enumerate(dm.axes):
            piece = block if j == i else np.diag(other.mass_diag())
            factor = np.kron(factor, piece)
        stiff += factor
    stiff *= scale
    return QuadraticForms(manifold=dm, stiffness=stiff, mass_diag=mass)


@dataclass(frozen=True)
class SpectralResult:
    """Lowest eigenpairs of the drift Laplacian on one state.

    Eigenfunctions are node-value tensors, J-orthonormal, sorted ascending
    with multiplicity; ``residuals`` are norms of the generalized
    eigen-equation defect for each pair.
    """

    t: float
    eigenvalues: np.ndarray
    eigenfunctions: list
    residuals: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "normalization": "weighted-L2",
        }


def _axis_eigens(ax, count):
    if ax.kind == "hermite":
        return ax.eigens()
    if ax.size < 512:
        return ax.eigens()
    # Large circle grids: iterative shift-invert for the few pairs we need.
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    try:
        vals, vecs = eigsh(
            ax.stiffness_matrix(),
            k=min(count + 2, ax.size - 2),
            M=np.diag(ax.mass_diag()),
            sigma=0.0,
            which="LM",
        )
    except ArpackNoConvergence as exc:  # pragma: no cover - defensive
        raise SolverError("circle eigensolve did not converge", best_residual=None) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def lowest_eigenpairs(forms: QuadraticForms, k: int, tol: float = 1e-10) -> SpectralResult:
    """k+1 smallest eigenpairs of the weak drift Laplacian.

    Product states are solved axis by axis (the operator decouples on the
    supported geometry) and combined by Minkowski sums; the result is checked
    against the assembled forms and rejected if any residual exceeds ``tol``.
    The constant eigenfunction carries lambda_0 = 0; all later eigenfunctions
    are J-orthogonal to it, which realizes the mean-zero constraint.
    """
    dm = forms.manifold
    if k < 1:
        raise UsageError("eigenpair count k must be at least 1")
    if k + 1 > dm.size:
        raise UsageError(f"requested {k + 1} pairs from a dimension-{dm.size} problem")

    per_axis = []
    for ax in dm.axes:
        vals, vecs = _axis_eigens(ax, k)
        take = min(k + 1, len(vals))
        per_axis.append((vals[:take], vecs[:, :take]))

    # Enumerate candidate index tuples; the k+1 smallest sums only ever use
    # per-axis indices at most k, so this cover is exhaustive.
    grids = np.meshgrid(*[np.arange(len(v)) for v, _ in per_axis], indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)
    sums = np.array([sum(per_axis[i][0][t[i]] for i in range(dm.dimension)) for t in tuples])
    order = np.argsort(sums, kind="stable")[: k + 1]

    norm_fix = math.exp(dm.f_constant / 2.0)
    eigenvalues = []
    fields = []
    residuals = []
    mass = forms.mass_diag
    for idx in order:
        tup = tuples[idx]
        lam = float(sums[idx])
        field = np.ones(dm.shape)
        for i in range(dm.dimension):
            field = field * dm.axis_profile(i, per_axis[i][1][:, tup[i]])
        field = field * norm_fix
        flat = field.ravel()
        peak = flat[np.argmax(np.abs(flat))]
        if peak < 0:
            field = -field
            flat = -flat
        ku = forms.stiffness @ flat
        mu = mass * flat
        res = ku - lam * mu
        scale = np.linalg.norm(ku) + (1.0 + abs(lam)) * np.linalg.norm(mu)
        residuals.append(float(np.linalg.norm(res) / scale))
        eigenvalues.append(lam)
        fields.append(field)

    residuals = np.array(residuals)
    if np.max(residuals) > tol:
        raise SolverError(
            f"eigen-residual {np.max(residuals):.3e} exceeds tolerance {tol:.3e}",
            best_residual=float(np.max(residuals)),
        )
    return SpectralResult(
        t=dm.t,
        eigenvalues=np.array(eigenvalues),
        eigenfunctions=fields,
        residuals=residuals,
    )
