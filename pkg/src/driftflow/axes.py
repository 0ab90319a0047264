"""Discrete spectral axes for the supported flat factor geometries.

Two axis kinds cover everything in scope:

* ``CircleAxis`` -- periodic coordinate on [0, 2pi) with metric a(theta) dtheta^2,
  Fourier collocation on a uniform grid, trapezoidal quadrature.
* ``HermiteLineAxis`` -- Gaussian line with constant metric multiplier a and
  weight x^2/4 + (1/2) log a, represented exactly on the Hermite eigenbasis
  of the one-dimensional drift Laplacian (Ornstein-Uhlenbeck structure).

Fields are stored as node values; each axis knows how to differentiate along
its own dimension and how to build its one-dimensional mass/stiffness blocks.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import hermite_e

from .errors import AssemblyError, ConfigurationError

TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)


def apply_along(mat: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply a square matrix along one dimension of a multi-axis field."""
    moved = np.moveaxis(arr, axis, 0)
    out = np.tensordot(mat, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def apply_deriv(mat: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply a derivative matrix along one dimension of a field.

    Derivative operators annihilate constants analytically; subtracting a
    reference slice first makes that exact in floating point as well, so
    spatially constant fields have bitwise-zero derivatives.
    """
    moved = np.moveaxis(arr, axis, 0)
    out = np.tensordot(mat, moved - moved[:1], axes=(1, 0))
    return np.moveaxis(out, 0, axis)


# --------------------------------------------------------------------------
# Fourier machinery (cached per grid size)
# --------------------------------------------------------------------------

_FOURIER_CACHE: dict[int, dict[str, np.ndarray]] = {}


def _fourier_ops(n: int) -> dict[str, np.ndarray]:
    """Dense spectral operators for an n-point uniform periodic grid.

    ``d1``/``d2``: first/second derivative at the nodes (Nyquist killed in d1,
    kept in d2, the usual collocation convention).
    ``d1_stag``: first derivative evaluated at the half-shifted nodes
    theta_j + pi/n.  On the shifted grid the Nyquist sawtooth has a nonzero
    derivative, so the weak-form stiffness built from d1_stag has a simple
    kernel (constants only) even for even n.
    ``interp_stag``: interpolation of node values to the shifted nodes.
    """
    ops = _FOURIER_CACHE.get(n)
    if ops is not None:
        return ops
    k = np.fft.rfftfreq(n, d=1.0 / n)  # 0, 1, ..., n//2
    shift = np.exp(1j * k * math.pi / n)
    eye = np.eye(n)
    modes = np.fft.rfft(eye, axis=0)

    def synth(mult):
        return np.fft.irfft(mult[:, None] * modes, n=n, axis=0).T.copy()

    ik = 1j * k
    if n % 2 == 0:
        ik_plain = ik.copy()
        ik_plain[-1] = 0.0  # odd derivative of the Nyquist mode vanishes at nodes
    else:
        ik_plain = ik
    ops = {
        "d1": synth(ik_plain),
        "d2": synth(-(k**2).astype(complex)),
        "d1_stag": synth(ik * shift),
        "interp_stag": synth(shift),
    }
    _FOURIER_CACHE[n] = ops
    return ops


def lowpass(values: np.ndarray, max_mode: int) -> np.ndarray:
    """Zero every Fourier mode above ``max_mode`` of a 1-d sample vector."""
    coef = np.fft.rfft(values)
    coef[max_mode + 1 :] = 0.0
    return np.fft.irfft(coef, n=values.size)


def mode_amplitudes(values: np.ndarray) -> np.ndarray:
    """Normalized magnitudes |c_k| of the trigonometric interpolant."""
    return np.abs(np.fft.rfft(values)) / values.size


class CircleAxis:
    """One periodic factor, sampled at ``n`` uniform nodes.

    Parameters
    ----------
    a : array or float
        Metric coefficient samples (length squared), strictly positive.
    f : array or float
        Weight samples on this factor.
    n : int, optional
        Node count when ``a`` and ``f`` are scalars.
    """

    kind = "circle"

    def __init__(self, a, f, n=None):
        if np.isscalar(a) and np.isscalar(f):
            if n is None:
                raise ConfigurationError("scalar circle data requires an explicit node count")
            a = np.full(n, float(a))
            f = np.full(n, float(f))
        a = np.asarray(a, dtype=float)
        f = np.asarray(f, dtype=float)
        if a.ndim != 1 or a.shape != f.shape:
            raise ConfigurationError("circle metric and weight samples must be 1-d and congruent")
        if a.size < 8:
            raise ConfigurationError(f"circle resolution {a.size} below the minimum of 8")
        if np.min(a) <= 0.0:
            raise AssemblyError(
                f"circle metric coefficient non-positive at node {int(np.argmin(a))}"
            )
        self.size = a.size
        self.nodes = 2.0 * math.pi * np.arange(self.size) / self.size
        self.a = a
        self.f = f
        self.weights = np.full(self.size, 2.0 * math.pi / self.size)
        self.density = np.exp(-f) * np.sqrt(a)
        self.wdens = self.weights * self.density
        ops = _fourier_ops(self.size)
        self._d1 = ops["d1"]
        self._d2 = ops["d2"]
        self._d1_stag = ops["d1_stag"]
        self._interp_stag = ops["interp_stag"]
        self.fprime = self.d1_vec(f)
        self.christoffel = self.d1_vec(a) / (2.0 * a)

    def d1(self, field: np.ndarray, axis: int) -> np.ndarray:
        return apply_deriv(self._d1, field, axis)

    def d2(self, field: np.ndarray, axis: int) -> np.ndarray:
        return apply_deriv(self._d2, field, axis)

    def d1_vec(self, values: np.ndarray) -> np.ndarray:
        return self._d1 @ (values - values[0])

    def d2_vec(self, values: np.ndarray) -> np.ndarray:
        return self._d2 @ (values - values[0])

    def mass_diag(self) -> np.ndarray:
        return self.wdens

    def stiffness_matrix(self) -> np.ndarray:
        # Weak form of the drift Laplacian in theta coordinates: the gradient
        # weight is a^{-1} e^{-f} sqrt(a) = a^{-1/2} e^{-f}, sampled on the
        # half-shifted grid where the staggered derivative lives.
        s = np.exp(-(self._interp_stag @ self.f))
        a_stag = self._interp_stag @ self.a
        if np.min(a_stag) <= 0.0:
            raise AssemblyError("circle metric coefficient non-positive between nodes")
        w = self.weights * s / np.sqrt(a_stag)
        return self._d1_stag.T @ (w[:, None] * self._d1_stag)

    def eigens(self):
        """Generalized eigenpairs of this axis block, mass-orthonormal."""
        from scipy.linalg import eigh

        vals, vecs = eigh(self.stiffness_matrix(), np.diag(self.mass_diag()))
        vals = np.maximum(vals, 0.0) if vals[0] > -1e-12 else vals
        return vals, vecs


# --------------------------------------------------------------------------
# Hermite machinery (cached per basis order)
# --------------------------------------------------------------------------

_HERMITE_CACHE: dict[int, dict[str, np.ndarray]] = {}


def _hermite_ops(order: int) -> dict[str, np.ndarray]:
    """Nodes, weights and basis operators for ``order`` Hermite modes.

    The basis is p_k(x) = He_k(x / sqrt(2)), the eigenfunctions of
    u'' - (x/2) u' with eigenvalue -k/2; quadrature is Gauss-Hermite for the
    weight e^{-x^2/4}, exact through polynomial degree 2*order - 1.
    """
    ops = _HERMITE_CACHE.get(order)
    if ops is not None:
        return ops
    y, wy = hermite_e.hermegauss(order)
    nodes = math.sqrt(2.0) * y
    wdens = math.sqrt(2.0) * wy  # integrates q(x) e^{-x^2/4} dx exactly
    vand = hermite_e.hermevander(y, order - 1)  # vand[i,k] = p_k(nodes[i])
    vinv = np.linalg.inv(vand)
    # d/dx p_k = (k / sqrt(2)) p_{k-1}
    shift = np.zeros((order, order))
    for k in range(1, order):
        shift[k - 1, k] = k / math.sqrt(2.0)
    d1 = vand @ shift @ vinv
    norms_sq = np.array([TWO_SQRT_PI * math.factorial(k) for k in range(order)])
    ops = {
        "nodes": nodes,
        "wdens": wdens,
        "vand": vand,
        "vinv": vinv,
        "d1": d1,
        "norms_sq": norms_sq,
    }
    _HERMITE_CACHE[order] = ops
    return ops


class HermiteLineAxis:
    """One Gaussian line factor with constant metric multiplier ``scale``.

    The factor weight is x^2/4 + (1/2) log(scale); with that split the
    combined quadrature density e^{-f} sqrt(a) equals e^{-x^2/4} regardless of
    the scale, which makes weighted volume manifestly constant along the flow.
    """

    kind = "hermite"

    def __init__(self, order: int, scale: float):
        if order < 3:
            raise ConfigurationError(f"hermite basis order {order} below the minimum of 3")
        scale = float(scale)
        if scale <= 0.0:
            raise AssemblyError("gaussian metric multiplier must be positive")
        ops = _hermite_ops(order)
        self.size = order
        self.scale = scale
        self.nodes = ops["nodes"]
        self.wdens = ops["wdens"]
        self.density = np.exp(-(self.nodes**2) / 4.0)  # e^{-f} sqrt(a), scale-free
        self.weights = self.wdens / self.density
        self.a = scale
        self.f = self.nodes**2 / 4.0 + 0.5 * math.log(scale)
        self.fprime = self.nodes / 2.0
        self.christoffel = 0.0
        self._d1 = ops["d1"]
        self._vand = ops["vand"]
        self._norms_sq = ops["norms_sq"]

    def d1(self, field: np.ndarray, axis: int) -> np.ndarray:
        return apply_deriv(self._d1, field, axis)

    def d2(self, field: np.ndarray, axis: int) -> np.ndarray:
        return apply_deriv(self._d1 @ self._d1, field, axis)

    def d1_vec(self, values: np.ndarray) -> np.ndarray:
        return self._d1 @ (values - values[0])

    def d2_vec(self, values: np.ndarray) -> np.ndarray:
        return self._d1 @ (self._d1 @ (values - values[0]))

    def mass_diag(self) -> np.ndarray:
        return self.wdens

    def stiffness_matrix(self) -> np.ndarray:
        w = self.wdens / self.scale
        return self._d1.T @ (w[:, None] * self._d1)

    def analytic_eigenvalues(self) -> np.ndarray:
        return np.arange(self.size) / (2.0 * self.scale)

    def eigens(self):
        """Exact eigenpairs: Hermite basis vectors, quadrature-normalized."""
        vecs = self._vand.copy()
        norms = np.sqrt(np.sum(vecs * vecs * self.wdens[:, None], axis=0))
        vecs /= norms
        return self.analytic_eigenvalues(), vecs
