"""Green's functions, bulk-to-boundary and boundary kernels, and pairings.

Conventions (fixed once, asserted by the multiplier-identity tests):

* Fourier transform  fhat(k) = (2 pi)^{-d/2} int f(x) e^{-i k x} dx.
* Under this convention a convolution picks up a factor (2 pi)^{d/2}, so an
  operator whose kernel has Fourier transform Ahat acts on L^2 with spectral
  multiplier (2 pi)^{d/2} Ahat, and the composition of two such kernels has
  multiplier (2 pi)^d Ahat Bhat.
* ``boundary_pairing`` is the k-space pairing  int conj(fhat) Ahat ghat dk
  WITHOUT the convolution factor; it equals (2 pi)^{-d/2} times the
  position-space double integral.  The splitting check, which compares
  against honest position-space Green's functions, therefore carries an
  explicit (2 pi)^{d/2}.

The two-sign family: delta_pm = d/2 +- nu, gamma_pm the kernel constants,
G_pm the two invariant fundamental solutions of (-Laplace + m^2), H_pm their
scaled boundary limits, alpha_pm the boundary kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ParameterError
from .geometry import BulkPoint, ModelParams, chordal_u
from .specfun import bessel_k, bessel_k_grid, gamma_fn, hyp2f1

PLUS = +1
MINUS = -1

_TWO_PI = 2.0 * math.pi


def _check_sign(sign: int) -> int:
    if sign not in (PLUS, MINUS):
        raise ParameterError("kernel sign must be +1 (plus) or -1 (minus)")
    return sign


# ---------------------------------------------------------------------------
# boundary test functions: Gaussian bump mixtures with closed-form transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """f(x) = sum_i w_i exp(-|x - c_i|^2 / (2 s_i^2)) on R^d.

    The family is closed under reflections, shifts, scaling and addition,
    and has the closed-form transform
    fhat(k) = sum_i w_i s_i^d exp(-s_i^2 |k|^2 / 2) exp(-i k . c_i).
    """

    centers: np.ndarray   # (n, d)
    widths: np.ndarray    # (n,)
    weights: np.ndarray   # (n,)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        w = np.atleast_1d(np.asarray(self.widths, dtype=float))
        a = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if len(w) != c.shape[0] or len(a) != c.shape[0] or c.shape[0] < 1:
            raise ParameterError("centers/widths/weights must align, >= 1 term")
        if np.any(w <= 0):
            raise ParameterError("widths must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "weights", a)

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def _as_points(self, x) -> tuple[np.ndarray, bool]:
        """Normalize input to shape (m, d); report whether it was one point."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return x, False
        if self.d == 1:
            return np.atleast_1d(x).reshape(-1, 1), x.ndim == 0
        return x[None, :], True

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at points; accepts (m, d), a single d-vector, or, for
        d = 1, a flat array of abscissas."""
        pts, single = self._as_points(x)
        d2 = ((pts[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        vals = (self.weights[None, :]
                * np.exp(-0.5 * d2 / self.widths[None, :] ** 2)).sum(axis=1)
        return float(vals[0]) if single else vals

    def fhat(self, k) -> np.ndarray | complex:
        """Fourier transform at wave vectors; same input conventions."""
        kk, single = self._as_points(k)
        k2 = (kk ** 2).sum(axis=1)
        phase = kk @ self.centers.T                     # (m, n)
        amp = self.weights * self.widths ** self.d
        vals = (amp[None, :] * np.exp(-0.5 * self.widths[None, :] ** 2 * k2[:, None])
                * np.exp(-1j * phase)).sum(axis=1)
        return complex(vals[0]) if single else vals

    def cross_spectrum_radial(self, other: "BoundaryFunction", rho: np.ndarray) -> np.ndarray:
        """Angular integral of conj(fhat) ghat over the sphere of radius rho.

        Closed form for bump mixtures: the angular average of
        exp(-i rho theta . (c_i - c_j)) is 2 cos(rho D) for d = 1 and
        2 pi J_0(rho D) for d = 2 with D = |c_i - c_j|.
        """
        if other.d != self.d:
            raise ParameterError("dimension mismatch")
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.zeros_like(rho)
        for wi, si, ci in zip(self.weights, self.widths, self.centers):
            for wj, sj, cj in zip(other.weights, other.widths, other.centers):
                amp = wi * wj * si ** self.d * sj ** self.d
                gauss = np.exp(-0.5 * (si ** 2 + sj ** 2) * rho ** 2)
                dist = float(np.linalg.norm(ci - cj))
                if self.d == 1:
                    ang = 2.0 * np.cos(rho * dist)
                elif self.d == 2:
                    ang = _TWO_PI * special.j0(rho * dist)
                else:
                    raise ParameterError("radial reduction implemented for d <= 2")
                out += amp * gauss * ang
        return out

    def decay_scale(self, other: "BoundaryFunction | None" = None) -> float:
        """Radial cutoff K with exp(-s_min K^2) < 1e-19 for all spectrum terms."""
        s2 = np.min(self.widths) ** 2
        if other is not None:
            s2 = 0.5 * (s2 + np.min(other.widths) ** 2)
        return math.sqrt(88.0 / s2)

    def reflect(self, axis: int) -> "BoundaryFunction":
        """Image under x_axis -> -x_axis (axis is 1-based)."""
        c = self.centers.copy()
        c[:, axis - 1] *= -1.0
        return BoundaryFunction(c, self.widths, self.weights)

    def shift(self, a: np.ndarray) -> "BoundaryFunction":
        return BoundaryFunction(self.centers + np.asarray(a, dtype=float),
                                self.widths, self.weights)

    def __add__(self, other: "BoundaryFunction") -> "BoundaryFunction":
        if other.d != self.d:
            raise ParameterError("dimension mismatch")
        return BoundaryFunction(np.vstack([self.centers, other.centers]),
                                np.concatenate([self.widths, other.widths]),
                                np.concatenate([self.weights, other.weights]))

    def __mul__(self, scalar: float) -> "BoundaryFunction":
        return BoundaryFunction(self.centers, self.widths, self.weights * float(scalar))

    __rmul__ = __mul__


def unit_bump(d: int, center=0.0, width: float = 1.0, weight: float = 1.0) -> BoundaryFunction:
    c = np.full((1, d), 0.0)
    c[0, :] = center
    return BoundaryFunction(c, np.array([width]), np.array([weight]))


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def green(params: ModelParams, sign: int, p: BulkPoint, q: BulkPoint) -> float:
    """Invariant Green's function G_s(p, q) of (-Laplace + m^2).

    gamma_s (2u)^{-Delta_s} F(Delta_s, Delta_s + (1-d)/2; 2 Delta_s + 1 - d;
    -2/u) in the chordal coordinate u; symmetric in (p, q), singular at
    coincident points.
    """
    _check_sign(sign)
    u = chordal_u(p, q)
    if u == 0.0:
        raise DomainError("Green's function is singular at coincident points")
    d = params.d
    delta = params.delta_sign(sign)
    F = hyp2f1(delta, delta + (1.0 - d) / 2.0, 2.0 * delta + 1.0 - d, -2.0 / u)
    return params.gamma_sign(sign) * (2.0 * u) ** (-delta) * F.value


def bulk_to_boundary(params: ModelParams, sign: int, p: BulkPoint,
                     x_boundary: np.ndarray) -> float:
    """H_s(z, x; x') = gamma_s (z / (z^2 + |x - x'|^2))^{Delta_s}."""
    _check_sign(sign)
    dx = p.x - np.atleast_1d(np.asarray(x_boundary, dtype=float))
    r2 = p.z * p.z + float(dx @ dx)
    return params.gamma_sign(sign) * (p.z / r2) ** params.delta_sign(sign)


def bulk_to_boundary_fourier(params: ModelParams, sign: int, z: float,
                             k: np.ndarray, x: np.ndarray | None = None) -> complex:
    """Fourier transform of H_s(z, x; .) at wave vector k (phase at x = 0).

    (2 pi)^{-d/2} Gamma(1 + s nu)^{-1} (|k|/2)^{s nu} z^{d/2} K_nu(|k| z),
    carrying the e^{i k x} phase when the bulk x is supplied.
    """
    _check_sign(sign)
    if z <= 0:
        raise DomainError("requires z > 0")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    rho = float(np.linalg.norm(k))
    if rho == 0.0:
        raise DomainError("requires |k| > 0")
    nu = params.nu
    val = ((_TWO_PI) ** (-params.d / 2.0) / gamma_fn(1.0 + sign * nu)
           * (rho / 2.0) ** (sign * nu) * z ** (params.d / 2.0)
           * bessel_k(nu, rho * z).value)
    if x is None:
        return complex(val)
    return val * np.exp(1j * float(k @ np.atleast_1d(x)))


def _h_fourier_radial(params: ModelParams, sign: int, z: float,
                      rho: np.ndarray) -> np.ndarray:
    """Radial profile of the H_s transform on a grid of |k| (vectorized)."""
    nu = params.nu
    return ((_TWO_PI) ** (-params.d / 2.0) / gamma_fn(1.0 + sign * nu)
            * (rho / 2.0) ** (sign * nu) * z ** (params.d / 2.0)
            * bessel_k_grid(nu, z * rho))


def boundary_kernel_fourier(params: ModelParams, sign: int, k) -> float:
    """alpha_s multiplier Gamma(-s nu)/(2 (2 pi)^{d/2} Gamma(1 + s nu)) (|k|/2)^{2 s nu}."""
    _check_sign(sign)
    rho = float(np.linalg.norm(np.atleast_1d(k)))
    if rho == 0.0:
        raise DomainError("requires |k| > 0")
    return alpha_constant(params, sign) * (rho / 2.0) ** (2.0 * sign * params.nu)


def alpha_constant(params: ModelParams, sign: int) -> float:
    """The constant in front of (|k|/2)^{+-2 nu}; negative for the plus sign."""
    _check_sign(sign)
    nu = params.nu
    return gamma_fn(-sign * nu) / (2.0 * _TWO_PI ** (params.d / 2.0)
                                   * gamma_fn(1.0 + sign * nu))


def boundary_kernel_position(params: ModelParams, sign: int, x, y) -> float:
    """alpha_s(x, y) = gamma_s |x - y|^{-2 Delta_s} away from coincidence."""
    _check_sign(sign)
    r = float(np.linalg.norm(np.atleast_1d(x) - np.atleast_1d(y)))
    if r == 0.0:
        raise DomainError("boundary kernel singular at coincident points")
    return params.gamma_sign(sign) * r ** (-2.0 * params.delta_sign(sign))


# ---------------------------------------------------------------------------
# pairings
# ---------------------------------------------------------------------------

def boundary_pairing(params: ModelParams, sign: int, f: BoundaryFunction,
                     g: BoundaryFunction | None = None) -> float:
    """k-space pairing  int conj(fhat)(k) alphahat_s(k) ghat(k) dk.

    For the minus sign the |k|^{-2 nu} singularity at the origin requires
    nu < d/2; the result is then positive for f = g.  For the plus sign the
    pairing is the analytically continued one (negative for f = g when
    nu in (0,1)).  Equals (2 pi)^{-d/2} times the position-space double
    integral where the latter exists.
    """
    _check_sign(sign)
    if g is None:
        g = f
    if f.d != params.d or g.d != params.d:
        raise ParameterError("test function dimension mismatch")
    if sign == MINUS:
        params.require_boundary_measure()
    const = alpha_constant(params, sign)
    expo = 2.0 * sign * params.nu
    dm1 = params.d - 1

    def integrand(rho):
        return (f.cross_spectrum_radial(g, np.array([rho]))[0]
                * (rho / 2.0) ** expo * rho ** dm1)

    cut = f.decay_scale(g)
    val, err = integrate.quad(integrand, 0.0, cut, limit=300)
    return const * val


def splitting_boundary_term(params: ModelParams, p: BulkPoint, q: BulkPoint) -> float:
    """c^2 * double integral of H_+(p, .) alpha_-(., ..) H_+(q, ..).

    Evaluated in Fourier space with the convolution-consistent factor:
    c^2 (2 pi)^{d/2} int conj(Hhat_+(p, k)) alphahat_-(k) Hhat_+(q, k) dk,
    reduced to a radial integral against cos / J_0.
    """
    params.require_boundary_measure()
    d = params.d
    dist = float(np.linalg.norm(p.x - q.x))
    const = alpha_constant(params, MINUS)
    cut = 50.0 / (p.z + q.z) + 10.0 / max(p.z, q.z)

    def radial(rho):
        return (_h_fourier_radial(params, PLUS, p.z, np.array([rho]))[0]
                * _h_fourier_radial(params, PLUS, q.z, np.array([rho]))[0]
                * const * (rho / 2.0) ** (-2.0 * params.nu))

    if d == 1:
        integrand = lambda rho: 2.0 * math.cos(rho * dist) * radial(rho)
    elif d == 2:
        integrand = lambda rho: _TWO_PI * rho * special.j0(rho * dist) * radial(rho)
    else:
        raise ParameterError("splitting check implemented for d <= 2")
    val, err = integrate.quad(integrand, 0.0, cut, limit=400)
    return params.c ** 2 * _TWO_PI ** (d / 2.0) * val


def mixed_h_cross_term(params: ModelParams, p: BulkPoint, q: BulkPoint) -> float:
    """c * int H_+(p, y) H_-(q, y) dy via Parseval (plain L^2 inner product)."""
    d = params.d
    dist = float(np.linalg.norm(p.x - q.x))
    cut = 50.0 / (p.z + q.z) + 10.0 / max(p.z, q.z)

    def radial(rho):
        return (_h_fourier_radial(params, PLUS, p.z, np.array([rho]))[0]
                * _h_fourier_radial(params, MINUS, q.z, np.array([rho]))[0])

    if d == 1:
        integrand = lambda rho: 2.0 * math.cos(rho * dist) * radial(rho)
    elif d == 2:
        integrand = lambda rho: _TWO_PI * rho * special.j0(rho * dist) * radial(rho)
    else:
        raise ParameterError("implemented for d <= 2")
    val, err = integrate.quad(integrand, 0.0, cut, limit=400)
    return params.c * val


def splitting_residual(params: ModelParams, p: BulkPoint, q: BulkPoint) -> float:
    """G_-(p,q) - G_+(p,q) - c^2 (H_+ alpha_- H_+)(p,q); ~ 0 when the
    splitting identity holds (requires nu < d/2)."""
    if p is q or (p.z == q.z and np.array_equal(p.x, q.x)):
        raise DomainError("splitting residual undefined at coincident points")
    gm = green(params, MINUS, p, q)
    gp = green(params, PLUS, p, q)
    return gm - gp - splitting_boundary_term(params, p, q)


def h_smeared(params: ModelParams, sign: int, p: BulkPoint,
              f: BoundaryFunction, tol: float = 1e-10) -> float:
    """(H_s f)(p) = int H_s(p, y) f(y) dy by adaptive quadrature."""
    _check_sign(sign)
    d = params.d
    if d == 1:
        lo = float(np.min(f.centers)) - 9.0 * float(np.max(f.widths))
        hi = float(np.max(f.centers)) + 9.0 * float(np.max(f.widths))
        val, _ = integrate.quad(
            lambda y: bulk_to_boundary(params, sign, p, np.array([y]))
            * f(np.array([[y]]))[0], lo, hi, limit=200, epsabs=tol, epsrel=tol)
        return val
    if d == 2:
        los = f.centers.min(axis=0) - 9.0 * float(np.max(f.widths))
        his = f.centers.max(axis=0) + 9.0 * float(np.max(f.widths))
        val, _ = integrate.dblquad(
            lambda y2, y1: bulk_to_boundary(params, sign, p, np.array([y1, y2]))
            * f(np.array([[y1, y2]]))[0],
            los[0], his[0], los[1], his[1], epsabs=max(tol, 1e-9), epsrel=1e-9)
        return val
    raise ParameterError("smeared propagator implemented for d <= 2")
