"""Half-space model of hyperbolic space and its isometries.

Bulk points live in the upper half-space {(z, x): z > 0} with metric
z^-2 (dz^2 + dx^2).  Isometries are represented once and for all as
orthochronous Lorentz matrices acting on the hyperboloid model; half-space
actions always go through the embedding, so a single code path covers
rotations, boosts/dilations, translations and reflections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfinityError, ParameterError
from .specfun import gamma_fn

_NU_INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Mass/dimension parameters and the derived conformal weights.

    d is the boundary dimension, m2 the mass squared.  The derived data are
    nu = sqrt(d^2 + 4 m2)/2 > 0, the weights delta_plus/minus = d/2 +- nu,
    the kernel normalizations gamma_plus/minus and c = 2 nu.
    Integer nu is excluded throughout (kernel normalizations degenerate
    there); constructions that need a positive boundary covariance
    additionally require nu < d/2, which is checked at their call sites.
    """

    d: int
    m2: float
    nu: float = field(init=False)
    delta_plus: float = field(init=False)
    delta_minus: float = field(init=False)
    gamma_plus: float = field(init=False)
    gamma_minus: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError("boundary dimension d must be >= 1")
        disc = self.d * self.d + 4.0 * self.m2
        if disc <= 0.0:
            raise ParameterError(
                f"d^2 + 4 m^2 = {disc} must be positive (real nu required)")
        nu = 0.5 * math.sqrt(disc)
        if abs(nu - round(nu)) < _NU_INTEGER_TOL:
            raise ParameterError(f"integer nu excluded (nu = {nu})")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "delta_plus", self.d / 2.0 + nu)
        object.__setattr__(self, "delta_minus", self.d / 2.0 - nu)
        object.__setattr__(self, "c", 2.0 * nu)
        half_d = self.d / 2.0
        object.__setattr__(
            self, "gamma_plus",
            gamma_fn(half_d + nu) / (2.0 * math.pi ** half_d * gamma_fn(1.0 + nu)))
        object.__setattr__(
            self, "gamma_minus",
            gamma_fn(half_d - nu) / (2.0 * math.pi ** half_d * gamma_fn(1.0 - nu)))

    @classmethod
    def from_nu(cls, d: int, nu: float) -> "ModelParams":
        """Construct from (d, nu); m2 = nu^2 - d^2/4."""
        return cls(d=d, m2=nu * nu - d * d / 4.0)

    def require_boundary_measure(self):
        """Constructions pairing against the minus kernel need nu < d/2."""
        if not self.nu < self.d / 2.0:
            raise ParameterError(
                f"nu = {self.nu} must be < d/2 = {self.d / 2} for a positive "
                "boundary covariance")

    def gamma_sign(self, sign: int) -> float:
        return self.gamma_plus if sign > 0 else self.gamma_minus

    def delta_sign(self, sign: int) -> float:
        return self.delta_plus if sign > 0 else self.delta_minus


@dataclass(frozen=True, eq=False)
class BulkPoint:
    """A point (z, x) of the half-space, z > 0."""

    z: float
    x: np.ndarray

    def __post_init__(self):
        if self.z <= 0.0:
            raise DomainError(f"bulk point requires z > 0, got z = {self.z}")
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))

    @property
    def d(self) -> int:
        return self.x.shape[0]


def minkowski_form(n_spatial: int) -> np.ndarray:
    """diag(1, ..., 1, -1) with n_spatial plus signs."""
    eta = np.eye(n_spatial + 1)
    eta[-1, -1] = -1.0
    return eta


@dataclass(frozen=True, eq=False)
class Isometry:
    """An element of O+(d+1, 1) acting on the hyperboloid model."""

    L: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        object.__setattr__(self, "L", L)
        n = L.shape[0]
        if L.shape != (n, n) or n < 3:
            raise ParameterError("isometry matrix must be square, size >= 3")
        eta = minkowski_form(n - 1)
        if not np.allclose(L.T @ eta @ L, eta, atol=1e-10):
            raise ParameterError("matrix does not preserve the Minkowski form")
        if L[-1, -1] <= 0.0:
            raise ParameterError("only orthochronous isometries are supported")

    @property
    def d(self) -> int:
        return self.L.shape[0] - 2

    def inverse(self) -> "Isometry":
        eta = minkowski_form(self.L.shape[0] - 1)
        return Isometry(eta @ self.L.T @ eta)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.L @ other.L)


# ---------------------------------------------------------------------------
# chordal coordinate and the embedding
# ---------------------------------------------------------------------------

def chordal_u(p: BulkPoint, q: BulkPoint) -> float:
    """Isometry-invariant chordal coordinate ((z-z')^2 + |x-x'|^2)/(2 z z')."""
    dx = p.x - q.x
    return ((p.z - q.z) ** 2 + float(dx @ dx)) / (2.0 * p.z * q.z)


def embed_lorentz(p: BulkPoint) -> np.ndarray:
    """Map a half-space point onto the hyperboloid sheet in Minkowski space."""
    x2 = float(p.x @ p.x)
    zeta = np.empty(p.d + 2)
    zeta[: p.d] = p.x / p.z
    zeta[p.d] = -(p.z * p.z + x2 - 1.0) / (2.0 * p.z)
    zeta[p.d + 1] = (p.z * p.z + x2 + 1.0) / (2.0 * p.z)
    return zeta


def unembed_lorentz(zeta: np.ndarray) -> BulkPoint:
    """Inverse of :func:`embed_lorentz`."""
    zeta = np.asarray(zeta, dtype=float)
    denom = zeta[-2] + zeta[-1]
    if denom <= 0.0:
        raise InfinityError("hyperboloid point maps to the boundary at infinity")
    return BulkPoint(z=1.0 / denom, x=zeta[:-2] / denom)


def apply_isometry(g: Isometry, p: BulkPoint) -> BulkPoint:
    return unembed_lorentz(g.L @ embed_lorentz(p))


# ---------------------------------------------------------------------------
# boundary action
# ---------------------------------------------------------------------------

def _boundary_map_at(g: Isometry, x: np.ndarray, z: float) -> np.ndarray:
    q = apply_isometry(g, BulkPoint(z=z, x=x))
    return q.x


def boundary_map(g: Isometry, x: np.ndarray, z_base: float = 1e-3) -> np.ndarray:
    """g(x) = lim_{z->0} of the bulk action, by two-level extrapolation.

    The half-space action is even in z around the boundary, so the limit is
    approached at O(z^2); one Richardson step on the pair (z, z/2) removes
    that term.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.concatenate([x, [(1.0 - x @ x) / 2.0, (1.0 + x @ x) / 2.0]])
    lxi = g.L @ xi
    if lxi[-2] + lxi[-1] < 1e-8 * np.linalg.norm(lxi):
        raise InfinityError("boundary point maps to infinity under g")
    f1 = _boundary_map_at(g, x, z_base)
    f2 = _boundary_map_at(g, x, z_base / 2.0)
    return (4.0 * f2 - f1) / 3.0


def boundary_action(g: Isometry, x: np.ndarray, z_base: float = 1e-3,
                    fd_step: float = 1e-5) -> tuple[np.ndarray, float]:
    """Boundary conformal action of g: (g(x), |det dg(x)/dx|).

    The Jacobian is computed by central finite differences of the
    z-extrapolated boundary map, with one step-halving Richardson pass;
    it is positive whenever x is not sent to infinity.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[0]
    gx = boundary_map(g, x, z_base)

    def jacobian(step):
        J = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            J[:, j] = (boundary_map(g, x + e, z_base)
                       - boundary_map(g, x - e, z_base)) / (2.0 * step)
        return J

    scale = max(1.0, float(np.max(np.abs(x))))
    j1 = jacobian(fd_step * scale)
    j2 = jacobian(fd_step * scale / 2.0)
    jac = abs(np.linalg.det((4.0 * j2 - j1) / 3.0))
    if not jac > 0.0:
        raise InfinityError("degenerate boundary Jacobian (point near infinity)")
    return gx, float(jac)


# ---------------------------------------------------------------------------
# isometry constructors
# ---------------------------------------------------------------------------

def identity_isometry(d: int) -> Isometry:
    return Isometry(np.eye(d + 2))


def rotation_isometry(d: int, axis1: int, axis2: int, angle: float) -> Isometry:
    """Rotation in the (x_axis1, x_axis2) plane; axes are 1-based, <= d."""
    if not (1 <= axis1 <= d and 1 <= axis2 <= d and axis1 != axis2):
        raise ParameterError("rotation axes must be distinct and in 1..d")
    L = np.eye(d + 2)
    i, j = axis1 - 1, axis2 - 1
    ca, sa = math.cos(angle), math.sin(angle)
    L[i, i] = ca
    L[j, j] = ca
    L[i, j] = -sa
    L[j, i] = sa
    return Isometry(L)


def boost_isometry(d: int, axis: int, rapidity: float) -> Isometry:
    """Boost mixing spatial axis (1..d+1) with the timelike direction.

    axis = d+1 mixes zeta_{d+1} and zeta_{d+2}; on the half space this is
    the dilation (z, x) -> e^{-t} (z, x).
    """
    if not 1 <= axis <= d + 1:
        raise ParameterError("boost axis must be in 1..d+1")
    L = np.eye(d + 2)
    i = axis - 1
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    L[i, i] = ch
    L[-1, -1] = ch
    L[i, -1] = sh
    L[-1, i] = sh
    return Isometry(L)


def dilation_isometry(d: int, rapidity: float) -> Isometry:
    """(z, x) -> e^{-rapidity} (z, x); boundary map x -> e^{-rapidity} x."""
    return boost_isometry(d, d + 1, rapidity)


def translation_isometry(a: np.ndarray) -> Isometry:
    """(z, x) -> (z, x + a)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    d = a.shape[0]
    a2 = float(a @ a)
    L = np.eye(d + 2)
    L[:d, d] = a
    L[:d, d + 1] = a
    L[d, :d] = -a
    L[d + 1, :d] = a
    L[d, d] = 1.0 - a2 / 2.0
    L[d, d + 1] = -a2 / 2.0
    L[d + 1, d] = a2 / 2.0
    L[d + 1, d + 1] = 1.0 + a2 / 2.0
    return Isometry(L)


def reflection_isometry(d: int, axis: int) -> Isometry:
    """x_axis -> -x_axis (extended to the bulk with z unchanged)."""
    if not 1 <= axis <= d:
        raise ParameterError("reflection axis must be in 1..d")
    L = np.eye(d + 2)
    L[axis - 1, axis - 1] = -1.0
    return Isometry(L)


def random_isometry(rng: np.random.Generator, d: int,
                    max_rapidity: float = 2.0, n_factors: int = 3) -> Isometry:
    """Well-conditioned random element: products of boosts and x-rotations."""
    g = identity_isometry(d)
    for _ in range(n_factors):
        axis = int(rng.integers(1, d + 2))
        t = float(rng.uniform(-max_rapidity, max_rapidity))
        g = g @ boost_isometry(d, axis, t)
        if d >= 2:
            a1, a2 = rng.choice(np.arange(1, d + 1), size=2, replace=False)
            g = g @ rotation_isometry(d, int(a1), int(a2), float(rng.uniform(0, 2 * math.pi)))
    return g
