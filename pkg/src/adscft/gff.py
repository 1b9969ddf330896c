"""Lattice-regularized Gaussian free field on a bounded half-space region.

The covariance is the inverse of an energy-form discretization of
(-Laplace_g + m^2): graph-Laplacian edge terms with metric weights
z^{1-d} plus the mass term against the metric volume z^{-d-1}.  This
guarantees an SPD covariance (checked) and makes the Cameron-Martin and
Wick identities exact finite-dimensional statements, independent of the
mesh.  A Dirichlet collar of a few cells is kept between the declared
region and the zero boundary data; the covariance returned is the
restriction to the declared region.

Sampling uses the counter-based Philox generator keyed by (seed, stream),
so parallel streams are reproducible by construction.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import IndefiniteCovarianceError, ParameterError
from .geometry import BulkPoint, ModelParams

WICK_JMAX = 8

_MAGIC = b"GFFC"
_VERSION = 1


@dataclass(frozen=True, eq=False)
class LatticeRegion:
    """Tensor grid over [z_min, z_max] x prod_a [lo_a, hi_a].

    Axis 0 is the z direction; `shape` counts grid nodes per axis, `h`
    stores the spacings.  Site arrays are flattened in C order.
    """

    d: int
    z_range: tuple
    x_box: tuple        # ((lo, hi), ...) of length d
    shape: tuple        # nodes per axis, length d+1
    h: np.ndarray = field(init=False)
    zs: np.ndarray = field(init=False)
    xs: np.ndarray = field(init=False)
    vol_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.d != len(self.x_box):
            raise ParameterError("x_box must have one range per boundary axis")
        if len(self.shape) != self.d + 1:
            raise ParameterError("shape must cover z axis plus d x-axes")
        if any(n < 1 for n in self.shape):
            raise ParameterError("each axis needs at least one node")
        z_min, z_max = self.z_range
        if z_min <= 0 or z_max < z_min:
            raise ParameterError("need 0 < z_min <= z_max")
        axes = [np.linspace(z_min, z_max, self.shape[0])]
        hs = [(z_max - z_min) / (self.shape[0] - 1) if self.shape[0] > 1
              else z_min / 8.0]
        for (lo, hi), n in zip(self.x_box, self.shape[1:]):
            if hi < lo:
                raise ParameterError("x ranges must be ordered")
            axes.append(np.linspace(lo, hi, n))
            hs.append((hi - lo) / max(n - 1, 1) if n > 1 else max(hi - lo, 1.0))
        mesh = np.meshgrid(*axes, indexing="ij")
        object.__setattr__(self, "h", np.asarray(hs, dtype=float))
        object.__setattr__(self, "zs", mesh[0].ravel())
        xs = (np.stack([m.ravel() for m in mesh[1:]], axis=1) if self.d
              else np.zeros((self.zs.size, 0)))
        object.__setattr__(self, "xs", xs)
        cell = float(np.prod(self.h))
        object.__setattr__(self, "vol_weights",
                           cell * self.zs ** (-(self.d + 1)))

    @property
    def n_sites(self) -> int:
        return int(self.zs.size)

    def site(self, i: int) -> BulkPoint:
        return BulkPoint(z=float(self.zs[i]), x=self.xs[i].copy())

    def reflection_permutation(self, axis: int = 1) -> np.ndarray:
        """Site permutation of x_axis -> -x_axis; requires a symmetric grid."""
        lo, hi = self.x_box[axis - 1]
        if abs(lo + hi) > 1e-12 * max(1.0, abs(hi)):
            raise ParameterError("grid is not symmetric about x_axis = 0")
        idx = np.arange(self.n_sites).reshape(self.shape)
        perm = np.flip(idx, axis=axis).ravel()
        return perm


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """SPD covariance of the regularized field with its Cholesky factor."""

    region: LatticeRegion
    params: ModelParams
    C: np.ndarray
    factor: np.ndarray      # lower triangular, factor @ factor.T = C
    min_eigenvalue: float

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.diag(self.C)


@dataclass(frozen=True, eq=False)
class FieldSample:
    """A single field configuration, reproducible from (seed, stream)."""

    values: np.ndarray
    seed: int
    stream: int = 0


def _operator_matrix(params: ModelParams, axes: list) -> np.ndarray:
    """Energy-form discretization of (-Laplace_g + m^2) on a node grid.

    Dirichlet data outside the grid: edges leaving the grid contribute only
    to the diagonal.
    """
    d = params.d
    shape = tuple(len(a) for a in axes)
    n = int(np.prod(shape))
    hs = np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in axes])
    cell = float(np.prod(hs))
    mesh = np.meshgrid(*axes, indexing="ij")
    zflat = mesh[0].ravel()
    M = np.zeros((n, n))
    M[np.diag_indices(n)] = params.m2 * cell * zflat ** (-(d + 1))
    idx = np.arange(n).reshape(shape)
    for a in range(len(shape)):
        if shape[a] < 2:
            continue
        sl_lo = [slice(None)] * len(shape)
        sl_hi = [slice(None)] * len(shape)
        sl_lo[a] = slice(0, -1)
        sl_hi[a] = slice(1, None)
        i_lo = idx[tuple(sl_lo)].ravel()
        i_hi = idx[tuple(sl_hi)].ravel()
        if a == 0:
            z_edge = 0.5 * (zflat[i_lo] + zflat[i_hi])
        else:
            z_edge = zflat[i_lo]
        w = z_edge ** (1 - d) * cell / hs[a] ** 2
        M[i_lo, i_lo] += w
        M[i_hi, i_hi] += w
        M[i_lo, i_hi] -= w
        M[i_hi, i_lo] -= w
        # boundary faces: edge into the Dirichlet exterior (diagonal only)
        for side, edge_nodes in ((0, idx[tuple([slice(None)] * a + [0])].ravel()),
                                 (1, idx[tuple([slice(None)] * a + [-1])].ravel())):
            if a == 0:
                # midpoint between the face node and the phantom exterior node
                z_edge_b = zflat[edge_nodes] + (0.5 if side else -0.5) * hs[0]
            else:
                z_edge_b = zflat[edge_nodes]
            wb = z_edge_b ** (1 - d) * cell / hs[a] ** 2
            M[edge_nodes, edge_nodes] += wb
    return M


def build_covariance(region: LatticeRegion, params: ModelParams,
                     collar: int = 3, check: bool = True) -> CovarianceMatrix:
    """Invert the discretized (-Laplace_g + m^2) and restrict to the region.

    The grid is padded by `collar` cells per side (kept above z = 0) before
    imposing the Dirichlet wall, then the inverse is restricted to the
    declared region; a principal submatrix of an SPD inverse is SPD.
    Raises :class:`IndefiniteCovarianceError` when the discrete operator
    fails to be positive definite (too-coarse mesh with m^2 < 0).
    """
    z_min, z_max = region.z_range
    hz = region.h[0]
    # the wall toward z -> 0 may sit closer than `collar` cells (that side
    # is metrically far anyway), but at least one padding cell must fit
    low_collar = min(collar, int((z_min - 1e-12) / hz))
    if low_collar < 1:
        raise ParameterError(
            f"no collar cell fits above z = 0 (z_min = {z_min}, h_z = {hz}); "
            "raise z_min or refine the mesh")
    axes = [np.concatenate([z_min + hz * np.arange(-low_collar, 0),
                            np.linspace(z_min, z_max, region.shape[0]),
                            z_max + hz * np.arange(1, collar + 1)])]
    for (lo, hi), n, h in zip(region.x_box, region.shape[1:], region.h[1:]):
        axes.append(np.concatenate([lo + h * np.arange(-collar, 0),
                                    np.linspace(lo, hi, n),
                                    hi + h * np.arange(1, collar + 1)]))
    M = _operator_matrix(params, axes)
    try:
        cho = sla.cho_factor(M, lower=True)
    except sla.LinAlgError as exc:
        raise IndefiniteCovarianceError(
            "discretized operator is not positive definite; refine the mesh "
            f"or reduce |m^2| (m^2 = {params.m2})") from exc
    c_full = sla.cho_solve(cho, np.eye(M.shape[0]))
    # restrict to the declared-region nodes
    padded_shape = tuple(len(a) for a in axes)
    idx = np.arange(int(np.prod(padded_shape))).reshape(padded_shape)
    offsets = (low_collar,) + (collar,) * region.d
    inner = idx[tuple(slice(off, off + n)
                      for off, n in zip(offsets, region.shape))].ravel()
    C = c_full[np.ix_(inner, inner)]
    C = 0.5 * (C + C.T)
    try:
        factor = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteCovarianceError("restricted covariance lost positivity") from exc
    min_eig = float(sla.eigh(C, eigvals_only=True, subset_by_index=(0, 0))[0]) \
        if check else math.nan
    if check and min_eig <= 0:
        raise IndefiniteCovarianceError(f"covariance min eigenvalue {min_eig} <= 0")
    return CovarianceMatrix(region=region, params=params, C=C, factor=factor,
                            min_eigenvalue=min_eig)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _generator(seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def sample_field(cov: CovarianceMatrix, seed: int, stream: int = 0) -> FieldSample:
    """One field configuration factor @ xi with iid standard normal xi."""
    rng = _generator(seed, stream)
    xi = rng.standard_normal(cov.n)
    return FieldSample(values=cov.factor @ xi, seed=int(seed), stream=int(stream))


def sample_batch(cov: CovarianceMatrix, seed: int, n_samples: int,
                 stream: int = 0) -> np.ndarray:
    """(n_samples, N) matrix of field configurations from one stream."""
    rng = _generator(seed, stream)
    xi = rng.standard_normal((n_samples, cov.n))
    return xi @ cov.factor.T


# ---------------------------------------------------------------------------
# Cameron-Martin / quasiinvariance
# ---------------------------------------------------------------------------

def cameron_martin_check(cov: CovarianceMatrix, w: np.ndarray, functional,
                         seed: int = 0, n_samples: int = 200_000):
    """Compare E[F(phi + C w)] with E[e^{phi.w - (w, C w)/2} F(phi)].

    For the closed-form functionals ("one"; ("exp", v); ("lin", v);
    ("quad", v), meaning F = exp(v.phi), v.phi, (v.phi)^2) both sides are
    Gaussian integrals evaluated through different groupings and the gap is
    at rounding level.  For a callable F both sides are Monte Carlo
    estimates on the same sample stream; returns (lhs, rhs, gap, tol) with
    tol = 3 combined standard errors (tol = 0 for closed forms).
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (cov.n,):
        raise ParameterError("shift vector must live on the lattice sites")
    Cw = cov.C @ w
    wCw = float(w @ Cw)
    if functional == "one":
        return 1.0, 1.0, 0.0, 0.0
    if isinstance(functional, tuple) and len(functional) == 2:
        kind, v = functional
        v = np.asarray(v, dtype=float)
        vCv = float(v @ cov.C @ v)
        vCw = float(v @ Cw)
        if kind == "exp":
            lhs = math.exp(0.5 * vCv) * math.exp(vCw)
            u = w + v
            rhs = math.exp(0.5 * float(u @ cov.C @ u) - 0.5 * wCw)
            return lhs, rhs, abs(lhs - rhs), 0.0
        if kind == "lin":
            lhs = vCw
            rhs = float(v @ Cw)   # E[e^{phi w} phi.v] e^{-wCw/2} = v.Cw
            return lhs, rhs, abs(lhs - rhs), 0.0
        if kind == "quad":
            lhs = vCv + vCw ** 2
            rhs = vCv + float(v @ Cw) ** 2
            return lhs, rhs, abs(lhs - rhs), 0.0
        raise ParameterError(f"unknown closed-form functional {kind!r}")
    if not callable(functional):
        raise ParameterError("functional must be 'one', a (kind, v) pair, or callable")
    phi = sample_batch(cov, seed, n_samples)
    lhs_vals = functional(phi + Cw[None, :])
    weight = np.exp(phi @ w - 0.5 * wCw)
    rhs_vals = weight * functional(phi)
    lhs = float(np.mean(lhs_vals))
    rhs = float(np.mean(rhs_vals))
    se = math.hypot(float(np.std(lhs_vals)), float(np.std(rhs_vals))) / math.sqrt(n_samples)
    return lhs, rhs, abs(lhs - rhs), 3.0 * se


# ---------------------------------------------------------------------------
# Wick powers
# ---------------------------------------------------------------------------

def hermite_he(j: int, x):
    """Probabilists' Hermite polynomial He_j (three-term recurrence)."""
    x = np.asarray(x, dtype=float)
    if j == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for k in range(1, j):
        prev, cur = cur, x * cur - k * prev
    return cur


def wick_power_values(x, j: int, variance: float):
    """:x^j: with respect to the given variance: c^{j/2} He_j(x / sqrt(c))."""
    if j < 0:
        raise ParameterError("Wick power needs j >= 0")
    if j > WICK_JMAX:
        raise ParameterError(f"Wick powers limited to j <= {WICK_JMAX} "
                             "(coefficient overflow beyond)")
    if variance <= 0:
        raise ParameterError("variance must be positive")
    s = math.sqrt(variance)
    return variance ** (j / 2.0) * hermite_he(j, np.asarray(x, dtype=float) / s)


def wick_power(sample: FieldSample, i: int, j: int, cov: CovarianceMatrix) -> float:
    """:phi_i^j: of a sample, Wick-ordered with the site variance C_ii."""
    return float(wick_power_values(sample.values[i], j, float(cov.C[i, i])))


def wick_monomial_coefficients(j: int, variance: float) -> np.ndarray:
    """Coefficients p_0..p_j with :x^j: = sum_m p_m x^m.

    He_j(y) = sum_{m} he_{j,m} y^m gives p_m = c^{(j-m)/2} he_{j,m}.
    """
    if j > WICK_JMAX:
        raise ParameterError(f"Wick powers limited to j <= {WICK_JMAX}")
    he = np.zeros((j + 1, j + 1))
    he[0, 0] = 1.0
    if j >= 1:
        he[1, 1] = 1.0
    for k in range(1, j):
        he[k + 1, 1:] += he[k, :-1]
        he[k + 1, :] -= k * he[k - 1, :]
    m = np.arange(j + 1)
    return he[j] * variance ** ((j - m) / 2.0)


# ---------------------------------------------------------------------------
# persistence: versioned little-endian binary cache
# ---------------------------------------------------------------------------

def save_covariance(path, cov: CovarianceMatrix) -> None:
    """Binary cache: magic 'GFFC', version, region geometry, C and factor.

    All integers and floats little-endian; matrices row-major float64.
    """
    r = cov.region
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, r.d))
        fh.write(struct.pack("<" + "Q" * (r.d + 1), *r.shape))
        fh.write(struct.pack("<dd", *r.z_range))
        for lo, hi in r.x_box:
            fh.write(struct.pack("<dd", lo, hi))
        fh.write(struct.pack("<d", cov.params.m2))
        fh.write(struct.pack("<Q", cov.n))
        fh.write(struct.pack("<d", cov.min_eigenvalue))
        fh.write(np.ascontiguousarray(cov.C, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(cov.factor, dtype="<f8").tobytes())


def load_covariance(path) -> CovarianceMatrix:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ParameterError("not a covariance cache file")
        version, d = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ParameterError(f"unsupported cache version {version}")
        shape = struct.unpack("<" + "Q" * (d + 1), fh.read(8 * (d + 1)))
        z_range = struct.unpack("<dd", fh.read(16))
        x_box = tuple(struct.unpack("<dd", fh.read(16)) for _ in range(d))
        (m2,) = struct.unpack("<d", fh.read(8))
        (n,) = struct.unpack("<Q", fh.read(8))
        (min_eig,) = struct.unpack("<d", fh.read(8))
        C = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
        factor = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
    region = LatticeRegion(d=d, z_range=z_range, x_box=x_box, shape=shape)
    params = ModelParams(d=d, m2=m2)
    return CovarianceMatrix(region=region, params=params, C=C, factor=factor,
                            min_eigenvalue=min_eig)
