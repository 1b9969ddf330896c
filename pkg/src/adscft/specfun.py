"""Special functions underlying the propagator formulas.

Everything here is evaluated from classical integral/series representations
rather than wrapped from a library, so that the cross-representation tests
(series vs Euler integral, defining integral vs asymptotics) exercise real
independent code paths:

* ``gamma_fn``   -- Lanczos rational approximation with reflection,
* ``hyp2f1``     -- Gauss hypergeometric series / Euler integral,
* ``bessel_k``   -- modified Bessel function of the second kind from its
                    defining Laplace-type integral,
* ``bessel_j``   -- Bessel function of the first kind from the ascending
                    series and the Poisson integral.

All evaluators are pure functions; returned error estimates come from
embedded-rule differences or truncation terms and are estimates, not bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import tanh_sinh_01
from .errors import DomainError, ParameterError, QuadratureError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EvalResult:
    """A function value together with an absolute error estimate."""

    value: float
    est_error: float

    def __post_init__(self):
        if self.est_error < 0:
            raise ValueError("est_error must be nonnegative")


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

# Lanczos g = 7, 9-term coefficient set (Godfrey); ~15 significant digits
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function on the real line, poles excluded.

    Raises :class:`ParameterError` at nonpositive integers.
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ParameterError(f"gamma pole at x = {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0 (avoids overflow of gamma_fn for large x)."""
    if x <= 0:
        raise ParameterError("log_gamma requires x > 0")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(acc)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function on the real slice zeta < 1
# ---------------------------------------------------------------------------

_SERIES_MAX_TERMS = 200_000


def _hyp2f1_series(a: float, b: float, c: float, zeta: float,
                   tol: float = 1e-16) -> EvalResult:
    """Ascending series; converges for |zeta| < 1."""
    term = 1.0
    total = 1.0
    absacc = 1.0
    for n in range(_SERIES_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * zeta
        total += term
        absacc += abs(term)
        if abs(term) <= tol * max(abs(total), 1e-300) and n > 2:
            return EvalResult(total, abs(term) + _EPS * absacc)
    raise QuadratureError(
        f"hypergeometric series did not converge at zeta = {zeta}")


def _hyp2f1_euler(a: float, b: float, c: float, zeta: float,
                  level: int = 8) -> EvalResult:
    """Euler integral; requires c > b > 0, valid for zeta < 1."""
    pref = math.exp(log_gamma(c) - log_gamma(b) - log_gamma(c - b))

    def integrand(t, omt):
        return t ** (b - 1.0) * omt ** (c - b - 1.0) * (1.0 - zeta * t) ** (-a)

    val, err = tanh_sinh_01(integrand, level=level)
    return EvalResult(pref * val, pref * err + _EPS * abs(pref * val))


def hyp2f1(a: float, b: float, c: float, zeta: float) -> EvalResult:
    """Gauss hypergeometric function F(a, b; c; zeta) for real zeta < 1.

    Strategy: ascending series for |zeta| <= 1/2; Euler integral for
    zeta < -1/2 when c > b > 0 (or c > a > 0, using the a<->b symmetry);
    otherwise a Pfaff-transformed series in zeta/(zeta-1), which covers the
    Green's-function parameters for which the Euler precondition fails.
    """
    if zeta >= 1.0:
        raise DomainError(f"hyp2f1 requires zeta < 1, got {zeta}")
    if c <= 0.0 and c == math.floor(c):
        raise ParameterError(f"hyp2f1 pole at c = {c}")
    if abs(zeta) <= 0.5:
        return _hyp2f1_series(a, b, c, zeta)
    if zeta < -0.5:
        if c > b > 0.0:
            return _hyp2f1_euler(a, b, c, zeta)
        if c > a > 0.0:
            return _hyp2f1_euler(b, a, c, zeta)
        # Pfaff: F(a,b;c;zeta) = (1-zeta)^(-a) F(a, c-b; c; zeta/(zeta-1));
        # pick the variant with the faster-decaying terms
        w = zeta / (zeta - 1.0)
        if a - b <= b - a:
            inner = _hyp2f1_series(a, c - b, c, w)
            pref = (1.0 - zeta) ** (-a)
        else:
            inner = _hyp2f1_series(c - a, b, c, w)
            pref = (1.0 - zeta) ** (-b)
        return EvalResult(pref * inner.value, pref * inner.est_error)
    # 1/2 < zeta < 1: series still converges (slowly near 1)
    return _hyp2f1_series(a, b, c, zeta)


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind
# ---------------------------------------------------------------------------

_KV_ASYMPTOTIC_CUT = 30.0


def _bessel_k_asymptotic(nu: float, zeta: float) -> EvalResult:
    """Large-argument expansion; used for zeta > 30."""
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    last = math.inf
    for k in range(1, 40):
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * zeta * k)
        if abs(term) >= last:
            break
        total += term
        last = abs(term)
        if abs(term) < 1e-17 * abs(total):
            break
    pref = math.sqrt(math.pi / (2.0 * zeta)) * math.exp(-zeta)
    return EvalResult(pref * total, pref * (last + _EPS * abs(total)))


def _cosh_rule(nu: float, zeta_min: float, h: float) -> np.ndarray:
    """Node grid for the double-exponential evaluation of K_nu."""
    # integrand exp(-zeta cosh s) cosh(nu s); truncate when it underflows
    # relative to the peak for the smallest zeta in play
    s_max = 2.0
    for _ in range(4):
        s_max = math.acosh(1.0 + (50.0 + abs(nu) * s_max) / zeta_min)
    return np.arange(0.0, s_max + h, h)


def bessel_k(nu: float, zeta: float) -> EvalResult:
    """Modified Bessel function K_nu(zeta) for nu > 0, zeta > 0.

    For moderate zeta the defining Laplace-type integral is evaluated after
    the substitution t = (zeta/2) e^s, which turns it into the
    doubly-exponentially decaying integral of exp(-zeta cosh s) cosh(nu s);
    the trapezoid rule is then optimal.  For zeta > 30 the large-argument
    expansion takes over (both branches agree to ~1e-9 at the crossover).
    """
    if zeta <= 0.0:
        raise DomainError(f"bessel_k requires zeta > 0, got {zeta}")
    if nu <= 0.0:
        raise DomainError(f"bessel_k requires nu > 0, got {nu}")
    if zeta > _KV_ASYMPTOTIC_CUT:
        return _bessel_k_asymptotic(nu, zeta)
    h = 0.1
    s = _cosh_rule(nu, zeta, h)
    y = np.exp(-zeta * np.cosh(s)) * np.cosh(nu * s)
    y[0] *= 0.5
    fine = h * math.fsum(y)
    coarse = 2.0 * h * math.fsum(y[::2])
    return EvalResult(fine, abs(fine - coarse) + _EPS * fine)


def bessel_k_grid(nu: float, zetas: np.ndarray) -> np.ndarray:
    """Vectorized K_nu over an array of positive arguments (hot path)."""
    zetas = np.asarray(zetas, dtype=float)
    if np.any(zetas <= 0.0):
        raise DomainError("bessel_k_grid requires zeta > 0")
    out = np.empty_like(zetas)
    small = zetas <= _KV_ASYMPTOTIC_CUT
    if np.any(small):
        zs = zetas[small]
        h = 0.1
        s = _cosh_rule(nu, float(zs.min()), h)
        w = np.full(s.shape, h)
        w[0] = 0.5 * h
        ch = np.cosh(s)
        kernel = np.cosh(nu * s) * w
        # exp(-z*cosh s) underflows harmlessly to 0 for large z*cosh s
        with np.errstate(under="ignore"):
            out[small] = np.exp(-np.outer(zs, ch)) @ kernel
    if np.any(~small):
        out[~small] = [ _bessel_k_asymptotic(nu, z).value for z in zetas[~small] ]
    return out


def bessel_i_grid(nu: float, x: np.ndarray, max_terms: int = 120) -> np.ndarray:
    """Modified Bessel I_nu by its ascending series (all-positive terms).

    Stable for any x >= 0 that does not overflow; used for the
    Bessel-product mode kernel of the bulk pairing.
    """
    x = np.asarray(x, dtype=float)
    half2 = 0.25 * x * x
    term = np.ones_like(x)
    total = term.copy()
    for k in range(max_terms):
        term = term * half2 / ((k + 1.0) * (nu + k + 1.0))
        total += term
        if term.max() <= 1e-18 * total.max():
            break
    at_zero = 1.0 if nu == 0.0 else 0.0
    pref = np.where(x > 0, np.where(x > 0, x, 1.0) / 2.0, 1.0) ** nu
    pref = np.where(x > 0, pref, at_zero)
    return pref / gamma_fn(nu + 1.0) * total


# ---------------------------------------------------------------------------
# Bessel function of the first kind
# ---------------------------------------------------------------------------

_J_SERIES_CUT = 12.0
_J_ASYMPTOTIC_CUT = 40.0


def _bessel_j_series(nu: float, u: float) -> EvalResult:
    half2 = -0.25 * u * u
    term = 1.0
    total = 1.0
    absmax = 1.0
    for k in range(200):
        term *= half2 / ((k + 1.0) * (nu + k + 1.0))
        total += term
        absmax = max(absmax, abs(term))
        if abs(term) < 1e-18 * max(abs(total), 1e-300):
            break
    if u == 0.0:
        pref = 1.0 if nu == 0.0 else 0.0
    else:
        pref = math.exp(nu * math.log(u / 2.0) - log_gamma(nu + 1.0))
    val = pref * total
    return EvalResult(val, pref * (absmax * _EPS * 4.0 + abs(term)))


def _bessel_j_poisson(nu: float, u: float, level: int = 10) -> EvalResult:
    """Poisson integral J_nu(u) = P u^nu int_0^1 (1-t^2)^(nu-1/2) cos(ut) dt."""
    pref = (2.0 ** (1.0 - nu) / (math.sqrt(math.pi) * gamma_fn(nu + 0.5))
            * u ** nu)

    def integrand(t, omt):
        return (omt * (1.0 + t)) ** (nu - 0.5) * np.cos(u * t)

    val, err = tanh_sinh_01(integrand, level=level)
    return EvalResult(pref * val, abs(pref) * err + _EPS * abs(pref * val))


def _bessel_j_asymptotic(nu: float, u: float) -> EvalResult:
    # J_nu(u) ~ sqrt(2/pi u) [cos(chi) P - sin(chi) Q], chi = u - nu pi/2 - pi/4,
    # with P/Q the even/odd parts of the 1/(8u) expansion, signs (-1)^floor(k/2)
    mu = 4.0 * nu * nu
    p, q = 1.0, 0.0
    term = 1.0
    last = math.inf
    for k in range(1, 30):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * u)
        if abs(term) > last:
            break
        sgn = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 1:
            q += sgn * term
        else:
            p += sgn * term
        last = abs(term)
        if last < 1e-18:
            break
    chi = u - nu * math.pi / 2.0 - math.pi / 4.0
    amp = math.sqrt(2.0 / (math.pi * u))
    val = amp * (math.cos(chi) * p - math.sin(chi) * q)
    return EvalResult(val, amp * (last + _EPS * 4.0))


def bessel_j(nu: float, u: float) -> EvalResult:
    """Bessel function J_nu(u) for nu > -1/2 and u >= 0.

    Ascending series for u <= 12 (float64-accurate there), the Poisson
    integral representation for moderate u, large-argument asymptotics
    beyond; the representations overlap and are cross-checked in the tests.
    """
    if nu <= -0.5:
        raise DomainError(f"bessel_j requires nu > -1/2, got {nu}")
    if u < 0.0:
        raise DomainError(f"bessel_j requires u >= 0, got {u}")
    if u <= _J_SERIES_CUT:
        return _bessel_j_series(nu, u)
    if u <= _J_ASYMPTOTIC_CUT:
        return _bessel_j_poisson(nu, u)
    return _bessel_j_asymptotic(nu, u)


def _bessel_j_poisson_grid(nu: float, u: np.ndarray, level: int = 8) -> np.ndarray:
    """Poisson-integral evaluation sharing one node set across all u."""
    from ._quad import _get_rule
    t, omt, w, _ = _get_rule(level)
    profile = (omt * (1.0 + t)) ** (nu - 0.5) * w
    pref = (2.0 ** (1.0 - nu) / (math.sqrt(math.pi) * gamma_fn(nu + 0.5))
            * u ** nu)
    return pref * (np.cos(np.outer(u, t)) @ profile)


def _bessel_j_asymptotic_grid(nu: float, u: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    p = np.ones_like(u)
    q = np.zeros_like(u)
    term = np.ones_like(u)
    for k in range(1, 16):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * u)
        sgn = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 1:
            q += sgn * term
        else:
            p += sgn * term
        if np.max(np.abs(term)) < 1e-18:
            break
    chi = u - nu * math.pi / 2.0 - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * u)) * (np.cos(chi) * p - np.sin(chi) * q)


def bessel_j_grid(nu: float, u: np.ndarray) -> np.ndarray:
    """Vectorized J_nu over an array of nonnegative arguments."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("bessel_j_grid requires u >= 0")
    out = np.empty_like(u)
    lo = u <= _J_SERIES_CUT
    hi = u > _J_ASYMPTOTIC_CUT
    mid = ~lo & ~hi
    if np.any(lo):
        x = u[lo]
        half2 = -0.25 * x * x
        term = np.ones_like(x)
        total = np.ones_like(x)
        for k in range(60):
            term = term * half2 / ((k + 1.0) * (nu + k + 1.0))
            total += term
        with np.errstate(divide="ignore", invalid="ignore"):
            pref = np.where(x > 0, np.exp(nu * np.log(np.where(x > 0, x, 1.0) / 2.0)
                                          - log_gamma(nu + 1.0)),
                            1.0 if nu == 0.0 else 0.0)
        out[lo] = pref * total
    if np.any(mid):
        out[mid] = _bessel_j_poisson_grid(nu, u[mid])
    if np.any(hi):
        out[hi] = _bessel_j_asymptotic_grid(nu, u[hi])
    return out
