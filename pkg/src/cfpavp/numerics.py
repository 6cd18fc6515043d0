"""Special functions and adaptive quadrature used by the analytical modules."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _spi
from scipy import special

from .errors import NumericalError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "q_function",
    "q_inverse",
    "hyp2f1_interference",
    "log_gamma",
    "integrate",
    "integrate_vec",
]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tightened(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.abs_tol / factor, self.rel_tol / factor, self.max_subdivisions)


DEFAULT_QUAD = QuadratureSpec()


def q_function(x):
    """Gaussian tail probability Q(x) = P[Z > x]."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))[()]


def q_inverse(eps):
    """Inverse of :func:`q_function` on (0, 1)."""
    e = np.asarray(eps, dtype=float)
    if np.any(~((e > 0) & (e < 1))):
        raise ValueError("q_inverse requires 0 < eps < 1")
    # -ndtri(eps) keeps full relative accuracy in both tails
    return (-special.ndtri(e))[()]


def _series(c, w, max_terms):
    """Sum_n n!/(c)_n w^n for w in [0, 1/2], elementwise."""
    total = np.ones_like(w)
    term = np.ones_like(w)
    for n in range(max_terms):
        term = term * (n + 1.0) / (c + n) * w
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            return total, True
    return total, False


def _hyp2f1_integral(rho, alpha):
    # F = (alpha-2)/rho * int_1^inf rho u^{1-alpha} / (1 + rho u^{-alpha}) du
    f = lambda u: u ** (1.0 - alpha) / (1.0 + rho * u ** (-alpha))
    val, err = _spi.quad(f, 1.0, np.inf, limit=2000, epsabs=1e-14, epsrel=1e-12)
    return (alpha - 2.0) * val


def hyp2f1_interference(rho, alpha: float, max_terms: int = 500):
    """2F1(1, 1-2/alpha; 2-2/alpha; -rho) for rho >= 0.

    The argument -rho is mapped onto a rapidly convergent series: for rho <= 1
    the Pfaff transform gives argument rho/(1+rho) <= 1/2, for rho > 1 the
    1/z connection formula gives argument 1/(1+rho) < 1/2. Both series have
    ratio at most 1/2. Very large alpha (where the connection formula cancels)
    and series non-convergence fall back to the far-field integral.
    """
    if not alpha > 2.0:
        raise ValueError("alpha must exceed 2")
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0) or np.any(~np.isfinite(r)):
        raise ValueError("rho must be finite and nonnegative")
    b = 1.0 - 2.0 / alpha
    out = np.empty_like(r)
    lo = r <= 1.0
    ok = True
    if np.any(lo):
        rl = r[lo]
        s, conv = _series(1.0 + b, rl / (1.0 + rl), max_terms)
        out[lo] = s / (1.0 + rl)
        ok &= conv
    hi = ~lo
    if np.any(hi):
        rh = r[hi]
        if alpha > 40.0:
            out[hi] = [_hyp2f1_integral(x, alpha) for x in rh]
        else:
            s, conv = _series(2.0 - b, 1.0 / (1.0 + rh), max_terms)
            lead = math.pi * b / math.sin(math.pi * b) * rh ** (-b)
            out[hi] = lead - 0.5 * (alpha - 2.0) * s / (1.0 + rh)
            ok &= conv
    if not ok:
        flat = out.reshape(-1)
        for i, x in enumerate(r.reshape(-1)):
            if x > 0:
                flat[i] = _hyp2f1_integral(x, alpha)
        if not np.all(np.isfinite(out)):
            raise NumericalError("hypergeometric evaluation failed", rho=rho, alpha=alpha)
    return out[()]


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    a = np.asarray(x, dtype=float)
    if np.any(a <= 0):
        raise ValueError("log_gamma requires x > 0")
    return special.gammaln(a)[()]


def _check(val, err, info_ok, spec, a, b):
    target = max(spec.abs_tol, spec.rel_tol * abs(val))
    if not np.isfinite(val) or (not info_ok and err > target):
        raise NumericalError("quadrature tolerance not met", estimate=val, error_bound=err, a=a, b=b)


def integrate(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD, points=None) -> float:
    """Adaptive quadrature of a scalar function on [a, b], b may be +inf.

    Semi-infinite ranges use x = a + t/(1-t) on t in [0, 1).
    """
    if not a < b:
        raise ValueError("integrate requires a < b")
    if math.isinf(b):
        def g(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(a + t / s) / (s * s)

        lo, hi = 0.0, 1.0
        if points is not None:
            points = [(p - a) / (1.0 + p - a) for p in points if p > a]
        fun = g
    else:
        lo, hi, fun = a, b, f
        if points is not None:
            points = [p for p in points if a < p < b]
    kw = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=int(spec.max_subdivisions), full_output=1)
    if points:
        kw["points"] = sorted(points)
    res = _spi.quad(fun, lo, hi, **kw)
    val, err = res[0], res[1]
    ier_ok = len(res) == 3
    _check(val, err, ier_ok, spec, a, b)
    return float(val)


def integrate_vec(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Adaptive quadrature of a vector-valued integrand (shared subdivision)."""
    if not a < b:
        raise ValueError("integrate requires a < b")
    if math.isinf(b):
        def g(t):
            s = 1.0 - t
            if s <= 0.0:
                return 0.0 * f(a + 1.0)
            return f(a + t / s) / (s * s)

        lo, hi, fun = 0.0, 1.0, g
    else:
        lo, hi, fun = a, b, f
    val, err, info = _spi.quad_vec(fun, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                   limit=int(spec.max_subdivisions), full_output=True)
    val = np.asarray(val, dtype=float)
    if not np.all(np.isfinite(val)) or (not info.success and err > max(spec.abs_tol, spec.rel_tol * np.max(np.abs(val)))):
        raise NumericalError("vector quadrature tolerance not met", estimate=val, error_bound=err, a=a, b=b)
    return val
