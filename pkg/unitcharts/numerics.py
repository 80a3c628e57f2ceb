#!/usr/bin/env python3

"""Special functions and numeric kernels.

Incomplete beta and gamma functions follow the classical continued fraction
and series expansions (Numerical Recipes, chapter 6), evaluated in log space.
Integration, root finding and minimization are small generic kernels working
on plain callables; they carry no knowledge of the distribution families.
"""

import dataclasses
import heapq
import logging
import math
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import utils

logger = logging.getLogger(__name__)

_EPS = sys.float_info.epsilon
_FPMIN = sys.float_info.min / _EPS


@dataclasses.dataclass(frozen=True)
class Tolerance:
    """Convergence tolerances of an iterative procedure."""

    abs: float = 1e-12
    rel: float = 1e-12
    max_iter: int = 10000

    def __post_init__(self):
        if not self.abs > 0 or not self.rel > 0:
            raise utils.DomainError(
                f"Tolerances must be positive, got abs={self.abs}, "
                f"rel={self.rel}")
        if self.max_iter < 1:
            raise utils.DomainError(f"max_iter must be >= 1, got "
                                    f"{self.max_iter}")


@dataclasses.dataclass(frozen=True)
class Bracket:
    """An interval expected to enclose a root."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise utils.DomainError(f"Invalid bracket [{self.lo}, {self.hi}]")


SPECIAL_TOL = Tolerance(abs=1e-15, rel=1e-15, max_iter=10000)
QUAD_TOL = Tolerance(abs=1e-12, rel=1e-12, max_iter=2000)
ROOT_TOL = Tolerance(abs=1e-14, rel=1e-14, max_iter=500)
MINIMIZE_TOL = Tolerance(abs=1e-8, rel=1e-14, max_iter=500)


def _require(condition: bool, message: str):
    if not condition:
        raise utils.DomainError(message)


def log_gamma(x: float) -> float:
    """Get the logarithm of the Gamma function."""
    _require(math.isfinite(x) and x > 0,
             f"log_gamma requires a finite positive argument, got {x}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    """Get the logarithm of the Beta function."""
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _beta_cf(x: float, a: float, b: float, tol: Tolerance) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, tol.max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= tol.rel:
            return h

    raise utils.NumericError(
        f"Incomplete beta continued fraction did not converge "
        f"(x={x}, a={a}, b={b})", best=h)


def reg_inc_beta(x: float, a: float, b: float,
                 tol: Tolerance = SPECIAL_TOL) -> float:
    """Get the regularized incomplete beta function I_x(a, b)."""
    _require(0.0 <= x <= 1.0, f"reg_inc_beta requires 0 <= x <= 1, got {x}")
    _require(a > 0 and b > 0,
             f"reg_inc_beta requires a, b > 0, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0

    lfront = (a * math.log(x) + b * math.log1p(-x) - log_beta(a, b))
    # The continued fraction converges fast below the mean-like switch
    # point, use the symmetry relation above it.
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lfront) * _beta_cf(x, a, b, tol) / a
    return 1.0 - math.exp(lfront) * _beta_cf(1.0 - x, b, a, tol) / b


def _inv_beta_guess(p: float, a: float, b: float) -> float:
    if a >= 1.0 and b >= 1.0:
        pp = p if p < 0.5 else 1.0 - p
        t = math.sqrt(-2.0 * math.log(pp))
        x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if p < 0.5:
            x = -x
        al = (x * x - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = (x * math.sqrt(al + h) / h
             - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0))
             * (al + 5.0 / 6.0 - 2.0 / (3.0 * h)))
        return a / (a + b * math.exp(2.0 * w))

    lna = math.log(a / (a + b))
    lnb = math.log(b / (a + b))
    t = math.exp(a * lna) / a
    u = math.exp(b * lnb) / b
    w = t + u
    if p < t / w:
        return (a * w * p) ** (1.0 / a)
    return 1.0 - (b * w * (1.0 - p)) ** (1.0 / b)


def inv_reg_inc_beta(p: float, a: float, b: float,
                     tol: Tolerance = ROOT_TOL) -> float:
    """Get x such that I_x(a, b) = p.

    An analytic first guess is refined by Newton steps, falling back to
    bisection whenever a step leaves the current bracket.
    """
    _require(0.0 < p < 1.0, f"inv_reg_inc_beta requires 0 < p < 1, got {p}")
    _require(a > 0 and b > 0,
             f"inv_reg_inc_beta requires a, b > 0, got a={a}, b={b}")

    lbeta = log_beta(a, b)
    lo, hi = 0.0, 1.0
    x = min(max(_inv_beta_guess(p, a, b), _FPMIN), 1.0 - _EPS)
    best, best_err = x, math.inf
    for _ in range(tol.max_iter):
        err = reg_inc_beta(x, a, b) - p
        if abs(err) < best_err:
            best, best_err = x, abs(err)
        if err == 0.0:
            return x
        if err < 0:
            lo = x
        else:
            hi = x

        logdens = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lbeta
        dens = math.exp(logdens)
        newx = x - err / dens if dens > 0 and math.isfinite(dens) else -1.0
        if not lo < newx < hi:
            newx = 0.5 * (lo + hi)

        if abs(newx - x) <= tol.rel * x or hi - lo <= tol.abs * x:
            return newx
        x = newx

    if best_err <= 1e-10:
        return best
    raise utils.NumericError(
        f"inv_reg_inc_beta did not converge (p={p}, a={a}, b={b})",
        best=best, diagnostics={'residual': best_err})


def _gamma_series(s: float, x: float, tol: Tolerance) -> float:
    # Series for the regularized lower incomplete gamma function.
    ap = s
    term = total = 1.0 / s
    for _ in range(tol.max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * tol.rel:
            return total * math.exp(-x + s * math.log(x) - log_gamma(s))

    raise utils.NumericError(
        f"Incomplete gamma series did not converge (s={s}, x={x})",
        best=total)


def _gamma_cf(s: float, x: float, tol: Tolerance) -> float:
    # Continued fraction for e^x x^-s Gamma(s, x), modified Lentz.
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, tol.max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= tol.rel:
            return h

    raise utils.NumericError(
        f"Incomplete gamma continued fraction did not converge "
        f"(s={s}, x={x})", best=h)


def _check_gamma_args(s: float, x: float):
    _require(s > 0 and math.isfinite(s), f"Gamma shape must be > 0, got {s}")
    _require(x >= 0 and not math.isnan(x),
             f"Gamma argument must be >= 0, got {x}")


def reg_lower_gamma(s: float, x: float,
                    tol: Tolerance = SPECIAL_TOL) -> float:
    """Get the regularized lower incomplete gamma function P(s, x)."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return _gamma_series(s, x, tol)
    lfront = -x + s * math.log(x) - log_gamma(s)
    return 1.0 - math.exp(lfront) * _gamma_cf(s, x, tol)


def reg_upper_gamma(s: float, x: float,
                    tol: Tolerance = SPECIAL_TOL) -> float:
    """Get the regularized upper incomplete gamma function Q(s, x)."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return 1.0 - _gamma_series(s, x, tol)
    lfront = -x + s * math.log(x) - log_gamma(s)
    return math.exp(lfront) * _gamma_cf(s, x, tol)


def scaled_upper_gamma(s: float, x: float,
                       tol: Tolerance = SPECIAL_TOL) -> float:
    """Get e^x * Gamma(s, x), the unnormalized scaled upper gamma.

    Neither e^x nor Gamma(s, x) is formed on the continued fraction branch,
    which keeps the product finite for arguments far beyond exp() range.
    """
    _check_gamma_args(s, x)
    _require(x > 0, f"scaled_upper_gamma requires x > 0, got {x}")
    if x < s + 1.0:
        return math.exp(x + log_gamma(s)) * reg_upper_gamma(s, x, tol)
    return math.exp(s * math.log(x)) * _gamma_cf(s, x, tol)


def _inv_gamma_guess(q: float, s: float) -> float:
    p = 1.0 - q
    if s > 1.0:
        pp = p if p < 0.5 else q
        t = math.sqrt(-2.0 * math.log(pp))
        x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if p < 0.5:
            x = -x
        return max(1e-3, s * (1.0 - 1.0 / (9.0 * s)
                              - x / (3.0 * math.sqrt(s))) ** 3)

    t = 1.0 - s * (0.253 + s * 0.12)
    if p < t:
        return (p / t) ** (1.0 / s)
    return 1.0 - math.log(q / (1.0 - t))


def inv_reg_upper_gamma(q: float, s: float,
                        tol: Tolerance = ROOT_TOL) -> float:
    """Get y such that Q(s, y) = q."""
    _require(0.0 < q < 1.0, f"inv_reg_upper_gamma requires 0 < q < 1, "
                            f"got {q}")
    _require(s > 0, f"Gamma shape must be > 0, got {s}")

    gln = log_gamma(s)
    lo, hi = 0.0, math.inf
    y = _inv_gamma_guess(q, s)
    best, best_err = y, math.inf
    for _ in range(tol.max_iter):
        # Q is decreasing in y.
        err = reg_upper_gamma(s, y) - q
        if abs(err) < best_err:
            best, best_err = y, abs(err)
        if err == 0.0:
            return y
        if err > 0:
            lo = y
        else:
            hi = y

        dens = math.exp((s - 1.0) * math.log(y) - y - gln)
        newy = y + err / dens if dens > 0 else -1.0
        if not lo < newy < hi:
            newy = 2.0 * lo if math.isinf(hi) else 0.5 * (lo + hi)

        if abs(newy - y) <= tol.rel * y or hi - lo <= tol.abs * y:
            return newy
        y = newy

    if best_err <= 1e-10:
        return best
    raise utils.NumericError(
        f"inv_reg_upper_gamma did not converge (q={q}, s={s})",
        best=best, diagnostics={'residual': best_err})


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XGK = np.array([0.991455371120812639206854697526329,
                 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926,
                 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013,
                 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245,
                 0.0])
_WGK = np.array([0.022935322010529224963732008058970,
                 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518,
                 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550,
                 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649,
                 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082,
                0.279705391489276667901467771423780,
                0.381830050505118944950369775488975,
                0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float
          ) -> tuple[float, float]:
    half = 0.5 * (b - a)
    values = np.asarray(f(0.5 * (a + b) + half * _NODES), dtype=float)
    if not np.all(np.isfinite(values)):
        raise utils.NumericError(
            f"Integrand is not finite on [{a}, {b}]")
    kronrod = half * float(values @ _KRONROD)
    gauss = half * float(values @ _GAUSS)
    return kronrod, abs(kronrod - gauss)


def quad(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
         tol: Tolerance = QUAD_TOL,
         points: Optional[Sequence[float]] = None) -> float:
    """Integrate f over [a, b] with adaptive Gauss-Kronrod panels.

    The integrand is called with numpy arrays of nodes. Optional breakpoints
    (typically the mode of a sharply peaked density) seed the initial
    partition. Endpoints are never evaluated.
    """
    _require(math.isfinite(a) and math.isfinite(b),
             f"Integration bounds must be finite, got [{a}, {b}]")
    if a == b:
        return 0.0
    if a > b:
        return -quad(f, b, a, tol, points)

    edges = sorted({a, b, *(p for p in (points or []) if a < p < b)})
    heap = []
    total = error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, err = _gk15(f, lo, hi)
        total += value
        error += err
        heapq.heappush(heap, (-err, lo, hi, value))

    subdivisions = 0
    while error > max(tol.abs, tol.rel * abs(total)):
        if subdivisions >= tol.max_iter:
            raise utils.NumericError(
                f"quad did not reach tolerance on [{a}, {b}]",
                best=total, diagnostics={'error': error})
        negerr, lo, hi, value = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # Interval exhausted at machine precision.
            heapq.heappush(heap, (0.0, lo, hi, value))
            break
        left, lerr = _gk15(f, lo, mid)
        right, rerr = _gk15(f, mid, hi)
        total += left + right - value
        error += lerr + rerr + negerr
        heapq.heappush(heap, (-lerr, lo, mid, left))
        heapq.heappush(heap, (-rerr, mid, hi, right))
        subdivisions += 1

    return total


def find_root(f: Callable[[float], float], bracket: Bracket,
              tol: Tolerance = ROOT_TOL) -> float:
    """Find a root of f inside a sign-changing bracket (Brent's method)."""
    # pylint: disable=too-many-locals,too-many-branches
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        raise utils.DomainError(
            f"find_root bracket [{a}, {b}] does not enclose a sign change "
            f"(f={fa}, {fb})")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b

    c, fc = b, fb
    d = e = b - a
    for _ in range(tol.max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol.abs
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b

        if abs(e) >= tol1 and abs(fa) > abs(fb):
            # Inverse quadratic interpolation, or secant when a == c.
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = xm
        else:
            d = e = xm

        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = f(b)

    raise utils.NumericError("find_root did not converge", best=b,
                             diagnostics={'interval': (min(b, c), max(b, c))})


def gradient(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Get the central finite-difference gradient of f at x."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = _EPS ** (1.0 / 3.0) * max(1.0, abs(x[i]))
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def minimize(f: Callable[[np.ndarray], float], x0: Sequence[float],
             tol: Tolerance = MINIMIZE_TOL) -> tuple[np.ndarray, float]:
    """Minimize f with BFGS quasi-Newton iterations.

    Gradients come from central differences. Convergence is declared when
    the gradient infinity norm drops below tol.abs, or when the line search
    stalls at the finite-difference noise floor.
    """
    # pylint: disable=too-many-locals
    x = np.array(x0, dtype=float)
    fx = f(x)
    if not math.isfinite(fx):
        raise utils.NumericError("minimize: objective is not finite at x0",
                                 best=x)
    g = gradient(f, x)
    # First steps move at most one unit.
    hinv = np.eye(x.size) / max(1.0, float(np.linalg.norm(g)))
    noise_floor = max(tol.abs, 1e-4)

    for iteration in range(tol.max_iter):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol.abs:
            logger.debug("BFGS converged after %s iterations, |g|=%.3g",
                         iteration, gnorm)
            return x, fx

        direction = -hinv @ g
        slope = float(g @ direction)
        if slope >= 0:
            hinv = np.eye(x.size) / max(1.0, float(np.linalg.norm(g)))
            direction = -hinv @ g
            slope = float(g @ direction)

        step = 1.0
        while True:
            xnew = x + step * direction
            fnew = f(xnew)
            if math.isfinite(fnew) and fnew <= fx + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-14:
                if gnorm <= noise_floor:
                    logger.debug("BFGS stopped at noise floor, |g|=%.3g",
                                 gnorm)
                    return x, fx
                raise utils.NumericError(
                    "minimize: line search failed", best=x,
                    diagnostics={'fun': fx, 'gradient': g.tolist(),
                                 'iterations': iteration})

        gnew = gradient(f, xnew)
        s = xnew - x
        y = gnew - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            if iteration == 0:
                hinv = (sy / float(y @ y)) * np.eye(x.size)
            rho = 1.0 / sy
            ident = np.eye(x.size)
            hinv = ((ident - rho * np.outer(s, y)) @ hinv
                    @ (ident - rho * np.outer(y, s)) + rho * np.outer(s, s))

        converged = abs(fx - fnew) <= tol.rel * max(1.0, abs(fx))
        x, fx, g = xnew, fnew, gnew
        if converged and float(np.max(np.abs(g))) <= noise_floor:
            return x, fx

    raise utils.NumericError(
        "minimize: maximum number of iterations reached", best=x,
        diagnostics={'fun': fx, 'gradient': g.tolist()})


def numeric_hessian(f: Callable[[np.ndarray], float], x: Sequence[float],
                    step: Optional[float] = None) -> np.ndarray:
    """Get the symmetric central-difference Hessian of f at x.

    Without an explicit step, each coordinate uses max(1e-5, 1e-4 |x_i|).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if step is None:
        steps = np.maximum(1e-5, 1e-4 * np.abs(x))
    else:
        steps = np.full(n, float(step))

    f0 = f(x)
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = steps[j]
            hess[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                          + f(x - ei - ej)) / (4.0 * steps[i] * steps[j])
            hess[j, i] = hess[i, j]

    if not np.all(np.isfinite(hess)):
        raise utils.NumericError("numeric_hessian produced non-finite "
                                 "entries", best=hess)
    return 0.5 * (hess + hess.T)
