"""Potential densities, Kac moment sums and exact means of local-time
functionals.

Brownian motion started at 0 and killed at an independent exponential time
of rate ``a`` has potential density

    u^a(x) = exp(-sqrt(2a) |x|) / sqrt(2a)

and Kac's formula gives joint local-time moments at the killing time as a
sum over visiting orders,

    E prod_j L^{x_j} = sum_pi prod_j u^a(x_{pi(j)} - x_{pi(j-1)}),  x_0 = 0.

Moments of the intersection local times are integrals of such sums. We
evaluate them by iterated adaptive quadrature (scipy's QUADPACK
Gauss-Kronrod routines) and, independently, by an exact sum of orthant
integrals (``method="permutation_sum"``).

Tolerances are absolute and apply to integrands normalized by their leading
power of ``h``, so tiny values at small ``h`` keep full relative accuracy.
"""

import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import LowLevelCallable, integrate, special, stats

from . import _kernels

PANEL_TOL = 1e-9     # 1-D integrals
LEVEL_TOL = 1e-7     # each level of an iterated multi-dimensional integral
_SQRT_2PI = math.sqrt(2 * math.pi)

SINGLE_CONSTANT = 64.0 / 3.0   # c^2 for the single-motion statistic
CROSS_CONSTANT = 32.0 / 3.0    # C~^2 for the cross statistic

TARGETS = ("alpha_moment", "beta_moment", "modulus_mean",
           "limit_prediction_single", "limit_prediction_cross")
LAWS = ("exponential", "exponential_pair", "fixed_time")
METHODS = ("closed_form", "quadrature", "permutation_sum", "monte_carlo")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach tolerance; ``partial`` holds the
    last estimate."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Kernel:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("killing rate must be positive")

    @property
    def root(self):
        return math.sqrt(2.0 * self.rate)


def _kernel(k):
    return k if isinstance(k, Kernel) else Kernel(float(k))


@dataclass(frozen=True)
class MomentValue:
    value: float
    abs_error_estimate: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.abs_error_estimate >= 0 and math.isfinite(self.abs_error_estimate)):
            raise ValueError("error estimate must be finite and non-negative")
        if self.method == "closed_form" and self.abs_error_estimate != 0:
            raise ValueError("closed-form values carry no error")

    def scaled(self, factor):
        return MomentValue(factor * self.value, abs(factor) * self.abs_error_estimate,
                           self.method)


@dataclass(frozen=True)
class MomentSpec:
    """A moment request.

    ``order`` is the moment order m (for the limit predictions) or the power
    n of alpha/beta. ``law`` picks exponential killing at rate ``zeta``, a
    pair of independent exponential times (``zeta``, ``zeta2``), or the
    fixed horizon ``t``. ``h`` is the probe shift for ``modulus_mean``.
    """

    order: int
    target: str
    law: str = "exponential"
    zeta: float = 1.0
    zeta2: float | None = None
    t: float | None = None
    h: float | None = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}")
        if int(self.order) != self.order or self.order < 0:
            raise ValueError("order must be a non-negative integer")
        if self.law == "fixed_time":
            if self.t is None or not self.t > 0:
                raise ValueError("fixed_time law needs t > 0")
        elif not self.zeta > 0:
            raise ValueError("rates must be positive")
        if self.law == "exponential_pair" and (self.zeta2 is None or not self.zeta2 > 0):
            raise ValueError("exponential_pair law needs zeta2 > 0")
        n = self.order // 2 if self.target.startswith("limit") else self.order
        cap = 2 if self.target in ("alpha_moment", "limit_prediction_single") else 3
        if self.target != "modulus_mean" and n > cap:
            raise ValueError(f"{self.target} is implemented for n <= {cap}")


# -- kernels and difference operators ---------------------------------------

def u(kernel, x):
    """Potential density u^a(x)."""
    k = _kernel(kernel)
    s = k.root
    return np.exp(-s * np.abs(x)) / s


def delta_u(kernel, x, h):
    """Forward difference u(x + h) - u(x)."""
    return u(kernel, np.asarray(x) + h) - u(kernel, x)


def dd_zero(kernel, h):
    """Mixed second difference of u^a(x - y) at x = y: 2 (u(0) - u(h))."""
    s = _kernel(kernel).root
    return -2.0 * math.expm1(-s * h) / s


def ddu(kernel, x, h):
    """Second difference 2 u(x) - u(x + h) - u(x - h), free of cancellation.

    For |x| >= h it equals -4 u(x) sinh^2(s h / 2). Inside |x| < h it is
    [2 e^{-sh} expm1(s (h - |x|)) - 4 e^{-sh} sinh^2(s |x| / 2)] / s.
    """
    s = _kernel(kernel).root
    a = np.abs(np.asarray(x, dtype=float))
    outer = -4.0 * np.exp(-s * a) / s * np.sinh(s * h / 2) ** 2
    inner = (2.0 * np.exp(-s * h) * np.expm1(s * (h - np.minimum(a, h)))
             - 4.0 * np.exp(-s * h) * np.sinh(s * np.minimum(a, h) / 2) ** 2) / s
    return np.where(a >= h, outer, inner)


def _quad(f, a, b, tol=PANEL_TOL, **kw):
    val, err, *rest = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200,
                                     full_output=1, **kw)
    if len(rest) > 1 and rest[0].get("ier", 0) not in (0,) and err > 10 * tol * max(1, abs(val)):
        raise QuadratureError(f"quadrature did not converge: {rest[1]}", MomentValue(val, err, "quadrature"))
    return val, err


def vprop_cross_integral(k1, k2, h):
    """Integral over the line of ddu(k1, x, h) * ddu(k2, x, h).

    Behaves like (8/3) h^3 as h -> 0.
    """
    k1, k2 = _kernel(k1), _kernel(k2)
    h = float(h)
    if not 0 < h <= 1:
        raise ValueError("need 0 < h <= 1")
    # |x| <= h, in units y = x / h, integrand normalized by h^2
    inner, e1 = _quad(lambda y: ddu(k1, h * y, h) * ddu(k2, h * y, h) / h ** 2, 0.0, 1.0)
    tail = vprop_tail_integral(k1, h, k2)
    val = 2.0 * inner * h ** 3 + tail.value
    err = 2.0 * e1 * h ** 3 + tail.abs_error_estimate
    return MomentValue(val, err, "quadrature")


def vprop_tail_integral(kernel, h, other=None):
    """Integral over |x| >= h of ddu(kernel) * ddu(other); O(h^4)."""
    k1 = _kernel(kernel)
    k2 = k1 if other is None else _kernel(other)
    h = float(h)
    if not 0 < h <= 1:
        raise ValueError("need 0 < h <= 1")
    s = k1.root + k2.root
    norm = h ** 4

    # x = h + z / s; the integrand then decays like e^{-z}
    def f(z):
        x = h + z / s
        return ddu(k1, x, h) * ddu(k2, x, h) / norm / s

    val, err = _quad(f, 0.0, 40.0 * s / min(k1.root, k2.root))
    return MomentValue(2.0 * val * norm, 2.0 * err * norm, "quadrature")


def vprop_abs_integral(kernel, h):
    """Integral over the line of |ddu(kernel, x, h)|; O(h^2)."""
    k = _kernel(kernel)
    h = float(h)
    if h == 0:
        return MomentValue(0.0, 0.0, "closed_form")
    if not 0 < h <= 1:
        raise ValueError("need 0 <= h <= 1")
    s = k.root
    inner, e1 = _quad(lambda y: abs(ddu(k, h * y, h)) / h, 0.0, 1.0)
    outer, e2 = _quad(lambda z: abs(ddu(k, h + z / s, h)) / h ** 2 / s, 0.0, 40.0)
    val = 2.0 * (inner * h ** 2 + outer * h ** 2)
    return MomentValue(val, 2.0 * (e1 + e2) * h ** 2, "quadrature")


BOUNDS = {
    # name: (power of h, restrict to |x| >= h)
    "first_difference": (1, False),
    "second_difference": (1, False),
    "second_difference_outer": (2, True),
}


def bound_ratios(kernel, bound, h, x):
    """|difference| / (h^p u(x)) on the grid ``x`` for one of :data:`BOUNDS`."""
    p, outer = BOUNDS[bound]
    x = np.asarray(x, dtype=float)
    if outer:
        x = x[np.abs(x) >= h]
    if bound == "first_difference":
        lhs = np.abs(delta_u(kernel, x, h))
    else:
        lhs = np.abs(ddu(kernel, x, h))
    return lhs / (h ** p * u(kernel, x))


def fit_bound_constant(kernel, bound, hs, x):
    """Smallest C with |difference| <= C h^p u(x) over the ladder ``hs``."""
    return max(float(np.max(bound_ratios(kernel, bound, h, x))) for h in hs)


# -- Kac sums ---------------------------------------------------------------

def kac_weight(points, kernel):
    """sum over orders pi of prod_j u(x_{pi(j)} - x_{pi(j-1)}) with x_0 = 0."""
    k = _kernel(kernel)
    pts = [0.0] + [float(p) for p in points]
    m = len(pts) - 1
    s = k.root
    w = [[math.exp(-s * abs(a - b)) / s for b in pts] for a in pts]
    total = 0.0
    for perm in itertools.permutations(range(1, m + 1)):
        prod = 1.0
        prev = 0
        for j in perm:
            prod *= w[prev][j]
            prev = j
        total += prod
    return total


def _region_points(gaps, r):
    """Sorted non-origin points when the origin is the r-th of n + 1 sorted
    points separated by ``gaps``."""
    n = len(gaps)
    pos = [0.0] * (n + 1)
    for i in range(r + 1, n + 1):
        pos[i] = pos[i - 1] + gaps[i - 1]
    for i in range(r - 1, -1, -1):
        pos[i] = pos[i + 1] - gaps[i]
    return pos[:r] + pos[r + 1:]


def _symmetric_integral(n, decay, roots, mode):
    """Integral over R^n of a symmetric Kac integrand that decays at least
    like exp(-decay * g) along every gap g of the sorted points.

    The integral is n! times the sum over the n + 1 positions of the origin
    among the sorted points; each gap g in (0, inf) is mapped to
    v = 1 - exp(-decay g) in (0, 1). ``mode`` 0 integrates the product of
    two motions' Kac sums, mode 1 the single-motion sum at doubled points.
    """
    fn = LowLevelCallable(_kernels.kac_region_integrand.ctypes)
    total = 0.0
    err = 0.0
    opts = {"epsabs": LEVEL_TOL, "epsrel": LEVEL_TOL, "limit": 100}
    for r in range(n + 1):
        val, e = integrate.nquad(fn, [(0.0, 1.0)] * n,
                                 args=(float(r), float(decay), roots[0], roots[-1], float(mode)),
                                 opts=[opts] * n)
        total += val
        err += e
    fact = math.factorial(n)
    return fact * total, fact * err


def _crossings(labels, r, n_gaps):
    """Gap crossing counts of the visiting order ``labels`` from the origin at
    sorted index ``r``."""
    c = [0] * n_gaps
    prev = r
    for j in labels:
        for g in range(min(prev, j), max(prev, j)):
            c[g] += 1
        prev = j
    return c


def _orthant_sum(point_labels, roots, n):
    """Exact value of the Kac integral by orthant integration.

    ``point_labels`` maps Kac points to the ranks 1..n of the sorted
    locations; ``roots`` is one sqrt(2 zeta) per independent motion, and each
    motion visits all the points. Within a fixed ordering every product of
    potential densities is exp(-sum_i c_i g_i) times constants, whose
    integral over the gaps is prod 1 / c_i.
    """
    m = len(point_labels)
    total = 0.0
    for r in range(n + 1):
        def loc(rank, r=r):
            return rank - 1 if rank - 1 < r else rank

        per_motion = []
        for s in roots:
            terms = {}
            for perm in itertools.permutations(range(m)):
                c = tuple(_crossings([loc(point_labels[j]) for j in perm], r, n))
                terms[c] = terms.get(c, 0) + 1
            per_motion.append((s, terms))
        # multiply out the motions' crossing polynomials
        combos = [((0.0,) * n, 1.0)]
        for s, terms in per_motion:
            nxt = []
            for rate, coef in combos:
                for c, mult in terms.items():
                    nxt.append((tuple(a + s * ci for a, ci in zip(rate, c)),
                                coef * mult / s ** m))
            combos = nxt
        for rate, coef in combos:
            term = coef
            for a in rate:
                term /= a
            total += term
    return math.factorial(n) * total


@functools.lru_cache(maxsize=64)
def kac_beta_moment(zeta, zeta2, n, method="quadrature"):
    """E[(integral of L^x L~^x dx)^n] for independent motions killed at
    exponential times of rates ``zeta`` and ``zeta2``."""
    k1, k2 = _kernel(zeta), _kernel(zeta2)
    if int(n) != n or not 0 <= n <= 3:
        raise ValueError("beta moments are implemented for 0 <= n <= 3")
    n = int(n)
    if n == 0:
        return MomentValue(1.0, 0.0, "closed_form")
    s1, s2 = k1.root, k2.root
    if n == 1:
        return MomentValue(2.0 / (s1 * s2 * (s1 + s2)), 0.0, "closed_form")
    if method == "permutation_sum":
        labels = list(range(1, n + 1))
        return MomentValue(_orthant_sum(labels, (s1, s2), n), 0.0, "permutation_sum")
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    val, err = _symmetric_integral(n, s1 + s2, (s1, s2), 0)
    return MomentValue(val, err, "quadrature")


@functools.lru_cache(maxsize=64)
def kac_alpha_moment(zeta, n, method="quadrature"):
    """E[(integral of (L^x)^2 dx)^n] for a motion killed at rate ``zeta``."""
    k = _kernel(zeta)
    if int(n) != n or not 0 <= n <= 2:
        raise ValueError("alpha moments are implemented for 0 <= n <= 2")
    n = int(n)
    if n == 0:
        return MomentValue(1.0, 0.0, "closed_form")
    s = k.root
    if n == 1:
        # two coincident points: 2 u(0) * integral of u = 2 / (s zeta)
        return MomentValue(2.0 / (s * k.rate), 0.0, "closed_form")
    labels = [1, 1, 2, 2]
    if method == "permutation_sum":
        return MomentValue(_orthant_sum(labels, (s,), 2), 0.0, "permutation_sum")
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    val, err = _symmetric_integral(2, s, (s,), 1)
    return MomentValue(val, err, "quadrature")


def gaussian_moment_factor(n):
    """(2n)! / (2^n n!), the 2n-th moment of a standard normal."""
    return math.factorial(2 * n) / (2 ** n * math.factorial(n))


def limit_prediction(spec):
    """Limiting m-th moment of the normalized modulus at exponential times.

    Cross target: (2n)!/(2^n n!) (32/3)^n E[beta^n] for m = 2n, else 0.
    Single target: the same with (64/3)^n E[alpha^n].
    """
    if spec.target not in ("limit_prediction_single", "limit_prediction_cross"):
        raise ValueError("limit_prediction needs a limit_prediction_* target")
    if spec.law == "fixed_time":
        raise ValueError("exact limit predictions exist for exponential times only")
    m = int(spec.order)
    if m % 2:
        return MomentValue(0.0, 0.0, "closed_form")
    n = m // 2
    if spec.target == "limit_prediction_cross":
        zeta2 = spec.zeta if spec.zeta2 is None else spec.zeta2
        base = kac_beta_moment(spec.zeta, zeta2, n)
        c = CROSS_CONSTANT
    else:
        base = kac_alpha_moment(spec.zeta, n)
        c = SINGLE_CONSTANT
    return base.scaled(gaussian_moment_factor(n) * c ** n)


def evaluate(spec):
    """Dispatch a :class:`MomentSpec` to its evaluator."""
    if spec.target.startswith("limit_prediction"):
        return limit_prediction(spec)
    if spec.target == "modulus_mean":
        if spec.law != "fixed_time" or spec.h is None or spec.order != 1:
            raise ValueError("modulus_mean needs order 1, a fixed_time law and h")
        return modulus_mean(spec.t, spec.h)
    if spec.target == "alpha_moment":
        if spec.law == "fixed_time":
            if spec.order == 1:
                return alpha_mean(spec.t)
            raise ValueError("fixed-time alpha moments beyond the mean come from Monte Carlo")
        return kac_alpha_moment(spec.zeta, spec.order)
    if spec.law == "fixed_time":
        if spec.order == 1:
            return beta_mean(spec.t, spec.t)
        raise ValueError("fixed-time beta moments beyond the mean come from Monte Carlo")
    zeta2 = spec.zeta if spec.zeta2 is None else spec.zeta2
    return kac_beta_moment(spec.zeta, zeta2, spec.order)


# -- fixed-time means -------------------------------------------------------

def heat_kernel(r, x):
    return np.exp(-np.square(x) / (2.0 * r)) / np.sqrt(2.0 * math.pi * r)


def local_time_mean(t, x):
    """E L^x_t = integral_0^t p_r(x) dr."""
    a = np.abs(np.asarray(x, dtype=float))
    return (np.sqrt(2.0 * t / math.pi) * np.exp(-a * a / (2.0 * t))
            - a * special.erfc(a / math.sqrt(2.0 * t)))


def modulus_mean(t, h):
    """E integral (L^{x+h}_t - L^x_t)^2 dx = 4 int_0^t (t - r)(p_r(0) - p_r(h)) dr.

    With r = s^2 the integrand (8 / sqrt(2 pi)) (t - s^2)(1 - e^{-h^2 / 2s^2})
    is smooth on [0, sqrt(t)].
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if h < 0:
        raise ValueError("h must be non-negative")
    if h == 0:
        return MomentValue(0.0, 0.0, "closed_form")
    rt = math.sqrt(t)
    scale = t * min(h, rt)

    def f(s):
        return (t - s * s) * -math.expm1(-h * h / (2.0 * s * s)) / scale if s > 0 else t / scale

    pts = [h] if h < rt else None
    val, err = _quad(f, 0.0, rt, points=pts)
    c = 8.0 / _SQRT_2PI * scale
    return MomentValue(c * val, c * err, "quadrature")


def alpha_mean(t):
    """E alpha_t = 2 int_0^t (t - r) p_r(0) dr, by quadrature (r = s^2)."""
    if not t > 0:
        raise ValueError("t must be positive")
    rt = math.sqrt(t)
    val, err = _quad(lambda s: (t - s * s) / t ** 1.5, 0.0, rt)
    c = 4.0 / _SQRT_2PI * t ** 1.5
    return MomentValue(c * val, c * err, "quadrature")


def beta_mean(s, t):
    """E integral L^x_s L~^x_t dx for independent motions."""
    scale = math.sqrt(max(s, t))
    val, err = _quad(lambda x: local_time_mean(s, x) * local_time_mean(t, x), 0.0, 40.0 * scale)
    return MomentValue(2.0 * val, 2.0 * err, "quadrature")


def cross_modulus_mean(s, t, h):
    """E integral (L^{x+h}_s - L^x_s)(L~^{x+h}_t - L~^x_t) dx."""
    def d(r, x):
        return local_time_mean(r, x + h) - local_time_mean(r, x)

    reach = 40.0 * math.sqrt(max(s, t)) + h
    val, err = _quad(lambda x: d(s, x) * d(t, x), -reach, reach, points=[-h, 0.0])
    return MomentValue(val, err, "quadrature")


# -- exact means for the lattice walk ---------------------------------------

def _return_probs(m, y):
    """P(S_m = y) for a simple random walk, vectorized over m."""
    m = np.asarray(m)
    ok = (m + y) % 2 == 0
    return np.where(ok, stats.binom.pmf((m + y) // 2, m, 0.5), 0.0)


def lattice_modulus_mean(n_steps, k, bin_width=1.0):
    """Exact E of bin_width * sum_x (v^{x+k} - v^x)^2 for a walk of
    ``n_steps`` steps with spacing ``bin_width`` (values = counts * bin_width):

        bin_width^3 [2n + 4 sum_{m=1}^{n-1} (n - m)(P(S_m = 0) - P(S_m = k))].
    """
    n = int(n_steps)
    m = np.arange(1, n)
    core = 2.0 * n + 4.0 * float(np.sum((n - m) * (_return_probs(m, 0) - _return_probs(m, k))))
    return bin_width ** 3 * core


def lattice_alpha_mean(n_steps, bin_width=1.0):
    """Exact E of bin_width * sum_x (v^x)^2 for the walk above."""
    n = int(n_steps)
    m = np.arange(1, n)
    return bin_width ** 3 * (n + 2.0 * float(np.sum((n - m) * _return_probs(m, 0))))


def moment_value_record(spec, mv):
    """Flat record: target, law parameters, order, value, error, method."""
    return {
        "target": spec.target,
        "law": spec.law,
        "zeta": spec.zeta,
        "zeta2": spec.zeta2,
        "t": spec.t,
        "h": spec.h,
        "order": spec.order,
        "value": mv.value,
        "error": mv.abs_error_estimate,
        "method": mv.method,
    }


MOMENT_CSV_COLUMNS = ("target", "law", "zeta", "zeta2", "t", "h", "order", "value", "error", "method")


def moment_values_csv(records):
    lines = [",".join(MOMENT_CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join("" if rec[c] is None else (repr(float(rec[c])) if isinstance(rec[c], float) else str(rec[c]))
                              for c in MOMENT_CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def moment_values_json(records):
    return json.dumps(list(records), indent=2, sort_keys=True) + "\n"
