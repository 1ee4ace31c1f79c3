"""Closed-form limiting distributions and finite-t asymptotic predictors.

The two conditional limit laws share the gamma-integral kernel

    P(j, z) = 1/(j-1)! * integral_0^z  u^{j-1} e^{-u} du   (regularized),

the distribution function of a sum of j unit exponentials.  The sublinear
window law is y * P(j, 1/y); the linear window law multiplies P(j, a/(1-x))
by the intermediate reduced-process weight (1-x) x^{j-1} and normalizes by
1 - e^{-a}.  MRCA-depth laws are the j = 1 specializations.

Asymptotic predictors evaluate the finite-t right-hand sides: survival
1/(Bt), small-population event phi(t)/(B t^2), linear band (1-e^{-a})/(Bt),
local point mass e^{-k/(Bt)}/(B t)^2.
"""

from __future__ import annotations

import math
from .models import ModelConstants

_GAMMAINC_TOL = 1e-15
_GAMMAINC_MAXITER = 600


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), relative error < 1e-12.

    Power series for x < a + 1, Lentz-evaluated continued fraction of the
    upper function otherwise (the classical split).
    """
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if x == 0.0:
        return 0.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        # P(a,x) = x^a e^-x / Gamma(a) * sum_{n>=0} x^n / (a(a+1)...(a+n))
        term = 1.0 / a
        total = term
        n = a
        for _ in range(_GAMMAINC_MAXITER):
            n += 1.0
            term *= x / n
            total += term
            if abs(term) < abs(total) * _GAMMAINC_TOL:
                break
        return total * math.exp(-x + a * math.log(x) - lg)
    # Q(a,x) = x^a e^-x / Gamma(a) * 1/(x+1-a- 1/(x+3-a- 2(2-a)/(...)))
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMAINC_MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMAINC_TOL:
            break
    q = math.exp(-x + a * math.log(x) - lg) * h
    return 1.0 - q


def erlang_cdf(j: int, z: float) -> float:
    """P(sum of j unit exponentials <= z) = P(j, z)."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if z <= 0:
        return 0.0
    return regularized_gamma_p(float(j), z)


def theorem1_limit(j: int, y: float) -> float:
    """Limit of P(Z(t - y phi(t), t) = j | small-population event) for
    sublinear windows: y/(j-1)! * integral_0^{1/y} z^{j-1} e^{-z} dz."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if y <= 0:
        raise ValueError("y must be positive")
    return y * erlang_cdf(j, 1.0 / y)


def corollary1_mrca(y: float) -> float:
    """Limit of P(d(t) <= y phi(t) | small-population event): y (1 - e^{-1/y})."""
    if y <= 0:
        raise ValueError("y must be positive")
    return y * -math.expm1(-1.0 / y)


def theorem2_limit(j: int, x: float, a: float) -> float:
    """Limit of P(Z(x t, t) = j | 0 < Z(t) < B a t):
    P(j, a/(1-x)) * (1-x) x^{j-1} / (1 - e^{-a})."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if not (0.0 < x < 1.0):
        raise ValueError("x must lie in (0, 1)")
    if a <= 0:
        raise ValueError("a must be positive")
    return erlang_cdf(j, a / (1.0 - x)) * (1.0 - x) * x ** (j - 1) / -math.expm1(-a)


def corollary2_mrca(x: float, a: float) -> float:
    """Limit of P(d(t) <= x t | 0 < Z(t) < B a t):
    x (1 - e^{-a/x}) / (1 - e^{-a})."""
    if not (0.0 < x <= 1.0):
        raise ValueError("x must lie in (0, 1]")
    if a <= 0:
        raise ValueError("a must be positive")
    return x * math.expm1(-a / x) / math.expm1(-a)


def intermediate_reduced_limit(j: int, x: float) -> float:
    """Limit of P(Z(x t, t) = j) / P(Z(t) > 0): (1-x) x^{j-1}."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if not (0.0 < x < 1.0):
        raise ValueError("x must lie in (0, 1)")
    return (1.0 - x) * x ** (j - 1)


def yaglom_laplace(lam: float) -> float:
    """Limit of E[exp(-lam Z(t)/(Bt)) | Z(t) > 0]: 1/(1 + lam)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return 1.0 / (1.0 + lam)


def yaglom_cdf(z: float) -> float:
    """Limiting cdf of Z(t)/(Bt) given survival: standard exponential."""
    if z < 0:
        return 0.0
    return -math.expm1(-z)


def survival_predictor(consts: ModelConstants, t: float) -> float:
    """Q(t) ~ 2 mu / (sigma^2 t) = 1/(B t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return 1.0 / (consts.B * t)


def event_predictor(consts: ModelConstants, t: float, event) -> float:
    """Finite-t probability predictor for a conditioning event.

    survival              -> 1/(Bt)
    {0 < Z <= B phi(t)}   -> phi(t)/(B t^2)
    {0 < Z < B a t}       -> (1 - e^{-a})/(B t)
    """
    from .simulate import EventSpec  # deferred: keeps this module numba-free

    if t <= 0:
        raise ValueError("t must be positive")
    if isinstance(event, EventSpec):
        kind, phi, a = event.kind, event.phi, event.a
    else:
        kind, phi, a = event, None, None
    if kind == "survival":
        return 1.0 / (consts.B * t)
    if kind == "small-pop":
        return phi(t) / (consts.B * t * t)
    if kind == "linear-band":
        return -math.expm1(-a) / (consts.B * t)
    raise ValueError(f"unknown event kind {kind!r}")


def local_limit_predictor(consts: ModelConstants, t: float, k: int) -> float:
    """P(Z(t) = k) ~ e^{-k/(Bt)} / (B t)^2."""
    if t <= 0 or k < 1:
        raise ValueError("need t > 0 and k >= 1")
    return math.exp(-k / (consts.B * t)) / (consts.B * t) ** 2


def theorem1_tail_bound(j_max: int, y: float) -> float:
    """Upper bound on sum_{j > j_max} theorem1_limit(j, y): the summands are
    dominated by y (1/y)^j / j! (integrand bound u^{j-1} <= (1/y)^{j-1})."""
    z = 1.0 / y
    log_term = math.log(y) + (j_max + 1) * math.log(z) - math.lgamma(j_max + 2)
    # geometric-style envelope: successive terms shrink by at least z/(j_max+2)
    ratio = z / (j_max + 2)
    if ratio >= 1:
        raise ValueError("j_max too small for a tail bound at this y")
    return math.exp(log_term) / (1.0 - ratio)
