"""Exact tail probabilities for Poisson epochs with unit intensity.

With ``X ~ Exp(1)`` and ``Y | X ~ Poisson(X)``, the rewards are the points
of a unit Poisson process, so ``W(x)`` counts the points in the completed
epochs before ``x``. Conditioning on the backward recurrence time ``U`` (an
exponential truncated at ``x``) gives

    Pr{W(x) >= k} = int_0^x e^{-u} Pr{Poisson(x - u) >= k} du,

while the full count ``V(x) ~ Poisson(x)`` has tail ``Pr{Poisson(x) >= k}``.
"""

import math
import warnings

from scipy import integrate, special

from ._numerics import ceil_snap


def poisson_sf_ge(lam, k):
    """``Pr{Poisson(lam) >= k}`` for integer ``k``."""
    if k <= 0:
        return 1.0
    if lam <= 0:
        return 0.0
    return float(special.gammainc(k, lam))


def unit_w_tail_count(x, k, epsrel=1e-12):
    """``Pr{W(x) >= k}`` for the unit-intensity Poisson-epoch model."""
    if k <= 0:
        return 1.0
    if x <= 0:
        return 0.0

    def integrand(u):
        return math.exp(-u) * special.gammainc(k, x - u)

    # the integrand falls by a factor of about k / x per unit of u
    points = [p for p in (1.0, 2.0, 5.0, 10.0) if p < x]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, 0.0, x, epsabs=0.0, epsrel=epsrel, limit=500, points=points or None)
    return float(val)


def unit_w_tail(x, c):
    """``Pr{W(x) >= cx}``; the threshold is ``ceil(cx)`` since ``W`` is integer."""
    return unit_w_tail_count(x, ceil_snap(c * x))


def unit_v_tail(x, c):
    """``Pr{V(x) >= cx}`` for the uncut count ``V(x) ~ Poisson(x)``."""
    return poisson_sf_ge(x, ceil_snap(c * x))
