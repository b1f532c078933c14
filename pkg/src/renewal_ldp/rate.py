"""Rate function ``h(t) = inf{s : E[exp(tY - sX)] <= 1}`` and friends.

The root of ``s -> E[exp(tY - sX)] - 1`` is bracketed by geometric
expansion, then refined with Newton steps that fall back to bisection when
they leave the bracket. The selected root is certified by the sign of the
``s``-derivative of the joint transform, ``E[X exp(tY - hX)] > 0``.
"""

import math
from dataclasses import dataclass

from scipy import optimize

from .errors import DomainError, NoTiltError, RateUndefinedError, RegularityError


@dataclass(frozen=True)
class SolverConfig:
    """Root-finder settings.

    Attributes
    ----------
    bracket_expand : float
        Growth factor of the probing radius while bracketing.
    tol_root : float
        Residual tolerance on ``E[exp(tY - hX)] - 1``.
    max_iter : int
        Cap on refinement iterations.
    max_expand : int
        Cap on bracket expansions.
    """

    bracket_expand: float = 4.0
    tol_root: float = 1e-12
    max_iter: int = 200
    max_expand: int = 60

    def __post_init__(self):
        if not self.tol_root > 0:
            raise ValueError("tol_root must be positive")
        if not self.bracket_expand > 1:
            raise ValueError("bracket_expand must exceed 1")
        if self.max_iter < 1 or self.max_expand < 1:
            raise ValueError("iteration caps must be positive")


DEFAULT_CONFIG = SolverConfig()
# doublings of the probe step when mapping the admissible tilts (|t| <= 16)
EDGE_STEPS = 6


@dataclass(frozen=True)
class RateEval:
    """``h`` and its first two derivatives at one tilt ``t``."""

    t: float
    h: float
    h1: float
    h2: float
    residual: float = 0.0

    @property
    def hstar(self):
        """Legendre transform ``h*(h'(t)) = t h'(t) - h(t)``."""
        return self.t * self.h1 - self.h


def _excess(law, t, s):
    """E[exp(tY + sX)] - 1 with ``inf`` kept as a sentinel."""
    return law.mgf(t, s) - 1.0


def _find_upper(law, t, cfg):
    """Return ``s`` with E[exp(tY + sX)] < 1, or raise."""
    scale = law.scale
    if _excess(law, t, 0.0) < 0:
        return 0.0
    radius = scale
    for _ in range(cfg.max_expand):
        for s in (-radius, radius):
            if _excess(law, t, s) < 0:
                return s
        radius *= cfg.bracket_expand
    # the sublevel set may be a narrow dip; search for the minimum directly
    res = optimize.minimize_scalar(
        lambda s: min(_excess(law, t, s), 1e300), bounds=(-64.0 * scale, 64.0 * scale), method="bounded"
    )
    if res.fun <= 0:
        return float(res.x)
    raise RateUndefinedError(
        f"E[exp(tY + sX)] >= 1 for every probed s at t={t}; h(t) is undefined"
    )


def solve_h(law, t, cfg=DEFAULT_CONFIG):
    """Solve for ``h(t)``.

    Parameters
    ----------
    law : JointLaw
    t : float
    cfg : SolverConfig, optional

    Returns
    -------
    float
        ``h`` with ``|E[exp(tY - hX)] - 1| <= cfg.tol_root`` at the crossing
        where ``E[X exp(tY - hX)] > 0``.

    Raises
    ------
    RateUndefinedError
        No sign change was found within the expansion budget.
    DomainError
        The transform is infinite everywhere the search looked.
    """
    t = float(t)
    if t == 0.0:
        return 0.0
    if law.mgf(t, 0.0) == math.inf and law.mgf(t, -law.scale) == math.inf:
        probe = [law.mgf(t, -law.scale * cfg.bracket_expand**k) for k in range(8)]
        if all(math.isinf(v) for v in probe):
            raise DomainError(f"E[exp(tY + sX)] is infinite for all probed s at t={t}")
    # in s' = -h coordinates we need the upper crossing of E[exp(tY + s'X)] = 1
    s_lo = _find_upper(law, t, cfg)
    f_lo = _excess(law, t, s_lo)
    if f_lo == 0.0:
        return -s_lo
    step = max(law.scale, abs(s_lo))
    s_hi = s_lo + step
    f_hi = _excess(law, t, s_hi)
    n = 0
    while f_hi < 0:
        n += 1
        if n > cfg.max_expand:
            raise RateUndefinedError(f"no upper bracket for h at t={t}")
        s_lo, f_lo = s_hi, f_hi
        step *= cfg.bracket_expand
        s_hi = s_lo + step
        f_hi = _excess(law, t, s_hi)
    # shrink an infinite upper end first so Newton sees finite values
    for _ in range(cfg.max_iter):
        if math.isfinite(f_hi) or s_hi - s_lo <= 4 * math.ulp(abs(s_lo) + abs(s_hi)):
            break
        mid = 0.5 * (s_lo + s_hi)
        f_mid = _excess(law, t, mid)
        if f_mid < 0:
            s_lo, f_lo = mid, f_mid
        else:
            s_hi, f_hi = mid, f_mid
    s = s_hi if abs(f_hi) < abs(f_lo) else s_lo
    f = f_hi if s == s_hi else f_lo
    for _ in range(cfg.max_iter):
        if abs(f) <= cfg.tol_root and law.tilted_moment(t, s, 1, 0) > 0:
            return -s
        deriv = law.tilted_moment(t, s, 1, 0)
        cand = s - f / deriv if deriv > 0 and math.isfinite(deriv) else math.nan
        if not (s_lo < cand < s_hi):
            cand = 0.5 * (s_lo + s_hi)
        f_c = _excess(law, t, cand)
        if f_c < 0:
            s_lo, f_lo = cand, f_c
        else:
            s_hi, f_hi = cand, f_c
        s, f = cand, f_c
        if s_hi - s_lo <= 4 * math.ulp(max(abs(s_lo), abs(s_hi), 1e-300)):
            break
    s = s_hi if abs(f_hi) <= abs(f_lo) else s_lo
    f = _excess(law, t, s)
    if abs(f) <= max(cfg.tol_root, 1e-15) * 10 and law.tilted_moment(t, s, 1, 0) > 0:
        return -s
    raise RateUndefinedError(f"h({t}) did not converge (residual {f:.3g})")


def rate_derivatives(law, t, h):
    """Return ``(h'(t), h''(t))`` from tilted moments at ``s = -h``.

    Raises
    ------
    RegularityError
        If ``E[X exp(tY - hX)] <= 0`` or ``h'' <= 0``.
    """
    s = -h
    denom = law.tilted_moment(t, s, 1, 0)
    if not (denom > 0 and math.isfinite(denom)):
        raise RegularityError(f"E[X exp(tY - hX)] = {denom} at t={t} must be positive and finite")
    h1 = law.tilted_moment(t, s, 0, 1) / denom
    second = (
        law.tilted_moment(t, s, 0, 2)
        - 2 * h1 * law.tilted_moment(t, s, 1, 1)
        + h1 * h1 * law.tilted_moment(t, s, 2, 0)
    )
    h2 = second / denom
    if not (h2 > 0 and math.isfinite(h2)):
        raise RegularityError(f"h''({t}) = {h2} is not positive")
    return h1, h2


def evaluate(law, t, cfg=DEFAULT_CONFIG):
    """Solve ``h(t)`` and its derivatives in one call."""
    h = solve_h(law, t, cfg)
    h1, h2 = rate_derivatives(law, t, h)
    resid = law.mgf(t, -h) - 1.0
    return RateEval(t=float(t), h=h, h1=h1, h2=h2, residual=resid)


def slope(law, t, cfg=DEFAULT_CONFIG):
    """``h'(t)``."""
    return rate_derivatives(law, t, solve_h(law, t, cfg))[0]


def _admissible_edge(law, t0, direction, cfg):
    """Walk from ``t0`` towards ``direction`` until ``h'`` stops being defined.

    Returns the last good ``t`` and the first bad one (``inf`` if none).
    """
    lo_lim, hi_lim = law.t_range
    limit = hi_lim if direction > 0 else lo_lim
    good = t0
    step = 0.25
    for _ in range(EDGE_STEPS):
        cand = good + direction * step
        if math.isfinite(limit) and (cand - limit) * direction >= 0:
            cand = 0.5 * (good + limit) if abs(limit - good) > 1e-12 else None
            if cand is None:
                return good, limit
            step = abs(cand - good)
        try:
            ok = math.isfinite(slope(law, cand, cfg))
        except (RateUndefinedError, RegularityError, DomainError, ArithmeticError, ValueError):
            ok = False
        if not ok:
            return good, cand
        good = cand
        step *= 2.0
    return good, direction * math.inf


def _shrink_edge(law, good, bad, cfg, iters=60):
    for _ in range(iters):
        if not math.isfinite(bad) or abs(bad - good) < 1e-4 * max(1.0, abs(good)):
            break
        mid = 0.5 * (good + bad)
        try:
            slope(law, mid, cfg)
            good = mid
        except (RateUndefinedError, RegularityError, DomainError, ArithmeticError, ValueError):
            bad = mid
    return good


def slope_range(law, cfg=DEFAULT_CONFIG):
    """Approximate range ``(inf h', sup h')`` over the admissible tilts."""
    lo_lim, hi_lim = law.t_range
    t0 = 0.0 if lo_lim < 0.0 < hi_lim else 0.5 * (lo_lim + hi_lim)
    out = []
    for direction in (-1, 1):
        good, bad = _admissible_edge(law, t0, direction, cfg)
        if math.isfinite(bad):
            good = _shrink_edge(law, good, bad, cfg)
        out.append(slope(law, good, cfg))
    return tuple(out)


def solve_tau(law, c, cfg=DEFAULT_CONFIG):
    """Unique ``tau`` with ``h'(tau) = c``.

    Raises
    ------
    NoTiltError
        If ``c`` lies outside the attainable slope range; the estimated
        range is attached as ``.attainable``.
    """
    c = float(c)
    lo_lim, hi_lim = law.t_range
    t0 = 0.0 if lo_lim < 0.0 < hi_lim else 0.5 * (lo_lim + hi_lim)
    g0 = slope(law, t0, cfg) - c
    if g0 == 0.0:
        return t0
    direction = 1 if g0 < 0 else -1
    good, bad = t0, None
    step = 0.25
    for _ in range(cfg.max_expand):
        limit = hi_lim if direction > 0 else lo_lim
        cand = good + direction * step
        if math.isfinite(limit) and (cand - limit) * direction >= 0:
            cand = 0.5 * (good + limit)
            if abs(cand - good) < 1e-13:
                break
        try:
            g = slope(law, cand, cfg) - c
        except (RateUndefinedError, RegularityError, DomainError, ArithmeticError, ValueError):
            # probe closer to the edge of the admissible range
            step *= 0.25
            if step < 1e-12:
                break
            continue
        if g * g0 <= 0:
            bad = cand
            break
        good = cand
        step *= 2.0
    if bad is None:
        raise NoTiltError(
            f"slope c={c} is not attained by h' on the admissible tilts",
            attainable=_safe_slope_range(law, cfg),
        )
    a, b = sorted((good, bad))
    return optimize.brentq(lambda t: slope(law, t, cfg) - c, a, b, xtol=1e-14, rtol=1e-15, maxiter=cfg.max_iter)


def _safe_slope_range(law, cfg):
    try:
        return slope_range(law, cfg)
    except Exception:  # diagnostic only
        return None


def legendre(law, tau, cfg=DEFAULT_CONFIG):
    """``h*(h'(tau)) = tau h'(tau) - h(tau)``."""
    h = solve_h(law, tau, cfg)
    h1, _ = rate_derivatives(law, tau, h)
    return tau * h1 - h
