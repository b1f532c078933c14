"""Prefactors and exact large-deviation tail approximations.

For a slope ``c`` with tilt ``tau`` solving ``h'(tau) = c`` the
approximations are assembled in log space:

* nonlattice ``log phi - log tau - log(2 pi x h'')/2 - x h*``;
* lattice span ``d`` replaces ``-log tau`` by
  ``log d - d tau {xc/d} - log(1 - exp(-tau d))`` with ``{a} = ceil(a) - a``;
* shifted adds ``a h(tau) - b tau``;
* first passage uses the prefactor of the overshooting sum.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import frac_up, interval_integrals
from .errors import ConfigurationError, RegimeError, RegularityError, UnsupportedModelError
from .rate import DEFAULT_CONFIG, rate_derivatives, solve_h, solve_tau

H_SWITCH = 1e-8
NEG_TRUNC = 1e-14
DEFAULT_PROFILE_STEP = 0.01
DEFAULT_PROFILE_XMAX = 40.0

REGIMES = ("nonlattice", "lattice", "shifted", "first_passage")


@dataclass(frozen=True)
class Prefactor:
    """``phi = B / E[X exp(tY - hX)]`` at one tilt."""

    t: float
    h: float
    B: float
    denom: float
    variant: str = "standard"

    @property
    def phi(self):
        return self.B / self.denom


@dataclass
class TailApprox:
    """Asymptotic approximation of ``Pr{W(x) >= cx}`` (or its first-passage analogue)."""

    c: float
    x: float
    tau: float
    h: float
    h2: float
    hstar: float
    log_prob: float
    regime: str
    prefactor: float
    components: dict = field(default_factory=dict)

    @property
    def prob(self):
        return math.exp(self.log_prob)

    @property
    def lattice_correction(self):
        return self.components.get("lattice_correction")

    def as_row(self):
        return {
            "c": self.c,
            "x": self.x,
            "regime": self.regime,
            "tau": self.tau,
            "hstar": self.hstar,
            "log_prob": self.log_prob,
            "prob": self.prob,
            "prefactor": self.prefactor,
            "lattice_correction": self.components.get("lattice_correction", math.nan),
        }


# ---------------------------------------------------------------------------
# prefactors
# ---------------------------------------------------------------------------


def _positive_tail_integral(func, start=0.0, floor=1e-18):
    """Integral of a decaying nonnegative ``func`` over ``[start, inf)``."""
    cut = start + 1.0
    for _ in range(60):
        if float(func(np.array([cut]))[0]) < floor:
            break
        cut = start + 2.0 * (cut - start)
    else:
        raise RegularityError("integrand does not decay; the prefactor integral diverges")
    return float(interval_integrals(func, [start, cut])[0])


def _negative_part(law, t, h, profile, trunc=NEG_TRUNC):
    """Integral over ``x < 0`` of ``g_x e^{-hx} [int_0^{|x|} profile] F(dx)``."""
    from .models import KernelMeasure
    from .renewal import truncation_point

    if profile is None:
        raise ConfigurationError("two-sided X needs a renewal profile for the prefactor")
    L = truncation_point(KernelMeasure(law, t, -h), trunc)
    xs = profile.x
    sel = xs >= 0
    u = xs[sel]
    if u[-1] < L:
        raise ConfigurationError(f"profile reaches x={u[-1]:.3g}; the prefactor needs x >= {L:.3g}")
    phi_u = profile.normalized_by(h)[sel]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (phi_u[1:] + phi_u[:-1]) * np.diff(u))])

    def integrand(x):
        return law.kernel_density(t, -h, x) * np.interp(-x, u, cum)

    return float(interval_integrals(integrand, [-L, 0.0], law.breakpoints)[0])


def prefactor_B(law, t, h, mgf_profile=None, h_switch=H_SWITCH):
    """The constant ``B(X, t)`` of the prefactor.

    For ``X >= 0`` this is ``(1 - E[exp(-hX)]) / h``, or ``E[X]`` when
    ``|h| <= h_switch``. For two-sided ``X`` it is

        int_0^inf Pr{X > x} e^{-hx} dx
          - int_{x<0} g_x(t) e^{-hx} int_0^{|x|} M_u(t) e^{-hu} du F(dx),

    which needs the renewal profile ``mgf_profile`` of ``M_u(t)``.

    Raises
    ------
    ConfigurationError
        Missing profile for two-sided ``X``.
    RegularityError
        ``B`` is not positive.
    """
    if law.x_nonneg:
        if abs(h) <= h_switch:
            B = law.mean_x()
        else:
            B = (1.0 - law.mgf(0.0, -h)) / h
    else:
        if mgf_profile is None:
            raise ConfigurationError("two-sided X needs a renewal profile for the prefactor")
        first = _positive_tail_integral(lambda x: law.tail_x(x) * np.exp(-h * x))
        B = first - _negative_part(law, t, h, mgf_profile)
    if not (B > 0 and math.isfinite(B)):
        raise RegularityError(f"B(X, t) = {B} at t={t} is not positive")
    return B


def prefactor_B_bar(law, t, h, wbar_profile=None, h_switch=H_SWITCH):
    """First-passage constant ``B_bar(X, t)``.

    For ``X >= 0`` this is ``E[exp(tY)(1 - exp(-hX))] / h``, or
    ``E[X exp(tY)]`` when ``|h| <= h_switch``. The two-sided form mirrors
    :func:`prefactor_B` with ``E[exp(tY) 1{X > u}]`` as the forcing and
    the profile of ``E[exp(t W_bar(u))]``.
    """
    ey = law.mgf(t, 0.0)
    if not math.isfinite(ey):
        raise UnsupportedModelError(f"{law.kind}: E[exp(tY)] is infinite at t={t}")
    if law.x_nonneg:
        if abs(h) <= h_switch:
            B = law.tilted_moment(t, 0.0, 1, 0)
        else:
            B = (ey - law.mgf(t, -h)) / h
    else:
        if wbar_profile is None:
            raise ConfigurationError("two-sided X needs a first-passage renewal profile")
        first = _positive_tail_integral(lambda u: law.kernel_sf(t, 0.0, u) * np.exp(-h * u))
        B = first - _negative_part(law, t, h, wbar_profile)
    if not (B > 0 and math.isfinite(B)):
        raise RegularityError(f"B_bar(X, t) = {B} at t={t} is not positive")
    return B


def default_profile_grid(law, t, h):
    """Grid used when a two-sided law needs a profile and none is given."""
    from .models import KernelMeasure

    mean = KernelMeasure(law, t, -h).mean()
    step = min(DEFAULT_PROFILE_STEP, mean / 20.0)
    x_max = max(DEFAULT_PROFILE_XMAX, 40.0 * mean)
    from .renewal import Grid

    return Grid(x_max, step)


def prefactor(law, t, h=None, variant="standard", profile=None, cfg=DEFAULT_CONFIG):
    """Assemble :class:`Prefactor`; builds a profile for two-sided laws if needed."""
    if variant not in ("standard", "first_passage"):
        raise ValueError(f"unknown prefactor variant {variant!r}")
    if h is None:
        h = solve_h(law, t, cfg)
    denom = law.tilted_moment(t, -h, 1, 0)
    if not (denom > 0 and math.isfinite(denom)):
        raise RegularityError(f"E[X exp(tY - hX)] = {denom} is not positive")
    fp = variant == "first_passage"
    if not law.x_nonneg and profile is None:
        from .renewal import mgf_profile

        profile = mgf_profile(law, t, default_profile_grid(law, t, h), h=h, first_passage=fp)
    if fp:
        B = prefactor_B_bar(law, t, h, profile)
    else:
        B = prefactor_B(law, t, h, profile)
    return Prefactor(t=float(t), h=h, B=B, denom=denom, variant=variant)


# ---------------------------------------------------------------------------
# tail approximations
# ---------------------------------------------------------------------------


def _tilt(law, c, x, cfg):
    if not x > 0:
        raise ValueError("x must be positive")
    tau = solve_tau(law, c, cfg)
    if not tau > 0:
        raise RegimeError(f"tau = {tau:.6g} for c = {c}; the tail approximation needs tau > 0")
    h = solve_h(law, tau, cfg)
    h1, h2 = rate_derivatives(law, tau, h)
    return tau, h, h1, h2


def _assemble(law, c, x, regime, lattice, variant, profile, cfg, shift=(0.0, 0.0)):
    tau, h, h1, h2 = _tilt(law, c, x, cfg)
    pref = prefactor(law, tau, h, variant=variant, profile=profile, cfg=cfg)
    phi = pref.phi
    hstar = tau * h1 - h
    comp = {
        "log_prefactor": math.log(phi),
        "gaussian": -0.5 * math.log(2.0 * math.pi * x * h2),
        "exponent": -x * hstar,
        "B": pref.B,
        "denom": pref.denom,
        "h1": h1,
    }
    if lattice:
        d = float(law.y_span)
        frac = frac_up(x * c / d)
        corr = -d * tau * frac - math.log(-math.expm1(-tau * d))
        comp.update({"span": d, "frac": frac, "lattice_correction": corr, "tilt_factor": math.log(d) + corr})
    else:
        comp["tilt_factor"] = -math.log(tau)
    log_prob = comp["log_prefactor"] + comp["tilt_factor"] + comp["gaussian"] + comp["exponent"]
    a, b = shift
    if regime == "shifted":
        comp["shift"] = a * h - b * tau
        comp["a"], comp["b"] = a, b
        log_prob = log_prob + comp["shift"]
    return TailApprox(
        c=float(c),
        x=float(x),
        tau=tau,
        h=h,
        h2=h2,
        hstar=hstar,
        log_prob=log_prob,
        regime=regime,
        prefactor=phi,
        components=comp,
    )


def tail_nonlattice(law, c, x, profile=None, allow_lattice=False, cfg=DEFAULT_CONFIG):
    """``Pr{W(x) >= cx}`` for nonlattice rewards.

    Parameters
    ----------
    law : JointLaw
    c : float
        Slope; must satisfy ``h'(tau) = c`` with ``tau > 0``.
    x : float
    profile : RenewalProfile, optional
        Renewal profile of ``M_u(tau)`` for two-sided ``X``.
    allow_lattice : bool
        Apply the nonlattice form to a lattice law anyway.

    Returns
    -------
    TailApprox
    """
    if law.y_span is not None and not allow_lattice:
        raise RegimeError(f"{law.kind} has lattice rewards (span {law.y_span}); use tail_lattice")
    return _assemble(law, c, x, "nonlattice", False, "standard", profile, cfg)


def tail_lattice(law, c, x, profile=None, cfg=DEFAULT_CONFIG):
    """``Pr{W(x) >= cx}`` for rewards on the lattice ``d Z``."""
    if law.y_span is None:
        raise RegimeError(f"{law.kind} has no lattice span")
    return _assemble(law, c, x, "lattice", True, "standard", profile, cfg)


def tail_shifted(law, c, x, a, b, profile=None, allow_lattice=False, cfg=DEFAULT_CONFIG):
    """``Pr{W(x + a) >= cx + b}``: the nonlattice form times ``exp(a h - b tau)``."""
    if law.y_span is not None and not allow_lattice:
        raise RegimeError(f"{law.kind} has lattice rewards; the shifted form is nonlattice only")
    return _assemble(law, c, x, "shifted", False, "standard", profile, cfg, shift=(float(a), float(b)))


def tail_first_passage(law, c, x, profile=None, cfg=DEFAULT_CONFIG):
    """``Pr{W_bar(x) >= cx}`` where ``W_bar`` includes the overshooting epoch.

    Uses the lattice correction when the rewards are lattice.

    Raises
    ------
    UnsupportedModelError
        If ``E[exp(tY)]`` is not finite for every ``t``.
    """
    if not law.y_mgf_finite:
        raise UnsupportedModelError(f"{law.kind}: first passage needs E[exp(tY)] finite for all t")
    out = _assemble(law, c, x, "first_passage", law.y_span is not None, "first_passage", profile, cfg)
    out.components["base_regime"] = "lattice" if law.y_span is not None else "nonlattice"
    return out


def tail_auto(law, c, x, regime="auto", shift=None, profile=None, cfg=DEFAULT_CONFIG):
    """Dispatch on ``regime`` (``auto`` picks lattice when the law has a span)."""
    if shift is not None and any(shift):
        if regime in ("auto", "nonlattice"):
            return tail_shifted(law, c, x, shift[0], shift[1], profile, allow_lattice=regime == "nonlattice", cfg=cfg)
        raise RegimeError(f"shifts are only defined for the nonlattice form, not {regime!r}")
    if regime == "auto":
        regime = "lattice" if law.y_span is not None else "nonlattice"
    if regime == "lattice":
        return tail_lattice(law, c, x, profile, cfg)
    if regime == "nonlattice":
        return tail_nonlattice(law, c, x, profile, allow_lattice=True, cfg=cfg)
    if regime in ("first-passage", "first_passage"):
        return tail_first_passage(law, c, x, profile, cfg)
    raise ConfigurationError(f"unknown regime {regime!r}")


def lattice_factor(tau, d, frac):
    """Lattice replacement for ``1 / tau``: ``d exp(-d tau frac) / (1 - exp(-tau d))``."""
    return d * math.exp(-d * tau * frac) / (-math.expm1(-tau * d))
