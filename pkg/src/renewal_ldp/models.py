"""Joint laws of an epoch duration ``X`` and its reward ``Y``.

Every model exposes the joint transform ``E[exp(tY + sX)]``, the low-order
tilted moments ``E[X^i Y^j exp(tY + sX)]``, the conditional transform
``g_x(t) = E[exp(tY) | X = x]``, the tail of ``X`` and samplers for both the
base law and the exponentially tilted law

    P_t(dx, dy) = exp(t y - h x) P(dx, dy),   h = h(t).

Divergent expectations are reported as ``math.inf`` rather than raised,
because the root finder deliberately probes outside the domain of the
transform.

Capability flags (``x_nonneg``, ``y_span``, ``y_mgf_finite``), the decay
exponent ``beta_x`` of ``Pr{X > x}`` and an admissible ``t_range`` travel
with each model as plain class or instance attributes.
"""

import abc
import math
import warnings

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from ._numerics import interval_integrals, poly_exp_tail
from .errors import DomainError, QuadratureError, UnsupportedTiltError
from .marginals import Exponential, Gamma

QUAD_EPSREL = 1e-13
QUAD_LIMIT = 200
RATE_CHECK_TOL = 1e-6


def _check_ij(i, j):
    if i not in (0, 1, 2) or j not in (0, 1, 2) or i + j > 2:
        raise ValueError(f"tilted moments need i, j in {{0,1,2}} with i+j <= 2, got ({i}, {j})")


def _scalar_or_array(x, out):
    return float(np.reshape(out, -1)[0]) if np.ndim(x) == 0 else out


class JointLaw(abc.ABC):
    """Base class for the joint law of ``(X, Y)``."""

    kind = "abstract"
    x_nonneg = True
    y_span = None
    y_mgf_finite = False
    beta_x = -math.inf
    t_range = (-math.inf, math.inf)
    scale = 1.0
    x_lower = 0.0
    breakpoints = ()

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    @abc.abstractmethod
    def params(self):
        """Model parameters as a plain dict (used in reports)."""

    def capabilities(self):
        return {
            "kind": self.kind,
            "params": self.params(),
            "x_nonneg": self.x_nonneg,
            "y_span": self.y_span,
            "y_mgf_finite": self.y_mgf_finite,
            "beta_x": self.beta_x,
            "t_range": list(self.t_range),
            "closed_form_rate": self.closed_form_rate(1e-3) is not None,
        }

    def closed_form_rate(self, t):
        """Analytic ``h(t)`` when the model has one, else ``None``."""
        return None

    def closed_form_prefactor(self, t):
        """Analytic prefactor ``phi(t)`` when the model has one, else ``None``."""
        return None

    # --- transforms ---------------------------------------------------
    def mgf(self, t, s):
        """E[exp(tY + sX)] in ``(0, inf]``."""
        return self.tilted_moment(t, s, 0, 0)

    @abc.abstractmethod
    def tilted_moment(self, t, s, i, j):
        """E[X**i Y**j exp(tY + sX)] for ``i + j <= 2``."""

    @abc.abstractmethod
    def conditional_mgf(self, t, x):
        """g_x(t) = E[exp(tY) | X = x]."""

    @abc.abstractmethod
    def tail_x(self, x):
        """Pr{X > x}."""

    def mean_x(self):
        return self.tilted_moment(0.0, 0.0, 1, 0)

    def second_moment_x(self):
        return self.tilted_moment(0.0, 0.0, 2, 0)

    # --- the measure exp(s x) g_x(t) F(dx) ----------------------------
    @abc.abstractmethod
    def kernel_density(self, t, s, x):
        """Lebesgue density of ``exp(s x) g_x(t) F(dx)``."""

    def kernel_cdf(self, t, s, x):
        """Mass of ``exp(s u) g_u(t) F(du)`` on ``(-inf, x]``.

        The default integrates :meth:`kernel_density` cell by cell from
        ``x_lower``; subclasses with closed forms override it.
        """
        if not math.isfinite(self.x_lower):
            raise NotImplementedError("numeric kernel_cdf needs a finite lower support bound")
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        order = np.argsort(xs)
        pts = np.maximum(xs[order], self.x_lower)
        edges = np.concatenate([[self.x_lower], pts])
        cells = interval_integrals(lambda u: self.kernel_density(t, s, u), edges, self.breakpoints)
        out = np.empty_like(xs)
        out[order] = np.cumsum(cells)
        return _scalar_or_array(x, out)

    def kernel_sf(self, t, s, x):
        """Mass of ``exp(s u) g_u(t) F(du)`` on ``(x, inf)``."""
        total = self.mgf(t, s)
        return total - self.kernel_cdf(t, s, x)

    def tilted_marginal(self, t, h):
        """Law of ``X`` under ``P_t`` (a probability when ``h = h(t)``)."""
        return KernelMeasure(self, t, -h)

    # --- sampling -----------------------------------------------------
    @abc.abstractmethod
    def sample(self, rng, size=None):
        """Draw ``(x, y)`` from the joint law."""

    @abc.abstractmethod
    def sample_tilted(self, t, h, rng, size=None):
        """Draw ``(x, y)`` from ``P_t`` with ``h = h(t)`` supplied by the caller."""

    def _check_tilt(self, t, h):
        if t == 0.0 and h == 0.0:
            return
        resid = self.mgf(t, -h) - 1.0
        if not abs(resid) <= RATE_CHECK_TOL:
            raise ValueError(
                f"E[exp(tY - hX)] - 1 = {resid:.3g} at t={t}, h={h}; pass h = h(t)"
            )


class KernelMeasure:
    """The measure ``exp(s x) g_x(t) F(dx)`` seen as a law on the real line.

    With ``s = -h(t)`` this is the X-marginal of the tilted law and has
    unit mass; with ``s = 0`` it is the kernel of the unnormalised renewal
    equation for ``M_x(t)``.
    """

    def __init__(self, law, t, s):
        self.law = law
        self.t = float(t)
        self.s = float(s)

    def __repr__(self):
        return f"KernelMeasure({self.law!r}, t={self.t}, s={self.s})"

    def cdf(self, x):
        return self.law.kernel_cdf(self.t, self.s, x)

    def sf(self, x):
        return self.law.kernel_sf(self.t, self.s, x)

    def pdf(self, x):
        return self.law.kernel_density(self.t, self.s, x)

    def total_mass(self):
        return self.law.mgf(self.t, self.s)

    def mean(self):
        return self.law.tilted_moment(self.t, self.s, 1, 0) / self.total_mass()

    def support(self):
        return (self.law.x_lower, math.inf)

    def rvs(self, size=None, random_state=None):
        rng = np.random.default_rng(random_state)
        return self.law.sample_tilted(self.t, -self.s, rng, size)[0]


# ---------------------------------------------------------------------------
# Poisson epochs
# ---------------------------------------------------------------------------


class PiecewisePolynomial:
    """Nonnegative intensity ``f`` given as polynomial pieces.

    ``pieces`` is a sequence of ``(start, coeffs)``; on ``[start_k,
    start_{k+1})`` the intensity is ``sum_i coeffs[i] * (x - start_k)**i``.
    The first piece starts at 0 and the last one is constant and extends to
    infinity, so ``F(x)/x`` has a finite limit ``nu``.
    """

    def __init__(self, pieces):
        pieces = [(float(a), [float(c) for c in np.atleast_1d(cs)]) for a, cs in pieces]
        if not pieces:
            raise ValueError("need at least one piece")
        starts = np.array([a for a, _ in pieces])
        if starts[0] != 0.0 or np.any(np.diff(starts) <= 0):
            raise ValueError("piece starts must begin at 0 and increase strictly")
        last = Polynomial(pieces[-1][1]).trim()
        if last.degree() > 0:
            raise ValueError("the last piece must be constant")
        self.pieces = pieces
        self.starts = starts
        self.polys = [Polynomial(cs) for _, cs in pieces]
        self.antis = [p.integ() for p in self.polys]
        cum = [0.0]
        for k in range(len(pieces) - 1):
            cum.append(cum[-1] + self.antis[k](starts[k + 1] - starts[k]))
        self.cum = np.array(cum)
        self.nu = float(last.coef[0])
        if self.nu < 0:
            raise ValueError("intensity must be nonnegative")
        for k in range(len(pieces) - 1):
            lo, hi = self._piece_extremes(self.polys[k], starts[k + 1] - starts[k])
            if lo < -1e-12:
                raise ValueError(f"intensity is negative on piece {k}")
        if self.cum[-1] <= 0 and self.nu == 0:
            raise ValueError("intensity must have positive integral")

    @staticmethod
    def _piece_extremes(poly, length):
        cand = [0.0, length]
        deriv = poly.deriv()
        if deriv.degree() >= 1:
            for r in deriv.roots():
                if abs(r.imag) < 1e-12 and 0 < r.real < length:
                    cand.append(r.real)
        vals = [poly(c) for c in cand]
        return min(vals), max(vals)

    def to_spec(self):
        return [{"start": a, "coeffs": cs} for a, cs in self.pieces]

    def _locate(self, x):
        return np.clip(np.searchsorted(self.starts, x, side="right") - 1, 0, len(self.starts) - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self._locate(x)
        out = np.empty(x.shape)
        for idx in np.unique(k):
            m = k == idx
            out[m] = self.polys[idx](x[m] - self.starts[idx])
        return out if out.ndim else float(out)

    def integral(self, x):
        """F(x) = integral of f over [0, x] (x >= 0)."""
        x = np.asarray(x, dtype=float)
        k = self._locate(x)
        out = np.empty(x.shape)
        for idx in np.unique(k):
            m = k == idx
            out[m] = self.cum[idx] + self.antis[idx](x[m] - self.starts[idx])
        return out if out.ndim else float(out)

    def excess_range(self):
        """(min, max) of ``F(x) - nu x`` over ``x >= 0``."""
        lo = hi = 0.0
        for k in range(len(self.starts) - 1):
            length = self.starts[k + 1] - self.starts[k]
            g = self.antis[k] + Polynomial([self.cum[k] - self.nu * self.starts[k], -self.nu])
            a, b = self._piece_extremes(g, length)
            lo, hi = min(lo, a), max(hi, b)
        return lo, hi


class PoissonEpoch(JointLaw):
    """``X ~ Exp(1)`` and ``Y | X ~ Poisson(F(X))`` with ``F' = f``.

    Transforms combine adaptive quadrature on the bounded pieces of ``f``
    with a closed-form tail on the final constant piece.
    """

    kind = "poisson-epoch"
    y_span = 1.0
    beta_x = -1.0

    def __init__(self, f):
        if not isinstance(f, PiecewisePolynomial):
            f = PiecewisePolynomial(f)
        self.f = f
        self.breakpoints = tuple(f.starts[1:])
        self.y_mgf_finite = f.nu == 0.0

    def params(self):
        return {"f": self.f.to_spec()}

    def _integrand(self, t, s, i, j):
        et = math.exp(t)
        k = math.expm1(t)
        F = self.f.integral

        def fn(x):
            Fx = F(x)
            lam = Fx * et
            if j == 0:
                m = 1.0
            elif j == 1:
                m = lam
            else:
                m = lam + lam * lam
            return x**i * m * math.exp(Fx * k + (s - 1.0) * x)

        return fn

    def _tail(self, t, s, i, j, b):
        et = math.exp(t)
        k = math.expm1(t)
        nu = self.f.nu
        rate = 1.0 - s - nu * k
        if rate <= 0:
            return math.inf
        Fb = float(self.f.integral(b))
        xpoly = Polynomial([b, 1.0])
        lam = Polynomial([et * Fb, et * nu])
        m = Polynomial([1.0]) if j == 0 else (lam if j == 1 else lam + lam * lam)
        q = xpoly**i * m
        expo = Fb * k + (s - 1.0) * b
        if expo > 700:
            return math.inf
        return math.exp(expo) * poly_exp_tail(q.coef, rate)

    def tilted_moment(self, t, s, i, j):
        _check_ij(i, j)
        starts = self.f.starts
        tail = self._tail(t, s, i, j, starts[-1])
        if math.isinf(tail):
            return math.inf
        total = tail
        fn = self._integrand(t, s, i, j)
        for a, b in zip(starts[:-1], starts[1:]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err, info = integrate.quad(
                    fn, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1
                )[:3]
            if not math.isfinite(val):
                return math.inf
            if err > 1e-10 * max(abs(val), 1e-300) and err > 1e-300:
                raise QuadratureError(
                    f"quadrature on [{a}, {b}] did not converge (estimate {val}, error {err})",
                    estimate=total + val,
                    abserr=err,
                )
            total += val
        return total

    def conditional_mgf(self, t, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("X is supported on [0, inf)")
        out = np.exp(self.f.integral(x) * math.expm1(t))
        return _scalar_or_array(x, out)

    def tail_x(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 1.0, np.exp(-np.maximum(x, 0.0)))
        return _scalar_or_array(x, out)

    def kernel_density(self, t, s, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        with np.errstate(over="ignore"):
            out = np.where(x >= 0, np.exp(self.f.integral(xp) * math.expm1(t) + (s - 1.0) * xp), 0.0)
        return _scalar_or_array(x, out)

    def kernel_sf(self, t, s, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        b = self.f.starts[-1]
        out = np.empty_like(xs)
        for n, xv in enumerate(xs):
            lo = max(xv, 0.0)
            if lo >= b:
                out[n] = self._tail(t, s, 0, 0, lo)
            else:
                head = interval_integrals(
                    lambda u: self.kernel_density(t, s, u), [lo, b], self.breakpoints
                )[0]
                out[n] = head + self._tail(t, s, 0, 0, b)
        return _scalar_or_array(x, out)

    def sample(self, rng, size=None):
        x = rng.exponential(1.0, size=size)
        y = np.asarray(rng.poisson(self.f.integral(x)), dtype=float)
        return (x, y) if size is not None else (float(x), float(y))

    def sample_tilted(self, t, h, rng, size=None):
        self._check_tilt(t, h)
        k = math.expm1(t)
        rate = h + 1.0 - self.f.nu * k
        if not rate > 0:
            raise UnsupportedTiltError(
                f"{self.kind}: tilted X-marginal is not integrable at t={t} (rate {rate:.3g})"
            )
        lo, hi = self.f.excess_range()
        bound = k * (hi if k >= 0 else lo)
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            batch = max(16, int(need * 1.5))
            cand = rng.exponential(1.0 / rate, size=batch)
            excess = self.f.integral(cand) - self.f.nu * cand
            accept = rng.random(batch) < np.exp(k * excess - bound)
            take = cand[accept][:need]
            out[filled : filled + take.size] = take
            filled += take.size
        x = out.reshape(size) if size is not None else out
        y = rng.poisson(self.f.integral(x) * math.exp(t)).astype(float)
        return (x, y) if size is not None else (float(x[0]), float(y[0]))


class PoissonEpochUnit(PoissonEpoch):
    """Poisson epochs with unit intensity: ``h(t) = e^t - 1``."""

    kind = "poisson-epoch-unit"

    def __init__(self):
        super().__init__([(0.0, [1.0])])

    def params(self):
        return {}

    def closed_form_rate(self, t):
        return math.expm1(t)

    def closed_form_prefactor(self, t):
        return math.exp(-t)

    def kernel_cdf(self, t, s, x):
        # density exp(-r x) on x >= 0 with r = 2 - e^t - s
        r = 2.0 - math.exp(t) - s
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        if r == 0.0:
            out = xp
        else:
            with np.errstate(over="ignore"):
                out = -np.expm1(-r * xp) / r
        return _scalar_or_array(x, out)

    def kernel_sf(self, t, s, x):
        r = 2.0 - math.exp(t) - s
        x = np.asarray(x, dtype=float)
        if r <= 0:
            out = np.full(x.shape, math.inf)
        else:
            out = np.exp(-r * np.maximum(x, 0.0)) / r
        return _scalar_or_array(x, out)

    def sample_tilted(self, t, h, rng, size=None):
        self._check_tilt(t, h)
        rate = h + 2.0 - math.exp(t)
        if not rate > 0:
            raise UnsupportedTiltError(f"{self.kind}: tilted rate {rate:.3g} is not positive")
        x = rng.exponential(1.0 / rate, size=size)
        y = np.asarray(rng.poisson(np.asarray(x) * math.exp(t)), dtype=float)
        return (x, y) if size is not None else (float(x), float(y))


# ---------------------------------------------------------------------------
# Threshold rewards
# ---------------------------------------------------------------------------


class Threshold(JointLaw):
    """``X ~ Exp(1)`` and ``Y = 1{X > M}``: counts long epochs."""

    kind = "threshold"
    y_span = 1.0
    y_mgf_finite = True
    beta_x = -1.0

    def __init__(self, M=1.0):
        if not M > 0:
            raise ValueError("threshold M must be positive")
        self.M = float(M)
        self.breakpoints = (self.M,)

    def params(self):
        return {"M": self.M}

    def tilted_moment(self, t, s, i, j):
        _check_ij(i, j)
        r = 1.0 - s
        if r <= 0:
            return math.inf
        rM = r * self.M
        log_scale = special.gammaln(i + 1) - (i + 1) * math.log(r)
        upper = math.exp(t + log_scale) * special.gammaincc(i + 1, rM)
        if j >= 1:
            return upper
        lower = math.exp(log_scale) * special.gammainc(i + 1, rM)
        return lower + upper

    def conditional_mgf(self, t, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("X is supported on [0, inf)")
        out = np.where(x > self.M, math.exp(t), 1.0)
        return _scalar_or_array(x, out)

    def tail_x(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 1.0, np.exp(-np.maximum(x, 0.0)))
        return _scalar_or_array(x, out)

    def kernel_density(self, t, s, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        with np.errstate(over="ignore"):
            out = np.where(x >= 0, np.exp(np.where(x > self.M, t, 0.0) + (s - 1.0) * xp), 0.0)
        return _scalar_or_array(x, out)

    def kernel_cdf(self, t, s, x):
        r = 1.0 - s
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for n, xv in enumerate(xs):
            xv = max(xv, 0.0)
            if xv <= self.M:
                out[n] = _int_exp(r, 0.0, xv)
            else:
                out[n] = _int_exp(r, 0.0, self.M) + math.exp(t) * _int_exp(r, self.M, xv)
        return _scalar_or_array(x, out)

    def kernel_sf(self, t, s, x):
        r = 1.0 - s
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for n, xv in enumerate(xs):
            xv = max(xv, 0.0)
            if r <= 0:
                out[n] = math.inf
            elif xv < self.M:
                out[n] = _int_exp(r, xv, self.M) + math.exp(t - r * self.M) / r
            else:
                out[n] = math.exp(t - r * xv) / r
        return _scalar_or_array(x, out)

    def sample(self, rng, size=None):
        x = rng.exponential(1.0, size=size)
        y = (np.asarray(x) > self.M).astype(float)
        return (x, y) if size is not None else (float(x), float(y))

    def sample_tilted(self, t, h, rng, size=None):
        self._check_tilt(t, h)
        r = 1.0 + h
        if not r > 0:
            raise UnsupportedTiltError(f"{self.kind}: tilted rate 1 + h = {r:.3g} is not positive")
        below = _int_exp(r, 0.0, self.M)
        above = math.exp(t - r * self.M) / r
        p_below = below / (below + above)
        n = 1 if size is None else int(np.prod(size))
        u = rng.random(n)
        v = rng.random(n)
        is_below = u < p_below
        # truncated exponential on [0, M] by inversion, shifted exponential above M
        x_below = -np.log1p(v * np.expm1(-r * self.M)) / r
        x_above = self.M - np.log1p(-v) / r
        x = np.where(is_below, x_below, x_above)
        y = (~is_below).astype(float)
        if size is None:
            return float(x[0]), float(y[0])
        return x.reshape(size), y.reshape(size)


def _int_exp(r, a, b):
    length = b - a
    if length <= 0:
        return 0.0
    if r == 0.0:
        return length
    if r * a > 745:
        return 0.0
    return math.exp(-r * a) * (-math.expm1(-r * length)) / r


# ---------------------------------------------------------------------------
# Gaussian steps with sign rewards
# ---------------------------------------------------------------------------


class GaussSign(JointLaw):
    """``X ~ N(0, 1)`` and ``Y = 1{X >= a} - 1{X < a}``.

    Two-sided durations: ``h(t) < 0`` on the admissible range and the
    prefactor needs a renewal profile.
    """

    kind = "gauss-sign"
    x_nonneg = False
    y_span = 1.0
    y_mgf_finite = True
    beta_x = -math.inf
    x_lower = -math.inf

    def __init__(self, a=1.0):
        if not a > 0:
            raise ValueError("gauss-sign needs a > 0")
        self.a = float(a)
        self.breakpoints = (self.a,)
        self.t_range = (0.0, math.log(special.ndtr(self.a) / special.ndtr(-self.a)))

    def params(self):
        return {"a": self.a}

    def tilted_moment(self, t, s, i, j):
        _check_ij(i, j)
        c = self.a - s
        # partial moments of U ~ N(0,1) above / below c
        q_up, q_lo = special.ndtr(-c), special.ndtr(c)
        dens = math.exp(-0.5 * c * c) / math.sqrt(2 * math.pi)
        up = (q_up, dens, c * dens + q_up)
        lo = (q_lo, -dens, q_lo - c * dens)

        def partial(mom):
            # E[(s + U)^i ; region]
            if i == 0:
                return mom[0]
            if i == 1:
                return s * mom[0] + mom[1]
            return s * s * mom[0] + 2 * s * mom[1] + mom[2]

        sign_lo = (-1.0) ** j
        log_pref = 0.5 * s * s
        if i == 0:
            # log-space keeps the transform finite as long as it is representable
            la = t + special.log_ndtr(-c)
            lb = -t + special.log_ndtr(c)
            val = np.logaddexp(la, lb) + log_pref if j != 1 else None
            if val is not None:
                return math.exp(val) if val < 709 else math.inf
        if log_pref > 709:
            return math.inf
        pre = math.exp(log_pref)
        return pre * (math.exp(t) * partial(up) + sign_lo * math.exp(-t) * partial(lo))

    def conditional_mgf(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.a, math.exp(t), math.exp(-t))
        return _scalar_or_array(x, out)

    def tail_x(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(x, special.ndtr(-x))

    def kernel_density(self, t, s, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = np.exp(
                np.where(x >= self.a, t, -t) + 0.5 * s * s - 0.5 * (x - s) ** 2
            ) / math.sqrt(2 * math.pi)
        return _scalar_or_array(x, out)

    def _pieces(self, t, s):
        pref = math.exp(0.5 * s * s)
        return pref * math.exp(-t), pref * math.exp(t), self.a - s

    def kernel_cdf(self, t, s, x):
        wlo, wup, c = self._pieces(t, s)
        z = np.asarray(x, dtype=float) - s
        below = wlo * special.ndtr(np.minimum(z, c))
        # mass of N(0,1) on [c, z] for z > c, via whichever tail is smaller
        mid = np.where(
            c > 0,
            special.ndtr(-c) - special.ndtr(-np.maximum(z, c)),
            special.ndtr(np.maximum(z, c)) - special.ndtr(c),
        )
        out = below + wup * np.maximum(mid, 0.0)
        return _scalar_or_array(x, out)

    def kernel_sf(self, t, s, x):
        wlo, wup, c = self._pieces(t, s)
        z = np.asarray(x, dtype=float) - s
        above = wup * special.ndtr(-np.maximum(z, c))
        mid = np.where(
            c > 0,
            special.ndtr(-np.minimum(z, c)) - special.ndtr(-c),
            special.ndtr(c) - special.ndtr(np.minimum(z, c)),
        )
        out = above + wlo * np.maximum(mid, 0.0)
        return _scalar_or_array(x, out)

    def sample(self, rng, size=None):
        x = rng.standard_normal(size=size)
        y = np.where(np.asarray(x) >= self.a, 1.0, -1.0)
        return (x, y) if size is not None else (float(x), float(y))

    def sample_tilted(self, t, h, rng, size=None):
        self._check_tilt(t, h)
        # X-marginal: N(-h, 1) reweighted by e^{+t} above a and e^{-t} below
        wlo, wup, c = self._pieces(t, -h)
        m_lo = wlo * special.ndtr(c)
        m_up = wup * special.ndtr(-c)
        p_up = m_up / (m_lo + m_up)
        n = 1 if size is None else int(np.prod(size))
        u = rng.random(n)
        v = rng.random(n)
        is_up = u < p_up
        z_up = -special.ndtri(v * special.ndtr(-c))
        z_lo = special.ndtri(v * special.ndtr(c))
        x = -h + np.where(is_up, z_up, z_lo)
        y = np.where(is_up, 1.0, -1.0)
        if size is None:
            return float(x[0]), float(y[0])
        return x.reshape(size), y.reshape(size)


# ---------------------------------------------------------------------------
# Independent durations and rewards
# ---------------------------------------------------------------------------


class IndependentProduct(JointLaw):
    """``X`` and ``Y`` independent, each from the gamma family."""

    kind = "independent-product"

    def __init__(self, x_law=None, y_law=None):
        self.x_law = x_law if x_law is not None else Exponential(1.0)
        self.y_law = y_law if y_law is not None else Exponential(1.0)
        for law in (self.x_law, self.y_law):
            if not isinstance(law, Gamma):
                raise TypeError("independent-product components must be gamma-family marginals")
        self.t_range = (-math.inf, self.y_law.rate)
        self.beta_x = -self.x_law.rate
        self.scale = self.x_law.mean()

    def params(self):
        return {"x_law": self.x_law.spec(), "y_law": self.y_law.spec()}

    def closed_form_rate(self, t):
        gy = self.y_law
        gx = self.x_law
        if t >= gy.rate:
            return None
        ratio = gy.shape / gx.shape
        return gx.rate * math.expm1(-ratio * math.log1p(-t / gy.rate))

    def tilted_moment(self, t, s, i, j):
        _check_ij(i, j)
        mx = self.x_law.moment_tilted(s, i)
        my = self.y_law.moment_tilted(t, j)
        if math.isinf(mx) or math.isinf(my):
            return math.inf
        return mx * my

    def conditional_mgf(self, t, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("X is supported on [0, inf)")
        out = np.full(x.shape, self.y_law.mgf(t))
        return _scalar_or_array(x, out)

    def tail_x(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(x, np.where(x < 0, 1.0, self.x_law.sf(np.maximum(x, 0.0))))

    def kernel_density(self, t, s, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self.y_law.mgf(t) * np.exp(s * np.maximum(x, 0.0)) * self.x_law.pdf(x)
        return _scalar_or_array(x, out)

    def kernel_cdf(self, t, s, x):
        if s >= self.x_law.rate:
            return super().kernel_cdf(t, s, x)
        mass = self.y_law.mgf(t) * self.x_law.mgf(s)
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(x, mass * self.x_law.tilted(s).cdf(x))

    def kernel_sf(self, t, s, x):
        x = np.asarray(x, dtype=float)
        if s >= self.x_law.rate:
            return _scalar_or_array(x, np.full(x.shape, math.inf))
        mass = self.y_law.mgf(t) * self.x_law.mgf(s)
        return _scalar_or_array(x, mass * self.x_law.tilted(s).sf(x))

    def sample(self, rng, size=None):
        x = self.x_law.rvs(size=size, random_state=rng)
        y = self.y_law.rvs(size=size, random_state=rng)
        return (x, y) if size is not None else (float(x), float(y))

    def sample_tilted(self, t, h, rng, size=None):
        self._check_tilt(t, h)
        if -h >= self.x_law.rate or t >= self.y_law.rate:
            raise UnsupportedTiltError(f"{self.kind}: tilt (t={t}, h={h}) outside the MGF domain")
        x = self.x_law.tilted(-h).rvs(size=size, random_state=rng)
        y = self.y_law.tilted(t).rvs(size=size, random_state=rng)
        return (x, y) if size is not None else (float(x), float(y))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

MODELS = {
    "poisson-epoch": PoissonEpoch,
    "poisson-epoch-unit": PoissonEpochUnit,
    "threshold": Threshold,
    "gauss-sign": GaussSign,
    "independent-product": IndependentProduct,
}

DESCRIPTIONS = {
    "poisson-epoch": "X ~ Exp(1), Y | X ~ Poisson(F(X)) with piecewise-polynomial intensity f",
    "poisson-epoch-unit": "poisson-epoch with f = 1; h(t) = e^t - 1",
    "threshold": "X ~ Exp(1), Y = 1{X > M}",
    "gauss-sign": "X ~ N(0,1), Y = 1{X >= a} - 1{X < a}",
    "independent-product": "X and Y independent gamma-family laws",
}


def default_instances():
    """One representative instance of each built-in model."""
    return [
        PoissonEpoch([(0.0, [0.5, 0.5]), (2.0, [1.5])]),
        PoissonEpochUnit(),
        Threshold(1.0),
        GaussSign(1.0),
        IndependentProduct(Exponential(1.0), Exponential(1.0)),
    ]
