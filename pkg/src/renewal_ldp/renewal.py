"""Grid solutions of renewal equations and renewal-density diagnostics.

The renewal equation

    Z(x) = z(x) + integral Z(x - u) p(du)

is discretised with exact cell masses of ``p`` (CDF differences) and the
trapezoid rule inside each cell. Laws on ``[0, inf)`` give a lower
triangular system solved by forward substitution; two-sided laws are solved
by Gauss-Seidel sweeps, with lags below ``-L`` dropped once ``p`` puts less
than ``1e-12`` there.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._parallel import run_blocks
from .errors import ConfigurationError, DomainError, RenewalDivergenceError
from .rate import DEFAULT_CONFIG, solve_h
from .rng import BLOCK_SIZE, block_layout, substream

TRUNC_MASS = 1e-12
SWEEP_TOL = 1e-12
DIVERGENCE_WINDOW = 50
MAX_SWEEPS = 20000


@dataclass(frozen=True)
class Grid:
    """Equispaced grid ``x_min, x_min + step, ...`` up to ``x_max``."""

    x_max: float
    step: float
    x_min: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError("grid step must be positive")
        if not self.x_max > self.x_min:
            raise ConfigurationError("grid x_max must exceed x_min")

    @property
    def n_points(self):
        return int(math.floor((self.x_max - self.x_min) / self.step + 1e-9)) + 1

    @property
    def x(self):
        return self.x_min + self.step * np.arange(self.n_points)


@dataclass
class RenewalProfile:
    """A solved renewal equation on a grid.

    ``values`` are the solution, possibly stored with an exponential factor
    removed: the solved function is ``values * exp(scale_rate * x)``.
    """

    grid: Grid
    values: np.ndarray
    limit_estimate: float | None = None
    decay_rate_estimate: float | None = None
    scale_rate: float = 0.0
    residual: float = math.nan
    sweeps: int = 0
    form: str = "direct"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise RenewalDivergenceError("profile has non-finite values")

    @property
    def x(self):
        return self.grid.x

    @property
    def unnormalized(self):
        """The solved function itself (may overflow to ``inf``)."""
        with np.errstate(over="ignore"):
            return self.values * np.exp(self.scale_rate * self.x)

    def log_unnormalized(self):
        with np.errstate(divide="ignore"):
            return np.log(self.values) + self.scale_rate * self.x

    def normalized_by(self, rate):
        """``solution * exp(-rate * x)`` computed without overflow."""
        return self.values * np.exp((self.scale_rate - rate) * self.x)

    def at(self, x):
        """Linear interpolation of ``values`` (flat beyond the ends)."""
        return np.interp(x, self.x, self.values)

    def to_csv(self, path=None):
        """Write ``x, value, normalized_value`` rows; return the text if no path."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "value", "normalized_value"])
        for xv, raw, norm in zip(self.x, self.unnormalized, self.values):
            writer.writerow([format(xv, ".17g"), format(raw, ".17g"), format(norm, ".17g")])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def _law_mean(p):
    mean = p.mean()
    return float(mean() if callable(mean) else mean)


def truncation_point(p, mass=TRUNC_MASS):
    """Smallest power-of-two ``L`` with ``p((-inf, -L)) < mass``."""
    L = 1.0
    for _ in range(60):
        if float(p.cdf(-L)) < mass:
            return L
        L *= 2.0
    raise ConfigurationError("left tail of the increment law is too heavy to truncate")


def _upper_cut(p, limit, mass=1e-16):
    U = 1.0
    while U < limit:
        if float(p.sf(U)) < mass:
            return U
        U *= 2.0
    return limit


def tail_limit(values, frac=0.1):
    m = max(1, int(round(frac * values.size)))
    return float(np.mean(values[-m:]))


def decay_fit(x, values, limit, frac=0.1):
    """Least-squares rate ``alpha`` in ``|values - limit| ~ C exp(-alpha x)``."""
    m = max(1, int(round(frac * values.size)))
    xs, vs = x[:-m], values[:-m]
    dev = np.abs(vs - limit)
    floor = 1e-13 * max(abs(limit), 1e-300)
    ok = dev > floor
    if ok.sum() < 3:
        return None
    slope = np.polyfit(xs[ok], np.log(dev[ok]), 1)[0]
    return float(-slope)


def _cell_masses(p, nodes):
    c = np.asarray(p.cdf(nodes), dtype=float)
    return np.diff(c), c


def solve_renewal(z, p, grid, tol=SWEEP_TOL, max_sweeps=MAX_SWEEPS, check_step=True, x_neg=None):
    """Solve ``Z = z + Z * p`` on ``grid``.

    Parameters
    ----------
    z : callable or array_like
        Forcing term; arrays must match the grid.
    p : law-like
        Increment measure exposing ``cdf``, ``support`` and ``mean``. It
        need not have unit mass.
    grid : Grid
        ``Z`` is taken to vanish below ``grid.x_min``. For a two-sided ``p``
        values above ``grid.x_max`` are held at the last node, so the grid
        should reach the flat part of the solution.
    tol : float
        Sup-norm stopping rule for the two-sided sweeps.
    x_neg : float, optional
        Two-sided only: drop increments below ``-x_neg``. Defaults to the
        smallest power of two with ``p((-inf, -x_neg)) < 1e-12``.

    Returns
    -------
    RenewalProfile
    """
    lower = p.support()[0]
    if check_step:
        mean = _law_mean(p)
        if not mean > 0:
            raise DomainError("increment law must have positive mean")
        if grid.step > mean / 20.0:
            raise ConfigurationError(
                f"grid step {grid.step} exceeds 1/20 of the increment mean {mean:.4g}"
            )
    if lower >= 0:
        return _solve_one_sided(z, p, grid)
    return _solve_two_sided(z, p, grid, tol, max_sweeps, x_neg)


def _forcing(z, xs):
    if callable(z):
        return np.asarray(z(xs), dtype=float) * np.ones_like(xs)
    zv = np.asarray(z, dtype=float)
    if zv.shape != xs.shape:
        raise ConfigurationError(f"forcing has {zv.size} values, grid has {xs.size}")
    return zv


def _finish(grid, values, residual, sweeps, form):
    limit = tail_limit(values)
    rate = decay_fit(grid.x, values, limit)
    return RenewalProfile(
        grid=grid,
        values=values,
        limit_estimate=limit,
        decay_rate_estimate=rate,
        residual=residual,
        sweeps=sweeps,
        form=form,
    )


def _solve_one_sided(z, p, grid):
    xs = grid.x
    zv = _forcing(z, xs)
    lags = xs - xs[0]
    m, c = _cell_masses(p, lags)
    a0 = float(c[0])
    Z = np.asarray(kernels.volterra_forward(zv, a0, m))
    residual = _residual_one_sided(Z, zv, a0, m)
    return _finish(grid, Z, residual, 1, "volterra")


def _residual_one_sided(Z, z, a0, m):
    n = Z.size
    if n == 1:
        return float(abs(Z[0] - z[0] - a0 * Z[0]))
    mpad = np.append(m, 0.0)
    w = np.empty(n)
    w[0] = 0.5 * mpad[0]
    w[1:] = 0.5 * (mpad[:-1] + mpad[1:])
    conv = np.convolve(Z, w)[:n]
    # the far-end node of each trapezoid sum carries only half its cell
    conv -= 0.5 * mpad * Z[0]
    res = Z - z - a0 * Z - conv
    return float(np.max(np.abs(res)))


def _solve_two_sided(z, p, grid, tol, max_sweeps, x_neg=None):
    xs = grid.x
    n = xs.size
    step = grid.step
    zv = _forcing(z, xs)
    L = int(math.ceil((truncation_point(p) if x_neg is None else x_neg) / step))
    U = int(math.ceil(_upper_cut(p, grid.x_max - grid.x_min) / step))
    lag_nodes = step * np.arange(-L, U + 1)
    m, _ = _cell_masses(p, lag_nodes)
    w = np.zeros(lag_nodes.size)
    w[:-1] += 0.5 * m
    w[1:] += 0.5 * m
    offset = L
    # Z vanishes below the origin, so the cell just past it must not lend
    # half its mass to Z[0]; this is removed through the forcing each sweep
    k_idx = np.arange(n) + offset
    edge = np.where(k_idx < m.size, 0.5 * m[np.minimum(k_idx, m.size - 1)], 0.0)
    Z = zv.copy()
    history = []
    sweeps = 0
    while True:
        z_eff = zv - edge * Z[0]
        change = kernels.gauss_seidel_sweep(Z, z_eff, w, offset)
        sweeps += 1
        scale = max(1.0, float(np.max(np.abs(Z))))
        history.append(change)
        if not math.isfinite(change):
            raise RenewalDivergenceError("renewal sweeps produced non-finite values")
        if change < tol * scale:
            break
        if len(history) > DIVERGENCE_WINDOW and change > history[-1 - DIVERGENCE_WINDOW]:
            raise RenewalDivergenceError(
                f"sweep change grew from {history[-1 - DIVERGENCE_WINDOW]:.3g} to {change:.3g} "
                f"over {DIVERGENCE_WINDOW} sweeps"
            )
        if sweeps >= max_sweeps:
            raise RenewalDivergenceError(f"no convergence after {sweeps} sweeps (change {change:.3g})")
    residual = _residual_two_sided(Z, zv - edge * Z[0], w, offset)
    return _finish(grid, Z, residual, sweeps, "gauss-seidel")


def _residual_two_sided(Z, z, w, offset):
    n = Z.size
    nw = w.size
    pad_right = max(0, offset)
    pad_left = max(0, nw - 1 - offset)
    Zp = np.concatenate([np.zeros(pad_left), Z, np.full(pad_right, Z[-1])])
    # acc[k] = sum_j w[j] Zp[k - j + offset + pad_left]
    full = np.convolve(Zp, w, mode="full")
    idx = np.arange(n) + offset + pad_left
    acc = full[idx]
    return float(np.max(np.abs(Z - z - acc)))


# ---------------------------------------------------------------------------
# MGF profiles
# ---------------------------------------------------------------------------


def mgf_profile(law, t, grid, form="auto", first_passage=False, h=None, cfg=DEFAULT_CONFIG):
    """Solve for ``M_x(t) = E[exp(t W(x))]`` on ``grid``.

    Parameters
    ----------
    law : JointLaw
    t : float
    grid : Grid
    form : {"auto", "normalized", "raw"}
        ``normalized`` solves for ``M_x(t) exp(-h(t) x)`` with the tilted
        kernel; ``raw`` solves for ``M_x(t)`` with the kernel
        ``g_u(t) F(du)`` and falls back to the normalised form if values
        overflow. ``auto`` picks ``raw`` at ``t = 0`` and ``normalized``
        otherwise.
    first_passage : bool
        Solve for ``E[exp(t W_bar(x))]`` instead, where ``W_bar`` includes
        the reward of the epoch that crosses ``x``.
    h : float, optional
        Precomputed ``h(t)``.

    Returns
    -------
    RenewalProfile
        ``values`` holds the normalised profile with ``scale_rate = h`` in
        the normalised form, so ``limit_estimate`` estimates the prefactor.
    """
    if form not in {"auto", "normalized", "raw"}:
        raise ConfigurationError(f"unknown form {form!r}")
    t = float(t)
    if h is None:
        h = solve_h(law, t, cfg)
    if form == "auto":
        form = "raw" if t == 0.0 else "normalized"
    if form == "raw":
        prof = _mgf_raw(law, t, grid, first_passage)
        if prof is not None:
            prof.meta.update({"t": t, "h": h, "first_passage": first_passage})
            return prof
        warnings.warn("raw MGF recursion overflowed; using the normalised form", RuntimeWarning)
    prof = _mgf_normalized(law, t, h, grid, first_passage)
    prof.meta.update({"t": t, "h": h, "first_passage": first_passage})
    return prof


def _forcing_term(law, t, first_passage):
    if first_passage:
        return lambda x: law.kernel_sf(t, 0.0, x)  # noqa: E731
    return law.tail_x


def _mgf_normalized(law, t, h, grid, first_passage):
    from .models import KernelMeasure

    kernel = KernelMeasure(law, t, -h)
    tail = _forcing_term(law, t, first_passage)
    z = lambda x: np.exp(-h * x) * tail(x)  # noqa: E731
    prof = solve_renewal(z, kernel, grid)
    prof.scale_rate = h
    prof.form = f"normalized/{prof.form}"
    return prof


def _mgf_raw(law, t, grid, first_passage):
    from .models import KernelMeasure

    kernel = KernelMeasure(law, t, 0.0)
    tail = _forcing_term(law, t, first_passage)
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            prof = solve_renewal(tail, kernel, grid, check_step=False)
        except RenewalDivergenceError:
            return None
    prof.form = f"raw/{prof.form}"
    return prof


def growth_bound(law, t, h, eps):
    """Constant ``K`` in ``M_x(t) <= K exp((h + eps) x)`` for ``X >= 0``.

    ``K = H(h) / (1 - rho)`` with ``H(a) = E[exp(-min(0, a) X)] + 1`` and
    ``rho = E[exp(tY - (h + eps) X)]``; requires ``rho < 1``.
    """
    rho = law.mgf(t, -(h + eps))
    if not rho < 1:
        raise DomainError(f"rho = {rho} must be below 1 for eps = {eps}")
    H = law.mgf(0.0, -min(0.0, h)) + 1.0
    return H / (1.0 - rho)


# ---------------------------------------------------------------------------
# renewal density by simulation
# ---------------------------------------------------------------------------


@dataclass
class DensityDiagnostic:
    """Window estimates of the renewal density against ``1 / mean``."""

    centers: np.ndarray
    q_estimates: np.ndarray
    target: float
    stderrs: np.ndarray
    width: float
    n: int
    seed: int

    def z_scores(self, reference=None):
        ref = self.target if reference is None else np.asarray(reference)
        return (self.q_estimates - ref) / self.stderrs


def _density_block(p, lows, highs, seed, block, size):
    rng = substream(seed, block)
    top = float(highs.max())
    S = np.zeros(size)
    # the epoch at time 0 counts
    counts = np.tile(((lows <= 0.0) & (0.0 <= highs)).astype(float), (size, 1))
    active = np.ones(size, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        S[idx] += p.rvs(size=idx.size, random_state=rng)
        s = S[idx, None]
        counts[idx] += (s >= lows) & (s <= highs)
        active[idx] = S[idx] <= top
    return counts.sum(axis=0), (counts * counts).sum(axis=0)


def empirical_renewal_density(p, windows, width, n, seed, workers=1, block_size=BLOCK_SIZE):
    """Estimate the renewal density on windows centred at ``windows``.

    Parameters
    ----------
    p : law-like
        Increment law with ``rvs``, ``mean`` and ``support``; must be
        supported on ``[0, inf)`` with positive mean.
    windows : array_like
        Window centres.
    width : float
        Window width.
    n : int
        Number of simulated renewal sequences (at least 10 000).
    seed : int
    workers : int
        Process count; results do not depend on it.

    Returns
    -------
    DensityDiagnostic
    """
    mean = _law_mean(p)
    if not mean > 0:
        raise DomainError("renewal density needs an increment law with positive mean")
    if p.support()[0] < 0:
        raise DomainError("renewal density simulation needs nonnegative increments")
    if n < 10_000:
        raise ConfigurationError("renewal density needs n >= 10000 paths")
    if not width > 0:
        raise ConfigurationError("window width must be positive")
    centers = np.atleast_1d(np.asarray(windows, dtype=float))
    lows = centers - 0.5 * width
    highs = centers + 0.5 * width
    tasks = [(p, lows, highs, int(seed), b, size) for b, size in block_layout(int(n), block_size)]
    parts = run_blocks(_density_block, tasks, workers)
    tot = np.zeros(centers.size)
    tot2 = np.zeros(centers.size)
    for s1, s2 in parts:
        tot += s1
        tot2 += s2
    mean_count = tot / n
    var = np.maximum(tot2 / n - mean_count**2, 0.0) * n / (n - 1)
    return DensityDiagnostic(
        centers=centers,
        q_estimates=mean_count / width,
        target=1.0 / mean,
        stderrs=np.sqrt(var / n) / width,
        width=float(width),
        n=int(n),
        seed=int(seed),
    )


def renewal_density_oracle(p, lows, highs):
    """Window averages of the exact renewal density, when known.

    Covers the exponential law (constant density) and the gamma law with
    shape 2, whose renewal density is ``(r/2)(1 - exp(-2 r x))``. Returns
    ``None`` for other laws. The atom of the epoch at time 0 is excluded.
    """
    from .marginals import Exponential, Gamma

    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    if isinstance(p, Exponential):
        return np.full(lows.shape, p.rate)
    if isinstance(p, Gamma) and p.shape == 2.0:
        r = p.rate
        a = np.maximum(lows, 0.0)
        w = highs - lows
        avg = 0.5 * r * (highs - a) - 0.25 * (np.exp(-2 * r * a) - np.exp(-2 * r * highs))
        return avg / w
    return None
