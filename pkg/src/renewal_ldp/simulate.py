"""Crude and exponentially tilted Monte Carlo for renewal reward tails.

Paths are simulated in blocks of :data:`~renewal_ldp.rng.BLOCK_SIZE` that
advance in lockstep; each block owns a Philox stream keyed by
``(seed, block_index)`` and blocks are reduced in index order, so estimates
are identical for any number of workers.

Under the tilted law ``P_tau`` each increment carries the likelihood ratio
``exp(h X - tau Y)``; the per-path estimator multiplies these up to and
including the first-passage epoch ``T(x)``, which serves both the ``W`` and
the ``W_bar`` events.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._numerics import ceil_snap
from ._parallel import run_blocks
from .errors import NonTerminationError, RegimeError
from .rate import DEFAULT_CONFIG, solve_h, solve_tau
from .rng import BLOCK_SIZE, block_layout

STEP_CAP = 10**9
ROUND_ELEMENTS = 1 << 22
REL_STDERR_FLAG = 0.5


@dataclass(frozen=True)
class PathOutcome:
    """One simulated path stopped at the first passage over ``x``."""

    n_epochs: int
    s: float
    w: float
    t_idx: int
    wbar: float
    log_weight: float = 0.0


@dataclass(frozen=True)
class SimEstimate:
    """Monte Carlo tail estimate with its provenance."""

    p_hat: float
    stderr: float
    n: int
    hits: int
    method: str
    seed: int
    tau_used: float | None = None
    target: str = "W"
    level: float = math.nan
    weight_mean: float | None = None
    weight_stderr: float | None = None
    flagged: bool = False

    @property
    def rel_stderr(self):
        return self.stderr / self.p_hat if self.p_hat > 0 else math.inf

    def as_row(self):
        return {
            "p_hat": self.p_hat,
            "stderr": self.stderr,
            "rel_stderr": self.rel_stderr,
            "n": self.n,
            "hits": self.hits,
            "method": self.method,
            "seed": self.seed,
            "tau": math.nan if self.tau_used is None else self.tau_used,
            "target": self.target,
        }


def _draw(law, tilt, rng, size):
    if tilt is None:
        return law.sample(rng, size)
    tau, h = tilt
    return law.sample_tilted(tau, h, rng, size)


def simulate_path(law, x, rng, tilt=None, step_cap=STEP_CAP):
    """Simulate one path up to its first passage over ``x``.

    Parameters
    ----------
    law : JointLaw
    x : float
        Level, ``x >= 0``.
    rng : numpy.random.Generator
    tilt : tuple of float, optional
        ``(tau, h(tau))`` to sample from the tilted law and accumulate
        the log likelihood ratio.

    Returns
    -------
    PathOutcome
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    s = w = lw = 0.0
    tau, h = tilt if tilt is not None else (0.0, 0.0)
    for n in range(step_cap):
        xi, yi = _draw(law, tilt, rng, None)
        if tilt is not None:
            lw += h * xi - tau * yi
        if s + xi > x:
            return PathOutcome(n_epochs=n, s=s, w=w, t_idx=n + 1, wbar=w + yi, log_weight=lw)
        s += xi
        w += yi
    raise NonTerminationError(f"no passage over x={x} within {step_cap} epochs")


def _initial_chunk(mean, x):
    if mean > 0 and math.isfinite(mean):
        return int(min(max(8, math.ceil(1.25 * x / mean) + 8), 1 << 16))
    return 64


def _path_block(law, x, tilt, seed, block, size, mean):
    from .rng import substream

    rng = substream(seed, block)
    sx = np.zeros(size)
    sy = np.zeros(size)
    y_last = np.zeros(size)
    logw = np.zeros(size)
    count = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    k = _initial_chunk(mean, x)
    tau, h = tilt if tilt is not None else (0.0, 0.0)
    while active.any():
        idx = np.flatnonzero(active)
        k_round = max(1, min(k, ROUND_ELEMENTS // idx.size))
        xs, ys = _draw(law, tilt, rng, (idx.size, k_round))
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        psx = np.ascontiguousarray(sx[idx])
        psy = np.ascontiguousarray(sy[idx])
        first = np.empty(idx.size, dtype=np.int64)
        stop = np.empty(idx.size, dtype=np.int8)
        y_at = np.empty(idx.size)
        kernels.scan_exceed_batch(xs, ys, psx, psy, float(x), first, stop, y_at)
        hit = stop.astype(bool)
        used = np.where(hit, first + 1, k_round)
        if tilt is not None:
            mask = np.arange(k_round)[None, :] < used[:, None]
            logw[idx] += np.where(mask, h * xs - tau * ys, 0.0).sum(axis=1)
        sx[idx] = psx
        sy[idx] = psy
        y_last[idx] = y_at
        count[idx] += np.where(hit, first, k_round)
        active[idx[hit]] = False
        if np.any(count[idx] > STEP_CAP):
            raise NonTerminationError(f"a path exceeded {STEP_CAP} epochs without passing x={x}")
        k = min(2 * k, 1 << 20)
    return {"n_epochs": count, "s": sx, "w": sy, "wbar": sy + y_last, "log_weight": logw}


def simulate_paths(law, x, n, seed, tilt=None, workers=1, block_size=BLOCK_SIZE):
    """Simulate ``n`` paths and return a dict of per-path arrays.

    Keys are ``n_epochs``, ``t_idx``, ``s``, ``w``, ``wbar`` and
    ``log_weight``; rows follow path order.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if tilt is None:
        mean = law.mean_x()
    else:
        from .models import KernelMeasure

        mean = KernelMeasure(law, tilt[0], -tilt[1]).mean()
    tasks = [(law, float(x), tilt, int(seed), b, size, mean) for b, size in block_layout(int(n), block_size)]
    parts = run_blocks(_path_block, tasks, workers)
    out = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    out["t_idx"] = out["n_epochs"] + 1
    return out


def event_level(law, c, x):
    """Smallest value ``v`` with ``{W >= cx} = {W >= v}``.

    Lattice rewards on ``d Z`` use ``d * ceil(cx / d)``, with near-integers
    snapped so float noise in ``cx`` does not move the threshold.
    """
    if law.y_span is None:
        return c * x
    d = law.y_span
    return d * ceil_snap(c * x / d)


def estimate_tail_crude(law, c, x, n, seed, target="W", workers=1):
    """Crude Monte Carlo estimate of ``Pr{W(x) >= cx}`` (or ``W_bar``)."""
    if n < 1:
        raise ValueError("n must be positive")
    paths = simulate_paths(law, x, n, seed, None, workers)
    level = event_level(law, c, x)
    vals = paths["w" if target == "W" else "wbar"]
    hits = int(np.count_nonzero(vals >= level))
    p = hits / n
    return SimEstimate(
        p_hat=p,
        stderr=math.sqrt(p * (1.0 - p) / n),
        n=int(n),
        hits=hits,
        method="crude",
        seed=int(seed),
        target=target,
        level=level,
    )


def estimate_tail_tilted(law, c, x, n, seed, target="W", workers=1, tau=None, cfg=DEFAULT_CONFIG):
    """Importance-sampling estimate of ``Pr{W(x) >= cx}`` under ``P_tau``.

    Parameters
    ----------
    law : JointLaw
    c, x : float
    n : int
    seed : int
    target : {"W", "Wbar"}
    workers : int
    tau : float, optional
        Tilt to use; defaults to the solution of ``h'(tau) = c``.

    Returns
    -------
    SimEstimate
        ``weight_mean`` and ``weight_stderr`` report the total-mass check
        (mean likelihood ratio with the indicator removed).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if target not in ("W", "Wbar"):
        raise ValueError("target must be 'W' or 'Wbar'")
    if tau is None:
        tau = solve_tau(law, c, cfg)
    if not tau > 0:
        raise RegimeError(f"tilted sampling needs tau > 0, got {tau:.6g}")
    h = solve_h(law, tau, cfg)
    paths = simulate_paths(law, x, n, seed, (tau, h), workers)
    level = event_level(law, c, x)
    vals = paths["w" if target == "W" else "wbar"]
    ind = vals >= level
    weights = np.exp(paths["log_weight"])
    est = np.where(ind, weights, 0.0)
    p = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(n))
    flagged = not (p > 0 and se / p <= REL_STDERR_FLAG)
    if flagged:
        warnings.warn(f"tilted estimate has relative stderr above {REL_STDERR_FLAG:.0%}", RuntimeWarning)
    return SimEstimate(
        p_hat=p,
        stderr=se,
        n=int(n),
        hits=int(np.count_nonzero(ind)),
        method="tilted",
        seed=int(seed),
        tau_used=float(tau),
        target=target,
        level=level,
        weight_mean=float(weights.mean()),
        weight_stderr=float(weights.std(ddof=1) / math.sqrt(n)),
        flagged=flagged,
    )
