"""Small numerical helpers shared across modules."""

import math

import numpy as np
from numpy.polynomial import legendre as _leg

_GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = _leg.leggauss(_GL_ORDER)


def interval_integrals(func, edges, breakpoints=(), hmax=0.05):
    """Integrate ``func`` over each interval ``[edges[i], edges[i+1]]``.

    Each interval is split at ``breakpoints`` and into sub-cells no longer
    than ``hmax``; every sub-cell gets a 10-point Gauss-Legendre rule, which
    is exact to rounding for the smooth pieces used here. ``func`` must be
    vectorised. Returns an array of length ``len(edges) - 1``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        return np.zeros(max(edges.size - 1, 0))
    if np.any(np.diff(edges) < 0):
        raise ValueError("edges must be nondecreasing")
    bps = np.asarray([b for b in breakpoints if edges[0] < b < edges[-1]], dtype=float)
    pts = np.union1d(edges, bps)
    # refine long pieces
    lens = np.diff(pts)
    nsub = np.maximum(1, np.ceil(lens / hmax).astype(int))
    lo = np.repeat(pts[:-1], nsub)
    step = np.repeat(lens / nsub, nsub)
    lo = lo + step * (np.arange(lo.size) - np.repeat(np.cumsum(nsub) - nsub, nsub))
    mid = lo + 0.5 * step
    half = 0.5 * step
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = func(nodes.ravel()).reshape(nodes.shape)
    sub = (vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half
    # sub-cells -> pieces between pts -> intervals between edges
    piece_id = np.repeat(np.arange(pts.size - 1), nsub)
    piece = np.bincount(piece_id, weights=sub, minlength=pts.size - 1)
    owner = np.searchsorted(edges, pts[:-1], side="right") - 1
    return np.bincount(owner, weights=piece, minlength=edges.size - 1)[: edges.size - 1]


def poly_exp_tail(coeffs, rate):
    """Return the integral over ``[0, inf)`` of ``Q(u) exp(-rate u)``.

    ``coeffs`` are the ascending power coefficients of ``Q``. Diverges
    (``inf``) unless ``rate > 0``.
    """
    if rate <= 0.0:
        return math.inf
    total = 0.0
    fact = 1.0
    for k, ck in enumerate(coeffs):
        if k:
            fact *= k
        total += ck * fact / rate ** (k + 1)
    return total


def exp_integral(r, a, b):
    """Integral of ``exp(-r u)`` over ``[a, b]`` (finite ``a <= b``)."""
    length = b - a
    if r == 0.0:
        return length
    return math.exp(-r * a) * (-math.expm1(-r * length)) / r


def frac_up(a, snap=1e-9):
    """``ceil(a) - a`` with values within ``snap`` of an integer mapped to 0."""
    n = round(a)
    if abs(a - n) <= snap:
        return 0.0
    return math.ceil(a) - a


def ceil_snap(a, snap=1e-9):
    """``ceil(a)`` that treats near-integers as integers."""
    n = round(a)
    if abs(a - n) <= snap:
        return int(n)
    return math.ceil(a)
