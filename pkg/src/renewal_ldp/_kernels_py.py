"""Pure-Python reference implementations of the hot loops.

Loop structure mirrors ``_kernels.pyx``. The Volterra and Gauss-Seidel
fallbacks replace the inner loop by ``numpy.dot``, so the two backends agree
to rounding rather than bit for bit; the exceedance scan is bit-identical.
"""

import numpy as np


def volterra_forward(z, a0, m):
    """Solve the discretised one-sided renewal equation.

    Finds ``Z`` on an equispaced grid ``x_k = x_0 + k * step`` with

        Z[k] = z[k] + a0 Z[k] + sum_{j=1}^{k} m[j-1] (Z[k-j+1] + Z[k-j]) / 2

    where ``m[j]`` is the kernel mass on ``(j step, (j+1) step]`` and ``a0``
    an atom at lag zero: the trapezoid rule applied cell by cell with exact
    cell masses. The ``Z[k]`` terms are moved to the left-hand side.

    Parameters
    ----------
    z : ndarray, shape (n,)
    a0 : float
    m : ndarray, shape (n - 1,)

    Returns
    -------
    ndarray, shape (n,)
    """
    z = np.asarray(z, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    n = z.shape[0]
    out = np.empty(n)
    out[0] = z[0] / (1.0 - a0)
    if n == 1:
        return out
    # w[j] = (m[j-1] + m[j]) / 2 for interior lags
    w = np.empty(n)
    w[0] = 0.0
    w[1 : n - 1] = 0.5 * (m[:-1] + m[1:])
    w[n - 1] = 0.0
    diag = 1.0 - a0 - 0.5 * m[0]
    for k in range(1, n):
        acc = z[k] + 0.5 * m[k - 1] * out[0]
        if k > 1:
            acc += np.dot(w[1:k], out[k - 1 : 0 : -1])
        out[k] = acc / diag
    return out


def gauss_seidel_sweep(Z, z, w, offset):
    """One in-place Gauss-Seidel sweep of a two-sided discrete renewal map.

    Updates ``Z[k] = (z[k] + sum_{j != offset} w[j] Z[k - j + offset]) /
    (1 - w[offset])`` for increasing ``k``. ``w[offset]`` is the weight at
    lag zero and lag ``j - offset`` may be negative. Indices below 0 read as
    zero and indices past the end are clamped to the last node.

    Returns the sup-norm change over the sweep.
    """
    n = Z.shape[0]
    nw = w.shape[0]
    diag = 1.0 - w[offset]
    # tail sums of w for the clamped (idx >= n) part
    change = 0.0
    for k in range(n):
        # j ranges where 0 <= k - j + offset: j <= k + offset
        j_hi = min(nw - 1, k + offset)
        # j where idx >= n: j <= k + offset - n
        j_clamp = k + offset - n
        acc = z[k]
        if j_clamp >= 0:
            acc += w[: j_clamp + 1].sum() * Z[n - 1]
            j_lo = j_clamp + 1
        else:
            j_lo = 0
        # split around the diagonal lag
        if j_lo < offset:
            a, b = j_lo, min(offset - 1, j_hi)
            if a <= b:
                acc += np.dot(w[a : b + 1], Z[k - b + offset : k - a + offset + 1][::-1])
        if offset + 1 <= j_hi:
            a, b = max(offset + 1, j_lo), j_hi
            if a <= b:
                acc += np.dot(w[a : b + 1], Z[k - b + offset : k - a + offset + 1][::-1])
        new = acc / diag
        d = abs(new - Z[k])
        if d > change:
            change = d
        Z[k] = new
    return change


def scan_exceed_batch(xs, ys, sx, sy, level, first, stop, y_at):
    """Locate, for each row, the first increment taking the running sum past ``level``.

    ``xs`` and ``ys`` have shape ``(n_paths, k)``. ``sx`` and ``sy`` hold
    the running sums on entry and are updated in place to the sums just
    before the exceeding increment, or after the whole row when there is
    none. ``first[i]`` receives the exceedance column (or -1), ``stop[i]``
    is 1 on exceedance and ``y_at[i]`` is the reward of the exceeding
    increment.
    """
    if xs.shape[1] == 0:
        first[:] = -1
        stop[:] = 0
        y_at[:] = 0.0
        return
    # cumsum from the running value so rounding matches sequential adds
    cx = np.cumsum(np.column_stack([sx, xs]), axis=1)[:, 1:]
    cy = np.cumsum(np.column_stack([sy, ys]), axis=1)[:, 1:]
    over = cx > level
    hit = over.any(axis=1)
    idx = np.where(hit, over.argmax(axis=1), -1)
    rows = np.arange(xs.shape[0])
    k = xs.shape[1]
    last = np.where(hit, idx - 1, k - 1)
    safe = np.maximum(last, 0)
    new_sx = np.where(last >= 0, cx[rows, safe], sx)
    new_sy = np.where(last >= 0, cy[rows, safe], sy)
    y_at[:] = np.where(hit, ys[rows, np.maximum(idx, 0)], 0.0)
    sx[:] = new_sx
    sy[:] = new_sy
    first[:] = idx
    stop[:] = hit.astype(np.int8)
