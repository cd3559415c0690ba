"""Numpy reference implementation of the solver/reconfiguration kernels.

Semantics (tie-breaking included) must match ``_fast.pyx`` exactly; the
test suite runs both backends against each other when the extension is
built.
"""

import numpy as np

BACKEND = "python"

_TIE_TOL = 1e-12


def choose_entering_dantzig(d, status, tol):
    """Most-violating eligible column: at-lower wants d < -tol, at-upper d > tol.

    Returns the column index, or -1 when no column is eligible.
    """
    score = np.where(status == 1, -d, np.where(status == 2, d, -np.inf))
    j = int(np.argmax(score))
    return j if score[j] > tol else -1


def choose_entering_bland(d, status, tol):
    """Smallest-index eligible column (anti-cycling rule); -1 when none."""
    eligible = ((status == 1) & (d < -tol)) | ((status == 2) & (d > tol))
    if not eligible.any():
        return -1
    return int(np.argmax(eligible))


def ratio_test(v, xb, lb, ub, range_q, pivot_tol):
    """Bounded-variable ratio test along the signed entering column ``v``.

    ``v`` is the basis-expressed column times the entering direction, so
    basic values move as ``xb - theta * v``. Returns ``(idx, theta, kind)``
    with kind 0 = basis pivot (idx = leaving position), 1 = bound flip of
    the entering variable, 2 = unbounded ray. Negative ratios (tiny bound
    violations) are clamped to zero. Ties on theta prefer the largest
    |pivot| and then the smallest position.
    """
    m = v.shape[0]
    theta = np.full(m, np.inf)
    pos = v > pivot_tol
    neg = v < -pivot_tol
    if pos.any():
        theta[pos] = (xb[pos] - lb[pos]) / v[pos]
    if neg.any():
        theta[neg] = (xb[neg] - ub[neg]) / v[neg]
    np.maximum(theta, 0.0, out=theta)
    tmin = theta.min() if m else np.inf
    if not np.isfinite(min(tmin, range_q)):
        return -1, np.inf, 2
    if range_q <= tmin:
        return -1, float(range_q), 1
    ties = theta <= tmin + _TIE_TOL
    absv = np.where(ties, np.abs(v), -np.inf)
    idx = int(np.argmax(absv))
    return idx, float(theta[idx]), 0


def eta_update(binv, w, r):
    """In-place product-form update of the basis inverse for a pivot.

    ``w`` is the entering column expressed in the current basis; row ``r``
    is the pivot row.
    """
    br = binv[r]
    br /= w[r]
    f = w.copy()
    f[r] = 0.0
    binv -= np.outer(f, br)


def redistribute_failed(mat, xi, ell):
    """Spread column ``ell`` of ``mat`` over the other columns with weights ``xi``.

    Implements ``mat[k, :] += mat[k, ell] * xi`` for every row, then zeroes
    column ``ell``. ``xi[ell]`` must be zero.
    """
    col = mat[:, ell].copy()
    mat += np.outer(col, xi)
    mat[:, ell] = 0.0
