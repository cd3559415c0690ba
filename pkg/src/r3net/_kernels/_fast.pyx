# Compiled twin of purepy.py; keep tie-breaking identical.

from libc.math cimport INFINITY, fabs

BACKEND = "c"

cdef double _TIE_TOL = 1e-12


def choose_entering_dantzig(double[::1] d, signed char[::1] status, double tol):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t j, best = -1
    cdef double score, best_score = tol
    for j in range(n):
        if status[j] == 1:
            score = -d[j]
        elif status[j] == 2:
            score = d[j]
        else:
            continue
        if score > best_score:
            best_score = score
            best = j
    return best


def choose_entering_bland(double[::1] d, signed char[::1] status, double tol):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t j
    for j in range(n):
        if status[j] == 1 and d[j] < -tol:
            return j
        if status[j] == 2 and d[j] > tol:
            return j
    return -1


def ratio_test(double[::1] v, double[::1] xb, double[::1] lb, double[::1] ub,
               double range_q, double pivot_tol):
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t i, idx = -1
    cdef double theta, tmin = INFINITY
    cdef double best_piv = -INFINITY
    for i in range(m):
        theta = _ratio(v[i], xb[i], lb[i], ub[i], pivot_tol)
        if theta < tmin:
            tmin = theta
    if tmin == INFINITY and range_q == INFINITY:
        return -1, INFINITY, 2
    if range_q <= tmin:
        return -1, range_q, 1
    for i in range(m):
        theta = _ratio(v[i], xb[i], lb[i], ub[i], pivot_tol)
        if theta <= tmin + _TIE_TOL and fabs(v[i]) > best_piv:
            best_piv = fabs(v[i])
            idx = i
    theta = _ratio(v[idx], xb[idx], lb[idx], ub[idx], pivot_tol)
    return idx, theta, 0


cdef inline double _ratio(double vi, double xbi, double lbi, double ubi,
                          double pivot_tol):
    cdef double theta
    if vi > pivot_tol:
        if lbi == -INFINITY:
            return INFINITY
        theta = (xbi - lbi) / vi
    elif vi < -pivot_tol:
        if ubi == INFINITY:
            return INFINITY
        theta = (xbi - ubi) / vi
    else:
        return INFINITY
    if theta < 0.0:
        theta = 0.0
    return theta


def eta_update(double[:, ::1] binv, double[::1] w, Py_ssize_t r):
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t i, j
    cdef double piv = w[r]
    cdef double f
    for j in range(m):
        binv[r, j] /= piv
    for i in range(m):
        if i == r:
            continue
        f = w[i]
        if f != 0.0:
            for j in range(m):
                binv[i, j] -= f * binv[r, j]


def redistribute_failed(double[:, ::1] mat, double[::1] xi, Py_ssize_t ell):
    cdef Py_ssize_t rows = mat.shape[0]
    cdef Py_ssize_t cols = mat.shape[1]
    cdef Py_ssize_t k, j
    cdef double f
    for k in range(rows):
        f = mat[k, ell]
        if f != 0.0:
            for j in range(cols):
                mat[k, j] += f * xi[j]
        mat[k, ell] = 0.0
