# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: spherical-harmonic point evaluation and grid labelling.

Mirrors :mod:`mfelab._kernels_py` one-to-one.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot

cnp.import_array()


def eval_sh(A_in, B_in, pts_in, a_in, b_in, diag_in, dcoef_in, m0_in, bint want_grad):
    # tables are transposed to [m, k] so the degree recurrence walks contiguous memory
    cdef double[:, ::1] A = np.ascontiguousarray(np.asarray(A_in, dtype=np.float64).T)
    cdef double[:, ::1] B = np.ascontiguousarray(np.asarray(B_in, dtype=np.float64).T)
    cdef double[:, ::1] ar = np.ascontiguousarray(np.asarray(a_in, dtype=np.float64).T)
    cdef double[:, ::1] br = np.ascontiguousarray(np.asarray(b_in, dtype=np.float64).T)
    cdef double[:, ::1] dc = np.ascontiguousarray(np.asarray(dcoef_in, dtype=np.float64).T)
    cdef double[::1] diag = np.ascontiguousarray(diag_in, dtype=np.float64)
    cdef double[::1] m0coef = np.ascontiguousarray(m0_in, dtype=np.float64)
    cdef double[:, ::1] pts = np.ascontiguousarray(pts_in, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef int L = A.shape[0] - 1
    out_v = np.zeros(n)
    cdef double[::1] val = out_v
    out_g = np.zeros((n, 3)) if want_grad else None
    cdef double[:, ::1] grad
    if want_grad:
        grad = out_g
    cdef Py_ssize_t i
    cdef int k, m
    cdef double x1, x2, t, s, cphi, sphi, v, fth, fph, vm
    cdef double p0, p1, p, cm, sm, cnew, spow, r, r1, r2, rmm, trig, ak, bk
    cdef double sq3 = sqrt(3.0)
    for i in range(n):
        x1 = pts[i, 0]
        x2 = pts[i, 1]
        t = pts[i, 2]
        s = hypot(x1, x2)
        if s == 0.0:
            cphi = 1.0
            sphi = 0.0
        else:
            cphi = x1 / s
            sphi = x2 / s
        v = A[0, 0]
        fth = 0.0
        fph = 0.0
        if L >= 1:
            p0 = 1.0
            p1 = sq3 * t
            v += A[0, 1] * p1
            for k in range(2, L + 1):
                p = ar[0, k] * t * p1 - br[0, k] * p0
                v += A[0, k] * p
                p0 = p1
                p1 = p
        cm = 1.0
        sm = 0.0
        spow = 1.0
        for m in range(1, L + 1):
            cnew = cm * cphi - sm * sphi
            sm = sm * cphi + cm * sphi
            cm = cnew
            if m > 1:
                spow = spow * s
            rmm = diag[m] * spow
            r2 = 0.0
            r1 = rmm
            vm = 0.0
            if not want_grad:
                for k in range(m, L + 1):
                    if k == m:
                        r = rmm
                    elif k == m + 1:
                        r = sqrt(2.0 * m + 3.0) * t * rmm
                    else:
                        r = ar[m, k] * t * r1 - br[m, k] * r2
                    vm += r * (A[m, k] * cm + B[m, k] * sm)
                    if k > m:
                        r2 = r1
                    r1 = r
            else:
                for k in range(m, L + 1):
                    if k == m:
                        r = rmm
                    elif k == m + 1:
                        r = sqrt(2.0 * m + 3.0) * t * rmm
                    else:
                        r = ar[m, k] * t * r1 - br[m, k] * r2
                    ak = A[m, k]
                    bk = B[m, k]
                    trig = ak * cm + bk * sm
                    vm += r * trig
                    if k > m:
                        fth += (k * t * r - dc[m, k] * r1) * trig
                    else:
                        fth += (k * t * r) * trig
                    fph += m * r * (bk * cm - ak * sm)
                    if m == 1:
                        fth -= A[0, k] * m0coef[k] * s * r
                    if k > m:
                        r2 = r1
                    r1 = r
            v += s * vm
        val[i] = v
        if want_grad:
            grad[i, 0] = fth * t * cphi - fph * sphi
            grad[i, 1] = fth * t * sphi + fph * cphi
            grad[i, 2] = -fth * s
    return out_v, out_g


def label_sphere_grid(sign_in):
    cdef cnp.int8_t[:, ::1] sign = np.ascontiguousarray(sign_in, dtype=np.int8)
    cdef Py_ssize_t nt = sign.shape[0], nph = sign.shape[1]
    out = np.zeros((nt, nph), dtype=np.int32)
    cdef int[:, ::1] lab = out
    cdef Py_ssize_t total = nt * nph
    stack_arr = np.empty(total, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top, j, i, jj, ii, node, q, half = nph // 2
    cdef int count = 0
    cdef cnp.int8_t sg
    cdef Py_ssize_t nbr_j[5]
    cdef Py_ssize_t nbr_i[5]
    cdef int nn
    for j in range(nt):
        for i in range(nph):
            if sign[j, i] == 0 or lab[j, i] != 0:
                continue
            count += 1
            sg = sign[j, i]
            lab[j, i] = count
            top = 0
            stack[top] = j * nph + i
            top += 1
            while top > 0:
                top -= 1
                node = stack[top]
                jj = node // nph
                ii = node % nph
                nn = 0
                nbr_j[nn] = jj
                nbr_i[nn] = (ii + 1) % nph
                nn += 1
                nbr_j[nn] = jj
                nbr_i[nn] = (ii + nph - 1) % nph
                nn += 1
                if jj > 0:
                    nbr_j[nn] = jj - 1
                    nbr_i[nn] = ii
                    nn += 1
                if jj < nt - 1:
                    nbr_j[nn] = jj + 1
                    nbr_i[nn] = ii
                    nn += 1
                if (jj == 0 or jj == nt - 1) and nph % 2 == 0:
                    nbr_j[nn] = jj
                    nbr_i[nn] = (ii + half) % nph
                    nn += 1
                for q in range(nn):
                    if sign[nbr_j[q], nbr_i[q]] == sg and lab[nbr_j[q], nbr_i[q]] == 0:
                        lab[nbr_j[q], nbr_i[q]] = count
                        stack[top] = nbr_j[q] * nph + nbr_i[q]
                        top += 1
    return out, count
