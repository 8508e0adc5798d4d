# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element stiffness kernels (same contracts as _kernels_py)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def thermal_element_matrices(double[:, :, ::1] coords, double[:, ::1] qp,
                             double[::1] qw, double[:, :, ::1] dN,
                             double[:, ::1] kq):
    cdef Py_ssize_t ne = coords.shape[0]
    cdef Py_ssize_t nq = qp.shape[0]
    cdef Py_ssize_t nb = dN.shape[1]
    out_arr = np.zeros((ne, nb, nb))
    cdef double[:, :, ::1] out = out_arr
    gr_arr = np.empty(nb)
    gy_arr = np.empty(nb)
    cdef double[::1] gr = gr_arr
    cdef double[::1] gy = gy_arr

    cdef Py_ssize_t e, q, a, b
    cdef double e1r, e1y, e2r, e2y, det, i00, i01, i10, i11
    cdef double r, w, ga_r, ga_y
    for e in range(ne):
        e1r = coords[e, 1, 0] - coords[e, 0, 0]
        e1y = coords[e, 1, 1] - coords[e, 0, 1]
        e2r = coords[e, 2, 0] - coords[e, 0, 0]
        e2y = coords[e, 2, 1] - coords[e, 0, 1]
        det = e1r * e2y - e2r * e1y
        i00 = e2y / det
        i01 = -e2r / det
        i10 = -e1y / det
        i11 = e1r / det
        for q in range(nq):
            r = coords[e, 0, 0] + e1r * qp[q, 0] + e2r * qp[q, 1]
            w = kq[e, q] * r * qw[q] * det
            for a in range(nb):
                gr[a] = dN[q, a, 0] * i00 + dN[q, a, 1] * i10
                gy[a] = dN[q, a, 0] * i01 + dN[q, a, 1] * i11
            for a in range(nb):
                ga_r = gr[a] * w
                ga_y = gy[a] * w
                for b in range(nb):
                    out[e, a, b] += ga_r * gr[b] + ga_y * gy[b]
    return out_arr


def mechanical_element_matrices(double[:, :, ::1] coords, double[:, ::1] qp,
                                double[::1] qw, double[:, ::1] N,
                                double[:, :, ::1] dN, double[::1] lam,
                                double[::1] mu):
    cdef Py_ssize_t ne = coords.shape[0]
    cdef Py_ssize_t nq = qp.shape[0]
    cdef Py_ssize_t nb = dN.shape[1]
    out_arr = np.zeros((ne, 2 * nb, 2 * nb))
    cdef double[:, :, ::1] out = out_arr
    gr_arr = np.empty(nb)
    gy_arr = np.empty(nb)
    cdef double[::1] gr = gr_arr
    cdef double[::1] gy = gy_arr

    cdef Py_ssize_t e, q, a, b
    cdef double e1r, e1y, e2r, e2y, det, i00, i01, i10, i11
    cdef double r, w, wr, wor, l2m, la, m
    cdef double Na, dra, dya, Nb, drb, dyb
    for e in range(ne):
        e1r = coords[e, 1, 0] - coords[e, 0, 0]
        e1y = coords[e, 1, 1] - coords[e, 0, 1]
        e2r = coords[e, 2, 0] - coords[e, 0, 0]
        e2y = coords[e, 2, 1] - coords[e, 0, 1]
        det = e1r * e2y - e2r * e1y
        i00 = e2y / det
        i01 = -e2r / det
        i10 = -e1y / det
        i11 = e1r / det
        la = lam[e]
        m = mu[e]
        l2m = la + 2.0 * m
        for q in range(nq):
            r = coords[e, 0, 0] + e1r * qp[q, 0] + e2r * qp[q, 1]
            w = qw[q] * det
            wr = w * r
            wor = w / r
            for a in range(nb):
                gr[a] = dN[q, a, 0] * i00 + dN[q, a, 1] * i10
                gy[a] = dN[q, a, 0] * i01 + dN[q, a, 1] * i11
            for a in range(nb):
                Na = N[q, a]
                dra = gr[a]
                dya = gy[a]
                for b in range(nb):
                    Nb = N[q, b]
                    drb = gr[b]
                    dyb = gy[b]
                    out[e, 2 * a, 2 * b] += (
                        l2m * dra * drb * wr + m * dya * dyb * wr
                        + l2m * Na * Nb * wor
                        + la * (Na * drb + dra * Nb) * w)
                    out[e, 2 * a, 2 * b + 1] += (
                        la * dra * dyb * wr + la * Na * dyb * w
                        + m * dya * drb * wr)
                    out[e, 2 * a + 1, 2 * b] += (
                        la * dya * drb * wr + la * dya * Nb * w
                        + m * dra * dyb * wr)
                    out[e, 2 * a + 1, 2 * b + 1] += (
                        l2m * dya * dyb * wr + m * dra * drb * wr)
    return out_arr
