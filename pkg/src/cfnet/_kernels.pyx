# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-point sweeps.  Same contract as ``_kernels_py``."""

import numpy as np
from libc.math cimport fabs, INFINITY, NAN, isnan


cdef inline double _upd(double new, double old, double res) noexcept nogil:
    # running max of the relative change, NaN is sticky
    cdef double d
    if isnan(res):
        return res
    if new == old:
        return res
    d = fabs(new - old) / fabs(new)
    if isnan(d):
        return NAN
    return d if d > res else res


cdef void _colsum(const double[:, ::1] theta, const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, K = theta.shape[0], N = theta.shape[1]
    cdef double xi
    for j in range(N):
        out[j] = 0.0
    for i in range(K):
        xi = x[i]
        for j in range(N):
            out[j] += theta[i, j] * xi


cdef inline double _rowdot(const double[:, ::1] theta, Py_ssize_t i, const double[::1] y) noexcept nogil:
    cdef Py_ssize_t j, N = theta.shape[1]
    cdef double acc = 0.0
    for j in range(N):
        acc += theta[i, j] * y[j]
    return acc


def svt_phi_psihat(const double[:, ::1] theta, double alpha, int tmax, double tol):
    cdef Py_ssize_t K = theta.shape[0], N = theta.shape[1], i, j
    phi_a = np.ones(K)
    psihat_a = np.full(N, np.inf)
    cdef double[::1] phi = phi_a
    cdef double[::1] psihat = psihat_a
    cdef double[::1] s = np.empty(N)
    cdef double res = INFINITY, v, invN = 1.0 / N
    cdef int t = 0
    with nogil:
        while t < tmax:
            t += 1
            res = 0.0
            _colsum(theta, phi, s)
            for j in range(N):
                v = -1.0 / (1.0 + s[j] * invN)
                res = _upd(v, psihat[j], res)
                psihat[j] = v
            for i in range(K):
                v = 1.0 / (alpha - _rowdot(theta, i, psihat) * invN)
                res = _upd(v, phi[i], res)
                phi[i] = v
            if res < tol:
                break
    return phi_a, psihat_a, t, res


def svt_lambda_muhat(const double[:, ::1] theta, const double[::1] phi,
                     const double[::1] psihat, int tmax, double tol):
    cdef Py_ssize_t K = theta.shape[0], N = theta.shape[1], i, j
    lam_a = np.ones(K)
    muhat_a = np.full(N, np.inf)
    cdef double[::1] lam = lam_a
    cdef double[::1] muhat = muhat_a
    cdef double[::1] s = np.empty(N)
    cdef double res = INFINITY, v, invN = 1.0 / N
    cdef int t = 0
    with nogil:
        while t < tmax:
            t += 1
            res = 0.0
            _colsum(theta, lam, s)
            for j in range(N):
                v = psihat[j] * psihat[j] * s[j] * invN
                res = _upd(v, muhat[j], res)
                muhat[j] = v
            for i in range(K):
                v = phi[i] * phi[i] * (1.0 + _rowdot(theta, i, muhat) * invN)
                res = _upd(v, lam[i], res)
                lam[i] = v
            if res < tol:
                break
    return lam_a, muhat_a, t, res


def orig_phi_psi(const double[:, ::1] theta, double alpha, int tmax, double tol):
    cdef Py_ssize_t K = theta.shape[0], N = theta.shape[1], i, j
    phi_a = np.ones(K)
    psi_a = np.full(N, np.inf)
    cdef double[::1] phi = phi_a
    cdef double[::1] psi = psi_a
    cdef double[::1] s = np.empty(N)
    cdef double res = INFINITY, v, invN = 1.0 / N
    cdef int t = 0
    with nogil:
        while t < tmax:
            t += 1
            res = 0.0
            _colsum(theta, phi, s)
            for j in range(N):
                v = 1.0 / (alpha * (1.0 + s[j] * invN))
                res = _upd(v, psi[j], res)
                psi[j] = v
            for i in range(K):
                v = 1.0 / (alpha * (1.0 + _rowdot(theta, i, psi) * invN))
                res = _upd(v, phi[i], res)
                phi[i] = v
            if res < tol:
                break
    return phi_a, psi_a, t, res


def orig_lambda_mu(const double[:, ::1] theta, double alpha, const double[::1] phi,
                   const double[::1] psi, int tmax, double tol):
    cdef Py_ssize_t K = theta.shape[0], N = theta.shape[1], i, j
    lam_a = np.ones(K)
    mu_a = np.full(N, np.inf)
    cdef double[::1] lam = lam_a
    cdef double[::1] mu = mu_a
    cdef double[::1] s = np.empty(N)
    cdef double[::1] tmp = np.empty(max(K, N))
    cdef double res = INFINITY, v, invN = 1.0 / N
    cdef int t = 0
    with nogil:
        while t < tmax:
            t += 1
            res = 0.0
            for i in range(K):
                tmp[i] = phi[i] - alpha * lam[i]
            _colsum(theta, tmp[:K], s)
            for j in range(N):
                v = psi[j] * psi[j] * (1.0 + s[j] * invN)
                res = _upd(v, mu[j], res)
                mu[j] = v
            for j in range(N):
                tmp[j] = psi[j] - alpha * mu[j]
            for i in range(K):
                v = phi[i] * phi[i] * (1.0 + _rowdot(theta, i, tmp[:N]) * invN)
                res = _upd(v, lam[i], res)
                lam[i] = v
            if res < tol:
                break
    return lam_a, mu_a, t, res
