"""Pure numpy fixed-point sweeps (fallback for the compiled ``_kernels``).

All functions take a C-contiguous float64 profile ``theta`` of shape (K, N)
and return ``(x, y, sweeps, residual)``.  ``residual`` is the largest
relative change of any entry during the last sweep; iteration stops early
once it drops below ``tol``.
"""

import numpy as np


def _rel(new, old):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.abs(new - old) / np.abs(new)
    d = np.where(new == old, 0.0, d)
    return float(d.max()) if d.size else 0.0


def svt_phi_psihat(theta, alpha, tmax, tol):
    K, N = theta.shape
    phi = np.ones(K)
    psihat = np.full(N, np.inf)
    res, t = np.inf, 0
    for t in range(1, tmax + 1):
        new_psihat = -1.0 / (1.0 + (phi @ theta) / N)
        new_phi = 1.0 / (alpha - (theta @ new_psihat) / N)
        res = float(np.maximum(_rel(new_phi, phi), _rel(new_psihat, psihat)))
        phi, psihat = new_phi, new_psihat
        if res < tol:
            break
    return phi, psihat, t, res


def svt_lambda_muhat(theta, phi, psihat, tmax, tol):
    K, N = theta.shape
    lam = np.ones(K)
    muhat = np.full(N, np.inf)
    phi2, psihat2 = phi * phi, psihat * psihat
    res, t = np.inf, 0
    for t in range(1, tmax + 1):
        new_muhat = psihat2 * (lam @ theta) / N
        new_lam = phi2 * (1.0 + (theta @ new_muhat) / N)
        res = float(np.maximum(_rel(new_lam, lam), _rel(new_muhat, muhat)))
        lam, muhat = new_lam, new_muhat
        if res < tol:
            break
    return lam, muhat, t, res


def orig_phi_psi(theta, alpha, tmax, tol):
    K, N = theta.shape
    phi = np.ones(K)
    psi = np.full(N, np.inf)
    res, t = np.inf, 0
    with np.errstate(all="ignore"):
        for t in range(1, tmax + 1):
            new_psi = 1.0 / (alpha * (1.0 + (phi @ theta) / N))
            new_phi = 1.0 / (alpha * (1.0 + (theta @ new_psi) / N))
            res = float(np.maximum(_rel(new_phi, phi), _rel(new_psi, psi)))
            phi, psi = new_phi, new_psi
            if res < tol:
                break
    return phi, psi, t, res


def orig_lambda_mu(theta, alpha, phi, psi, tmax, tol):
    K, N = theta.shape
    lam = np.ones(K)
    mu = np.full(N, np.inf)
    res, t = np.inf, 0
    with np.errstate(all="ignore"):
        for t in range(1, tmax + 1):
            new_mu = psi * psi * (1.0 + ((phi - alpha * lam) @ theta) / N)
            new_lam = phi * phi * (1.0 + (theta @ (psi - alpha * new_mu)) / N)
            res = float(np.maximum(_rel(new_lam, lam), _rel(new_mu, mu)))
            lam, mu = new_lam, new_mu
            if res < tol:
                break
    return lam, mu, t, res
