"""Deterministic-equivalent rate estimation (SERE).

For every subnetwork the diagonal resolvent limits are obtained from two
coupled fixed points evaluated at ``z = -alpha_m``:

* ``phi`` (users) and ``psi_hat = z psi`` (antennas),
* ``lam`` (users) and ``mu_hat = psi + z mu`` (antennas).

The transformed antenna variables stay bounded as ``alpha -> 0``, so the
same code path serves RZF and ZF.  The untransformed iteration is kept in
:func:`solve_original` for comparison only.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .config import NetworkConfig
from .linkops import subnetwork_alphas
from .topology import LargeScaleProfile, Topology

__all__ = [
    "NonFinite",
    "NonPositivePower",
    "Sweep",
    "FixedPointSolution",
    "OriginalSolution",
    "DeterministicRate",
    "solve_phi_psihat",
    "solve_lambda_muhat",
    "solve_subnetwork",
    "solve_original",
    "det_equivalents",
    "sere_rate",
]

TOL = 1e-12


class NonFinite(FloatingPointError):
    """The stabilized iteration produced NaN or Inf."""


class NonPositivePower(ArithmeticError):
    """The power normalization sum is not positive."""


class Sweep(NamedTuple):
    first: np.ndarray
    second: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    """Converged SVT variables of one subnetwork at ``z = -alpha``."""

    alpha: float
    phi: np.ndarray
    psi_hat: np.ndarray
    lam: np.ndarray
    mu_hat: np.ndarray
    iterations: tuple[int, int]
    residual: tuple[float, float]
    stable: bool = True


@dataclass(frozen=True, eq=False)
class OriginalSolution:
    """Untransformed variables ``phi, psi, lam, mu`` at ``z = -alpha``."""

    alpha: float
    phi: np.ndarray
    psi: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    iterations: tuple[int, int]
    residual: tuple[float, float]
    stable: bool

    def transformed(self) -> FixedPointSolution:
        """Map to SVT variables the way the untransformed method has to:
        ``psi_hat = -alpha psi`` and ``mu_hat = psi - alpha mu``."""
        a = self.alpha
        with np.errstate(all="ignore"):
            psi_hat = -a * self.psi
            mu_hat = self.psi - a * self.mu
        return FixedPointSolution(a, self.phi, psi_hat, self.lam, mu_hat,
                                  self.iterations, self.residual, self.stable)


@dataclass(frozen=True, eq=False)
class DeterministicRate:
    """Deterministic equivalents per subnetwork (arrays over its users)."""

    desired: list[np.ndarray]
    intra: list[np.ndarray]
    inter: list[np.ndarray]
    noise: list[np.ndarray]
    xi: np.ndarray
    central_index: int = 0
    time_s: float = 0.0
    stable: bool = True

    @property
    def sinr(self) -> list[np.ndarray]:
        with np.errstate(all="ignore"):
            return [d / (z + a + b) for d, a, b, z in
                    zip(self.desired, self.intra, self.inter, self.noise)]

    @property
    def rates(self) -> list[np.ndarray]:
        with np.errstate(all="ignore"):
            return [np.log2(1.0 + g) for g in self.sinr]

    @property
    def central_rate(self) -> float:
        return float(self.rates[self.central_index].mean())


def _theta(theta):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.ndim != 2:
        raise ValueError("theta must be a K x N matrix")
    if np.any(theta < 0) or not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite and nonnegative")
    return theta


def _finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite(f"{name}: non-finite iterate")


def solve_phi_psihat(theta_m, alpha: float, tmax: int = 50, *, tol: float = TOL,
                     backend=None) -> Sweep:
    """Stabilized fixed point for ``phi`` and ``psi_hat`` at ``z = -alpha``.

    Each sweep updates ``psi_hat`` from the current ``phi`` and then ``phi``
    from the new ``psi_hat``, starting from ``phi = 1``.  At most ``tmax``
    sweeps are run; iteration stops once no entry changes by more than
    ``tol`` relative.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    theta = _theta(theta_m)
    impl = backend or kernels.backend
    phi, psihat, it, res = impl.svt_phi_psihat(theta, float(alpha), int(tmax), float(tol))
    _finite("phi/psi_hat", phi, psihat)
    return Sweep(np.asarray(phi), np.asarray(psihat), it, res)


def solve_lambda_muhat(theta_m, phi, psi_hat, tmax: int = 50, *, tol: float = TOL,
                       backend=None) -> Sweep:
    """Stabilized fixed point for ``lam`` and ``mu_hat`` given converged
    ``phi`` and ``psi_hat``.  ``mu_hat`` is updated first, ``lam = 1``
    initially."""
    theta = _theta(theta_m)
    impl = backend or kernels.backend
    lam, muhat, it, res = impl.svt_lambda_muhat(
        theta, np.ascontiguousarray(phi, dtype=float),
        np.ascontiguousarray(psi_hat, dtype=float), int(tmax), float(tol))
    _finite("lam/mu_hat", lam, muhat)
    return Sweep(np.asarray(lam), np.asarray(muhat), it, res)


def solve_subnetwork(theta_m, alpha: float, tmax: int = 50, *, tol: float = TOL,
                     backend=None) -> FixedPointSolution:
    a = solve_phi_psihat(theta_m, alpha, tmax, tol=tol, backend=backend)
    b = solve_lambda_muhat(theta_m, a.first, a.second, tmax, tol=tol, backend=backend)
    return FixedPointSolution(float(alpha), a.first, a.second, b.first, b.second,
                              (a.iterations, b.iterations), (a.residual, b.residual))


def solve_original(theta_m, alpha: float, tmax: int = 50, *, tol: float = TOL,
                   backend=None) -> OriginalSolution:
    """Untransformed iteration for ``phi, psi, lam, mu`` at ``z = -alpha``.

    Non-finite values are not an error here; they clear ``stable``.
    """
    if not alpha > 0:
        raise ValueError("the untransformed iteration needs alpha > 0")
    theta = _theta(theta_m)
    impl = backend or kernels.backend
    phi, psi, it1, r1 = impl.orig_phi_psi(theta, float(alpha), int(tmax), float(tol))
    lam, mu, it2, r2 = impl.orig_lambda_mu(theta, float(alpha), np.asarray(phi),
                                           np.asarray(psi), int(tmax), float(tol))
    stable = all(np.all(np.isfinite(x)) for x in (phi, psi, lam, mu))
    return OriginalSolution(float(alpha), np.asarray(phi), np.asarray(psi),
                            np.asarray(lam), np.asarray(mu), (it1, it2), (r1, r2),
                            bool(stable))


def det_equivalents(solutions, profile: LargeScaleProfile, power: float,
                    noise_power: float, *, central_index: int = 0,
                    strict: bool = True) -> DeterministicRate:
    """Deterministic equivalents of signal, interference and power scaling.

    ``solutions[m]`` holds the SVT variables of subnetwork ``m`` at its own
    ``alpha``.  With ``strict=False`` a non-positive power sum or a
    non-finite term marks the result unstable instead of raising.
    """
    M = len(solutions)
    if profile.num_subnetworks != M:
        raise ValueError("one solution per subnetwork required")
    stable = all(s.stable for s in solutions)
    with np.errstate(all="ignore"):
        xi2 = np.empty(M)
        for m, s in enumerate(solutions):
            mean_mu = np.mean(s.mu_hat)
            if not mean_mu > 0:
                if strict:
                    raise NonPositivePower(f"subnetwork {m}: mean mu_hat = {mean_mu}")
                stable = False
            xi2[m] = power / mean_mu
        desired, intra, inter, noise = [], [], [], []
        for m, s in enumerate(solutions):
            a = s.alpha
            desired.append((1.0 - a * s.phi) ** 2)
            intra.append(a * a * (s.lam - s.phi ** 2))
            acc = np.zeros(len(s.phi))
            for n, t in enumerate(solutions):
                if n != m:
                    acc += (xi2[n] / xi2[m]) * (profile.theta[m][n] @ t.mu_hat) / len(t.mu_hat)
            inter.append(acc)
            noise.append(np.full(len(s.phi), noise_power / xi2[m]))
    terms = desired + intra + inter + noise
    if not all(np.all(np.isfinite(x)) for x in terms) or not np.all(np.isfinite(xi2)):
        if strict:
            raise NonFinite("non-finite deterministic equivalent")
        stable = False
    with np.errstate(invalid="ignore"):
        xi = np.sqrt(xi2)
    return DeterministicRate(desired, intra, inter, noise, xi, central_index, stable=stable)


def sere_rate(topology: Topology, profile: LargeScaleProfile, config: NetworkConfig,
              *, alphas=None, method: str = "svt", threads: int = 1,
              backend=None) -> DeterministicRate:
    """Deterministic-equivalent rates of every user, with wall time.

    ``method="svt"`` runs the stabilized iteration, ``"original"`` the
    untransformed one (whose failures are reported through ``stable``).
    """
    if method not in ("svt", "original"):
        raise ValueError(f"unknown method {method!r}")
    if alphas is None:
        alphas = subnetwork_alphas(topology, config)
    tmax = config.fp_iterations_Tmax
    t0 = time.perf_counter()

    def solve(m):
        theta = profile.own(m)
        if method == "svt":
            return solve_subnetwork(theta, alphas[m], tmax, backend=backend)
        return solve_original(theta, alphas[m], tmax, backend=backend).transformed()

    M = profile.num_subnetworks
    if threads > 1 and M > 1:
        with ThreadPoolExecutor(max_workers=min(threads, M)) as pool:
            sols = list(pool.map(solve, range(M)))
    else:
        sols = [solve(m) for m in range(M)]
    out = det_equivalents(sols, profile, config.tx_power_P, config.noise_power_N0,
                          central_index=topology.central_index,
                          strict=(method == "svt"))
    elapsed = time.perf_counter() - t0
    return DeterministicRate(out.desired, out.intra, out.inter, out.noise, out.xi,
                             out.central_index, elapsed, out.stable)
