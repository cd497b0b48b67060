"""RZF/ZF precoding, exact SINR and the Monte Carlo ergodic-rate oracle."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from . import streams
from .channel import ChannelRealization, assemble_channel
from .config import NetworkConfig
from .topology import LargeScaleProfile, Topology

__all__ = [
    "Singular",
    "ZeroPrecoder",
    "DimensionMismatch",
    "PrecoderSet",
    "RateSample",
    "MonteCarloResult",
    "subnetwork_alphas",
    "rzf_matrix",
    "power_normalization",
    "build_precoders",
    "subnetwork_sinr",
    "subnetwork_sinr_normalized",
    "compute_sinr",
    "realization_rates",
    "mc_ergodic_rate",
    "empirical_resolvent_diag",
]

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
MAX_SINGULAR_RESAMPLES = 100


class Singular(np.linalg.LinAlgError):
    """ZF Gram matrix is numerically rank deficient."""


class ZeroPrecoder(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Unnormalized precoders ``F[m]`` (N_m x K_m), power factors ``xi[m]``
    and the regularization ``alpha[m]`` each was built with."""

    F: list[np.ndarray]
    xi: np.ndarray
    alpha: np.ndarray


@dataclass(frozen=True, eq=False)
class RateSample:
    """Per-user SINR and its decomposition.

    ``noise`` is the effective noise ``N0 / xi_m**2``.  Fields are arrays for
    a whole subnetwork, or floats for a single user.
    """

    sinr: np.ndarray
    desired: np.ndarray
    intra: np.ndarray
    inter: np.ndarray
    noise: np.ndarray

    @property
    def rate(self):
        return np.log2(1.0 + self.sinr)

    def reconstruct(self):
        return self.desired / (self.noise + self.intra + self.inter)


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    rates: list[np.ndarray]      # per subnetwork, mean over realizations
    central_index: int
    realizations: int
    time_s: float
    resampled: int = 0

    @property
    def central_rate(self) -> float:
        return float(self.rates[self.central_index].mean())


def subnetwork_alphas(topology: Topology, config: NetworkConfig) -> np.ndarray:
    """alpha_m for each subnetwork under ``config.reg_policy``."""
    return np.array([config.alpha(beta) for _, _, beta in topology.per_subnetwork])


def rzf_matrix(Gm: np.ndarray, alpha: float) -> np.ndarray:
    """``G^H (G G^H + N alpha I)^{-1}`` for a K x N channel ``Gm``.

    The shifted Gram matrix is equilibrated to unit diagonal and factored
    with Cholesky.  With ``alpha == 0`` this is the ZF right pseudo-inverse,
    which needs ``N > K`` and full row rank.

    Raises
    ------
    Singular
        ``alpha == 0`` and the equilibrated Gram matrix has a condition
        number above 1e12 (or is not positive definite).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    K, N = Gm.shape
    if alpha == 0 and N <= K:
        raise Singular(f"ZF needs more antennas than users (N={N}, K={K})")
    gram = Gm @ Gm.conj().T
    gram[np.diag_indices(K)] += N * alpha
    d = np.sqrt(gram.diagonal().real)
    if np.any(d == 0):
        raise Singular("zero row in channel matrix")
    s = 1.0 / d
    scaled = gram * s[:, None] * s[None, :]
    try:
        chol = sla.cholesky(scaled, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise Singular(str(exc)) from None
    if alpha == 0:
        anorm = np.abs(scaled).sum(axis=0).max()
        rcond, info = lapack.zpocon(chol, anorm, uplo="L")
        if info != 0 or rcond * COND_LIMIT < 1.0:
            raise Singular(f"Gram condition number ~{1 / max(rcond, 1e-300):.3g}")
    x = sla.cho_solve((chol, True), Gm * s[:, None], check_finite=False)
    return (x * s[:, None]).conj().T


def power_normalization(Fm: np.ndarray, power: float) -> float:
    """``xi = sqrt(P / tr(F F^H))`` so that ``xi F`` meets the power budget."""
    tr = float(np.vdot(Fm, Fm).real)
    if not tr > 0:
        raise ZeroPrecoder("precoder has zero power")
    return float(np.sqrt(power / tr))


def build_precoders(chan: ChannelRealization, alphas, power: float) -> PrecoderSet:
    alphas = np.asarray(alphas, dtype=float)
    F = [rzf_matrix(chan.own(m), a) for m, a in enumerate(alphas)]
    xi = np.array([power_normalization(f, power) for f in F])
    return PrecoderSet(F, xi, alphas)


def _check_dims(m, chan, prec):
    M = chan.num_subnetworks
    if len(prec.F) != M or not 0 <= m < M:
        raise DimensionMismatch("subnetwork count mismatch")
    for n in range(M):
        if chan.G[m][n].shape[1] != prec.F[n].shape[0]:
            raise DimensionMismatch(f"block ({m},{n}) does not match precoder {n}")
    if chan.G[m][m].shape[0] != prec.F[m].shape[1]:
        raise DimensionMismatch(f"precoder {m} has wrong user count")


def subnetwork_sinr(m: int, chan: ChannelRealization, prec: PrecoderSet,
                    noise_power: float) -> RateSample:
    """Exact SINR decomposition for every user of subnetwork ``m``.

    Uses the unnormalized precoders: interference from subnetwork ``n`` is
    weighted by ``xi_n**2 / xi_m**2`` and noise is ``N0 / xi_m**2``.
    """
    _check_dims(m, chan, prec)
    own = chan.G[m][m] @ prec.F[m]
    energy = np.abs(own) ** 2
    desired = energy.diagonal().copy()
    intra = energy.sum(axis=1) - desired
    inter = np.zeros_like(desired)
    xi2 = prec.xi ** 2
    for n in range(chan.num_subnetworks):
        if n == m:
            continue
        cross = chan.G[m][n] @ prec.F[n]
        inter += (xi2[n] / xi2[m]) * (np.abs(cross) ** 2).sum(axis=1)
    intra = np.maximum(intra, 0.0)
    noise = np.full_like(desired, noise_power / xi2[m])
    sinr = desired / (noise + intra + inter)
    return RateSample(sinr, desired, intra, inter, noise)


def subnetwork_sinr_normalized(m: int, chan: ChannelRealization, prec: PrecoderSet,
                               noise_power: float) -> np.ndarray:
    """Same SINR written with the transmitted precoders ``W = xi F``."""
    _check_dims(m, chan, prec)
    total = np.zeros(chan.G[m][m].shape[0])
    for n in range(chan.num_subnetworks):
        e = np.abs(chan.G[m][n] @ (prec.xi[n] * prec.F[n])) ** 2
        total += e.sum(axis=1)
        if n == m:
            desired = e.diagonal().copy()
    return desired / (noise_power + total - desired)


def compute_sinr(m: int, k: int, chan: ChannelRealization, prec: PrecoderSet,
                 noise_power: float) -> RateSample:
    """SINR decomposition of user ``k`` in subnetwork ``m``."""
    _check_dims(m, chan, prec)
    K_m = chan.G[m][m].shape[0]
    if not 0 <= k < K_m:
        raise DimensionMismatch(f"user {k} not in subnetwork {m} (K_m={K_m})")
    g = chan.G[m][m][k]
    e = np.abs(g @ prec.F[m]) ** 2
    desired = float(e[k])
    intra = float(e.sum() - e[k])
    xi2 = prec.xi ** 2
    inter = 0.0
    for n in range(chan.num_subnetworks):
        if n != m:
            inter += xi2[n] / xi2[m] * float((np.abs(chan.G[m][n][k] @ prec.F[n]) ** 2).sum())
    noise = noise_power / xi2[m]
    return RateSample(desired / (noise + intra + inter), desired, intra, inter, noise)


def realization_rates(chan: ChannelRealization, alphas, power: float,
                      noise_power: float) -> list[np.ndarray]:
    """Per-user rates ``log2(1 + SINR)`` of every subnetwork for one draw."""
    prec = build_precoders(chan, alphas, power)
    return [subnetwork_sinr(m, chan, prec, noise_power).rate
            for m in range(chan.num_subnetworks)]


def mc_ergodic_rate(topology: Topology, profile: LargeScaleProfile,
                    config: NetworkConfig, realizations: int | None = None, *,
                    network_index: int = 0, alphas=None,
                    threads: int = 1) -> MonteCarloResult:
    """Monte Carlo estimate of the ergodic per-user rates.

    Realization ``r`` draws its channel from streams keyed by
    ``(seed, network_index, r, attempt, m, n)``, so the result does not depend
    on ``threads``.  ZF draws that come out singular are redrawn with the next
    ``attempt`` and counted in ``resampled``.
    """
    R = config.mc_realizations if realizations is None else int(realizations)
    if R < 1:
        raise ValueError("need at least one realization")
    if alphas is None:
        alphas = subnetwork_alphas(topology, config)
    P, N0, seed = config.tx_power_P, config.noise_power_N0, config.seed

    def one(r):
        for attempt in range(MAX_SINGULAR_RESAMPLES):
            chan = assemble_channel(
                profile,
                lambda m, n: streams.stream(seed, streams.CHANNEL, network_index, r,
                                            attempt, m, n))
            try:
                return realization_rates(chan, alphas, P, N0), attempt
            except Singular as exc:
                log.warning("realization %d attempt %d singular, redrawing: %s",
                            r, attempt, exc)
        raise Singular(f"realization {r}: {MAX_SINGULAR_RESAMPLES} singular draws")

    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(R)))
    else:
        results = [one(r) for r in range(R)]
    # summation in realization order keeps the aggregate thread-independent
    sums = [np.zeros(len(u)) for u in topology.users_of]
    resampled = 0
    for rates, attempts in results:
        resampled += attempts
        for acc, x in zip(sums, rates):
            acc += x
    elapsed = time.perf_counter() - t0
    return MonteCarloResult([s / R for s in sums], topology.central_index, R,
                            elapsed, resampled)


def empirical_resolvent_diag(Gm: np.ndarray, z: float):
    """Diagonals of Q, S = Q^2, Q~ and S~ = Q~^2 at a negative real ``z``.

    ``Q = (G G^H / N - z I)^{-1}`` and ``Q~ = (G^H G / N - z I)^{-1}``, with
    N the number of columns of ``Gm``.
    """
    if not z < 0:
        raise ValueError("z must be negative")
    K, N = Gm.shape

    def diags(A):
        A = A.copy()
        A[np.diag_indices(len(A))] -= z
        Q = sla.cho_solve(sla.cho_factor(A, lower=True, check_finite=False),
                          np.eye(len(A)), check_finite=False)
        # Q is Hermitian, so (Q^2)_ii = sum_j |Q_ij|^2
        return Q.diagonal().real.copy(), (np.abs(Q) ** 2).sum(axis=1)

    q, s = diags(Gm @ Gm.conj().T / N)
    qt, st = diags(Gm.conj().T @ Gm / N)
    return q, s, qt, st
