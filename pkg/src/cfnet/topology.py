"""Network geometry, K-means subnetwork formation and large-scale fading."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import streams
from .config import ConfigError, NetworkConfig

__all__ = [
    "DegenerateClustering",
    "Topology",
    "LargeScaleProfile",
    "place_uniform",
    "kmeans_pp_init",
    "lloyd",
    "cluster_kmeans",
    "central_subnetwork",
    "path_loss",
    "build_large_scale",
    "build_topology",
    "generate_network",
]

log = logging.getLogger(__name__)

MAX_RESAMPLES = 1000


class DegenerateClustering(RuntimeError):
    """A subnetwork ended up without a BS or without a user."""


@dataclass(frozen=True, eq=False)
class Topology:
    """Node positions and their partition into subnetworks.

    BS ``b`` owns antennas ``b*antennas_per_bs ... (b+1)*antennas_per_bs - 1``.
    Within a subnetwork, users and antennas keep their global (ascending)
    order, so ``users_of[m][k]`` is the global index of user ``k`` of
    subnetwork ``m``.
    """

    area_side: float
    bs_positions: np.ndarray
    user_positions: np.ndarray
    bs_assignment: np.ndarray
    user_assignment: np.ndarray
    num_subnetworks: int
    antennas_per_bs: int = 1
    central_index: int = field(default=-1)

    def __post_init__(self):
        for name in ("bs_positions", "user_positions", "bs_assignment", "user_assignment"):
            getattr(self, name).setflags(write=False)
        if self.central_index < 0:
            object.__setattr__(self, "central_index", central_subnetwork(self))

    @property
    def num_users(self) -> int:
        return len(self.user_positions)

    @property
    def num_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def num_antennas(self) -> int:
        return self.num_bs * self.antennas_per_bs

    @cached_property
    def antenna_owner(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_bs), self.antennas_per_bs)

    @cached_property
    def users_of(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.user_assignment == m) for m in range(self.num_subnetworks)]

    @cached_property
    def antennas_of(self) -> list[np.ndarray]:
        owner_sub = self.bs_assignment[self.antenna_owner]
        return [np.flatnonzero(owner_sub == m) for m in range(self.num_subnetworks)]

    @property
    def per_subnetwork(self) -> list[tuple[int, int, float]]:
        """``(K_m, N_m, beta_m)`` for every subnetwork."""
        out = []
        for users, ants in zip(self.users_of, self.antennas_of):
            k, n = len(users), len(ants)
            out.append((k, n, n / k if k else float("inf")))
        return out

    def to_dict(self) -> dict:
        return {
            "area_side": self.area_side,
            "num_subnetworks": self.num_subnetworks,
            "antennas_per_bs": self.antennas_per_bs,
            "central_index": self.central_index,
            "bs_positions": self.bs_positions.tolist(),
            "user_positions": self.user_positions.tolist(),
            "bs_assignment": self.bs_assignment.tolist(),
            "user_assignment": self.user_assignment.tolist(),
            "per_subnetwork": [
                {"K_m": k, "N_m": n, "beta_m": b} for k, n, b in self.per_subnetwork
            ],
        }


@dataclass(frozen=True, eq=False)
class LargeScaleProfile:
    """Blocks ``l[m][n]`` (K_m x N_n) and ``theta[m][n] = l[m][n]**2``."""

    l: list[list[np.ndarray]]
    theta: list[list[np.ndarray]]

    @property
    def num_subnetworks(self) -> int:
        return len(self.l)

    def own(self, m: int) -> np.ndarray:
        """Variance profile of subnetwork ``m`` with its own antennas."""
        return self.theta[m][m]


def place_uniform(config: NetworkConfig, rng: np.random.Generator):
    """Draw BS and user positions i.i.d. uniform on the square [0, D]^2."""
    side = config.area_side_D
    bs = rng.uniform(0.0, side, size=(config.num_bs, 2))
    users = rng.uniform(0.0, side, size=(config.total_users_K, 2))
    return bs, users


def kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center is drawn with probability
    proportional to the squared distance to the nearest chosen center."""
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"cannot seed {k} centers from {n} points")
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def _assign(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def lloyd(points: np.ndarray, centers: np.ndarray, tol: float, max_iter: int = 100):
    """Lloyd iterations from ``centers``.

    Stops once no centroid moves by ``tol`` or more, or after ``max_iter``
    sweeps.  An empty cluster keeps its previous centroid.  Returns the
    final labels and centroids.
    """
    centers = np.array(centers, dtype=float)
    k = len(centers)
    for _ in range(max_iter):
        labels = _assign(points, centers)
        new = centers.copy()
        for c in range(k):
            members = points[labels == c]
            if len(members):
                new[c] = members.mean(axis=0)
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < tol:
            break
    return _assign(points, centers), centers


def cluster_kmeans(bs_positions, user_positions, num_subnetworks: int,
                   rng: np.random.Generator, *, scale: float | None = None,
                   max_iter: int = 100):
    """Partition BSs and users jointly into ``num_subnetworks`` clusters.

    K-means runs on the union of BS and user coordinates.  The stopping
    tolerance is ``1e-6 * scale``; ``scale`` defaults to the larger side of
    the points' bounding box.

    Returns
    -------
    bs_assignment, user_assignment : ndarray of int

    Raises
    ------
    DegenerateClustering
        If a cluster contains no BS or no user.
    """
    bs_positions = np.asarray(bs_positions, dtype=float)
    user_positions = np.asarray(user_positions, dtype=float)
    points = np.vstack([bs_positions, user_positions])
    if scale is None:
        scale = float(np.ptp(points, axis=0).max()) or 1.0
    if num_subnetworks == 1:
        labels = np.zeros(len(points), dtype=np.intp)
    else:
        if num_subnetworks > len(points):
            raise DegenerateClustering("more clusters than nodes")
        centers = kmeans_pp_init(points, num_subnetworks, rng)
        labels, _ = lloyd(points, centers, 1e-6 * scale, max_iter)
    nb = len(bs_positions)
    bs_lab, user_lab = labels[:nb], labels[nb:]
    bs_count = np.bincount(bs_lab, minlength=num_subnetworks)
    user_count = np.bincount(user_lab, minlength=num_subnetworks)
    if bs_count.min() == 0 or user_count.min() == 0:
        raise DegenerateClustering(
            f"empty subnetwork side (BS counts {bs_count.tolist()}, "
            f"user counts {user_count.tolist()})")
    return bs_lab.astype(np.intp), user_lab.astype(np.intp)


def central_subnetwork(topology: Topology) -> int:
    """Subnetwork whose node centroid is nearest the area center.

    Ties go to the lowest index.
    """
    center = np.full(2, topology.area_side / 2.0)
    best, best_d = 0, np.inf
    for m in range(topology.num_subnetworks):
        pts = np.vstack([topology.bs_positions[topology.bs_assignment == m],
                         topology.user_positions[topology.user_assignment == m]])
        if not len(pts):
            continue
        d = np.linalg.norm(pts.mean(axis=0) - center)
        if d < best_d:
            best, best_d = m, d
    return best


def path_loss(d, d0: float, d1: float):
    """Three-slope distance attenuation.

    ``d**-1.75`` beyond ``d1``, ``d1**-0.75 / d`` between ``d0`` and ``d1``,
    and the constant ``d1**-0.75 / d0`` inside ``d0``.  Accepts scalars or
    arrays.
    """
    if not 0 < d0 < d1:
        raise ValueError(f"invalid thresholds d0={d0}, d1={d1}")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("distances must be nonnegative")
    near = d1 ** -0.75 / d0
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(d > d1, d ** -1.75, d1 ** -0.75 / np.maximum(d, d0))
    out = np.where(d <= d0, near, out)
    return out[()] if out.ndim == 0 else out


def build_large_scale(topology: Topology, d0: float, d1: float) -> LargeScaleProfile:
    """Large-scale coefficients for every (user subnetwork, BS subnetwork)."""
    diff = topology.user_positions[:, None, :] - topology.bs_positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    per_bs = path_loss(dist, d0, d1)
    full = per_bs[:, topology.antenna_owner]
    l_blocks, t_blocks = [], []
    for users in topology.users_of:
        rows = full[users]
        l_row = [np.ascontiguousarray(rows[:, ants]) for ants in topology.antennas_of]
        for blk in l_row:
            blk.setflags(write=False)
        t_row = [blk * blk for blk in l_row]
        for blk in t_row:
            blk.setflags(write=False)
        l_blocks.append(l_row)
        t_blocks.append(t_row)
    return LargeScaleProfile(l_blocks, t_blocks)


def build_topology(config: NetworkConfig, rng: np.random.Generator) -> Topology:
    """One attempt: positions, clustering and the ZF antenna-ratio check.

    Raises :class:`DegenerateClustering` when the draw must be discarded.
    """
    bs, users = place_uniform(config, rng)
    bs_lab, user_lab = cluster_kmeans(bs, users, config.num_subnetworks_M, rng,
                                      scale=config.area_side_D)
    topo = Topology(config.area_side_D, bs, users, bs_lab, user_lab,
                    config.num_subnetworks_M, config.antennas_per_bs)
    if config.reg_policy.is_zf:
        bad = [m for m, (_, _, b) in enumerate(topo.per_subnetwork) if not b > 1]
        if bad:
            raise DegenerateClustering(f"ZF needs beta_m > 1; violated in {bad}")
    return topo


def generate_network(config: NetworkConfig, index: int = 0):
    """Network realization ``index`` of a scenario.

    Degenerate draws are discarded and the whole realization is redrawn from
    the same stream, so the result depends only on ``(config.seed, index)``.

    Returns
    -------
    topology : Topology
    profile : LargeScaleProfile
    """
    rng = streams.stream(config.seed, streams.TOPOLOGY, index)
    for attempt in range(MAX_RESAMPLES):
        try:
            topo = build_topology(config, rng)
        except DegenerateClustering as exc:
            log.debug("network %d attempt %d rejected: %s", index, attempt, exc)
            continue
        if attempt:
            log.info("network %d accepted after %d resamples", index, attempt)
        profile = build_large_scale(topo, config.near_threshold_d0, config.far_threshold_d1)
        return topo, profile
    raise ConfigError(
        f"no valid network after {MAX_RESAMPLES} draws; "
        "too few nodes per subnetwork for this M/K/beta combination")
