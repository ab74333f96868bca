"""Constrained random network topologies on a disk (uniform clustering)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PlacementInfeasible

RETRY_BUDGET = 100_000


@dataclass(frozen=True)
class SpatialConfig:
    r_net: float = 2.0
    M: int = 50
    K: int = 400
    r_bs: float = 0.25
    r_m: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.r_net > 0:
            raise ConfigError("r_net", "must be positive")
        if self.M < 1:
            raise ConfigError("M", "must be at least 1")
        if self.K < 0:
            raise ConfigError("K", "must be nonnegative")
        if not 0 <= self.r_bs < 2 * self.r_net:
            raise ConfigError("r_bs", "must lie in [0, 2 r_net)")
        if not 0 <= self.r_m < 2 * self.r_net:
            raise ConfigError("r_m", "must lie in [0, 2 r_net)")

    @property
    def area(self) -> float:
        return math.pi * self.r_net ** 2


@dataclass(frozen=True)
class Topology:
    bs_positions: np.ndarray  # (M, 2)
    mobile_positions: np.ndarray  # (K, 2)

    @property
    def M(self) -> int:
        return len(self.bs_positions)

    @property
    def K(self) -> int:
        return len(self.mobile_positions)


def _draw_on_disk(rng, r_net):
    u, v = rng.random(2)
    rho = r_net * math.sqrt(u)
    phi = 2.0 * math.pi * v
    return rho * math.cos(phi), rho * math.sin(phi)


def _too_close(pts, x, y, radius):
    if radius <= 0 or not pts.shape[0]:
        return False
    d2 = (pts[:, 0] - x) ** 2 + (pts[:, 1] - y) ** 2
    return bool(np.any(d2 < radius * radius))


def _place(count, r_net, rng, own_radius, prior, others, label):
    """Sequentially place ``count`` points, each redrawn until clear of all zones.

    New points keep ``own_radius`` from ``prior`` and from each other, and the
    per-zone radius from every ``(points, radius)`` pair in ``others``.
    """
    prior = np.asarray(prior, dtype=float).reshape(-1, 2)
    n0 = prior.shape[0]
    buf = np.empty((n0 + count, 2))
    buf[:n0] = prior
    for idx in range(count):
        for _ in range(RETRY_BUDGET):
            x, y = _draw_on_disk(rng, r_net)
            if _too_close(buf[:n0 + idx], x, y, own_radius):
                continue
            if any(_too_close(pts, x, y, radius) for pts, radius in others):
                continue
            break
        else:
            raise PlacementInfeasible(
                f"{label} {idx} not placed after {RETRY_BUDGET} draws; configuration too dense"
            )
        buf[n0 + idx] = (x, y)
    return buf[n0:]


def place_points(config: SpatialConfig, rng: np.random.Generator | None = None,
                 mobile_rng: np.random.Generator | None = None,
                 fixed_mobiles=None) -> Topology:
    """Draw base stations, then mobiles, by sequential redraw inside the disk.

    Base stations keep ``r_bs`` from each other. Mobiles keep ``r_m`` from each
    other and from every base station. ``mobile_rng`` lets the mobile draws come
    from a separate stream (so adding mobiles leaves the base stations and the
    earlier mobiles untouched). Without ``rng`` the generator is seeded from
    ``config.seed``. ``fixed_mobiles`` are pre-placed mobiles that the
    base stations must also keep ``r_m`` from; they are returned first.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    mobile_rng = rng if mobile_rng is None else mobile_rng
    fixed = np.empty((0, 2)) if fixed_mobiles is None else np.asarray(fixed_mobiles, float).reshape(-1, 2)
    bs = _place(config.M, config.r_net, rng, config.r_bs, np.empty((0, 2)),
                [(fixed, config.r_m)], "base station")
    n_new = config.K - fixed.shape[0]
    if n_new < 0:
        raise ConfigError("K", "fewer mobiles than fixed mobiles")
    mobiles = _place(n_new, config.r_net, mobile_rng, config.r_m, fixed,
                     [(bs, config.r_m)], "mobile")
    return Topology(bs, np.vstack([fixed, mobiles]))


def nearest_distances(topology: Topology) -> np.ndarray:
    """(M, K) Euclidean distances from every base station to every mobile."""
    diff = topology.bs_positions[:, None, :] - topology.mobile_positions[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def check_topology(topology: Topology, config: SpatialConfig) -> list[str]:
    """Return a list of violated placement invariants (empty when valid)."""
    problems = []
    tol = 1e-12
    for name, pts in (("base station", topology.bs_positions), ("mobile", topology.mobile_positions)):
        if pts.size and np.any(np.hypot(pts[:, 0], pts[:, 1]) > config.r_net * (1 + tol)):
            problems.append(f"{name} outside disk")

    def min_pair(pts):
        if len(pts) < 2:
            return math.inf
        d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        return d[np.triu_indices(len(pts), 1)].min()

    if min_pair(topology.bs_positions) < config.r_bs:
        problems.append("base stations closer than r_bs")
    if min_pair(topology.mobile_positions) < config.r_m:
        problems.append("mobiles closer than r_m")
    if topology.K and topology.M and nearest_distances(topology).min() < config.r_m:
        problems.append("mobile closer than r_m to a base station")
    return problems
