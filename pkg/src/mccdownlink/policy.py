"""Cell association, capacity limiting, fractional power control and SINR bookkeeping."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkTable
from .errors import ConfigError, DegenerateLink
from .outage import OutageProblem

MODES = ("mcc", "conventional")
IDLE_INTERFERENCE = ("full", "pilot")
SNR_SCALING = ("per_bs", "direct")


@dataclass(frozen=True)
class PolicyConfig:
    """Association, power and receiver parameters.

    ``snr_db`` is the per-base-station SNR at unit distance. With
    ``snr_scaling="per_bs"`` a mobile served by ``N`` stations gets SNR ``N`` times
    that (so the product SNR * Omega is independent of ``N``); ``"direct"`` uses
    the value as the mobile's SNR unchanged.
    """

    r_int: float = 0.2
    r_max: float = 0.45
    gamma_pc: float = 0.0
    f_p: float = 0.1
    G: int = 16
    h: float = 2.0 / 3.0
    snr_db: float = 10.0
    mode: str = "mcc"
    strict_refusal: bool = False
    idle_interference: str = "full"
    snr_scaling: str = "per_bs"
    snr: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.r_int <= self.r_max:
            raise ConfigError("r_int", "need 0 <= r_int <= r_max")
        if not 0 <= self.gamma_pc <= 1:
            raise ConfigError("gamma_pc", "must lie in [0, 1]")
        if not 0 <= self.f_p < 1:
            raise ConfigError("f_p", "must lie in [0, 1)")
        if int(self.G) != self.G or self.G < 1:
            raise ConfigError("G", "must be a positive integer")
        if not 0 < self.h <= 1:
            raise ConfigError("h", "must lie in (0, 1]")
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}")
        if self.idle_interference not in IDLE_INTERFERENCE:
            raise ConfigError("idle_interference", f"must be one of {IDLE_INTERFERENCE}")
        if self.snr_scaling not in SNR_SCALING:
            raise ConfigError("snr_scaling", f"must be one of {SNR_SCALING}")
        object.__setattr__(self, "G", int(self.G))
        object.__setattr__(self, "snr", 10.0 ** (self.snr_db / 10.0))

    @property
    def spread(self) -> float:
        return self.G / self.h


@dataclass(frozen=True)
class Assignment:
    """Who serves whom after association, capacity limiting and power allocation.

    ``powers[i, j]`` is the power from base station ``i`` to mobile ``j`` as a
    fraction of ``P0`` (zero off the serving links).
    """

    serving_sets: list
    served_sets: list
    powers: np.ndarray
    denied: np.ndarray

    @property
    def loads(self) -> np.ndarray:
        return np.array([len(s) for s in self.served_sets], dtype=int)


def associate(link_table: LinkTable, cfg: PolicyConfig) -> list[np.ndarray]:
    """Raw serving set of every mobile from its effective distances.

    A mobile within ``r_int`` of its closest station is served by that station
    alone; otherwise by every station closer than ``r_max`` (possibly none).
    Conventional mode always keeps only the closest station, if within ``r_max``.
    """
    d = link_table.d_eff
    M, K = d.shape
    sets = []
    for j in range(K):
        col = d[:, j]
        best = int(np.argmin(col))
        if cfg.mode == "conventional":
            chosen = np.array([best]) if col[best] < cfg.r_max else np.empty(0, dtype=int)
        elif col[best] <= cfg.r_int:
            chosen = np.array([best])
        else:
            chosen = np.flatnonzero(col < cfg.r_max)
        sets.append(chosen.astype(int))
    return sets


def _served_from_serving(serving_sets, M):
    served = [[] for _ in range(M)]
    for j, s in enumerate(serving_sets):
        for i in s:
            served[int(i)].append(j)
    return served


def enforce_capacity(serving_sets, link_table: LinkTable, G: int, strict: bool = False) -> Assignment:
    """Limit every cell to the ``G`` mobiles with the smallest effective distance.

    Refusal is per cell: a refused mobile keeps its other serving stations and
    is denied only if none remain. With ``strict`` any refusal denies the mobile
    outright. Ties in effective distance keep the lower mobile index.
    """
    d = link_table.d_eff
    M, K = d.shape
    serving = [set(int(i) for i in s) for s in serving_sets]
    served = _served_from_serving(serving_sets, M)
    refused = set()
    for i in range(M):
        if len(served[i]) <= G:
            continue
        ranked = sorted(served[i], key=lambda j: (d[i, j], j))
        for j in ranked[G:]:
            serving[j].discard(i)
            refused.add(j)
    if strict:
        for j in refused:
            serving[j].clear()
    final = [np.array(sorted(s), dtype=int) for s in serving]
    served = [np.array(sorted(v), dtype=int) for v in _served_from_serving(final, M)]
    denied = np.array([s.size == 0 for s in final], dtype=bool)
    return Assignment(final, served, np.zeros((M, K)), denied)


def allocate_power(assignment: Assignment, link_table: LinkTable, cfg: PolicyConfig, alpha: float) -> Assignment:
    """Fractional power control; ``gamma_pc = 0`` is ETP and ``gamma_pc = 1`` is ERP."""
    M, K = link_table.shape
    powers = np.zeros((M, K))
    g = cfg.gamma_pc
    for i, mobiles in enumerate(assignment.served_sets):
        if mobiles.size == 0:
            continue
        da = link_table.d_eff[i, mobiles] ** alpha
        share = (1.0 - g) / mobiles.size + g * da / da.sum()
        powers[i, mobiles] = (1.0 - cfg.f_p) * share
    return dataclasses.replace(assignment, powers=powers)


def build_outage_problem(j: int, assignment: Assignment, link_table: LinkTable,
                         cfg: PolicyConfig, alpha: float, beta: float = 1.0) -> OutageProblem:
    """Normalized serving and interfering powers for mobile ``j``.

    Interfering stations contribute their whole transmit power ``P0``; a station
    serving nobody transmits ``P0`` or, with ``idle_interference="pilot"``, only
    its pilot share ``f_p P0``.
    """
    serving = assignment.serving_sets[j]
    if serving.size == 0:
        raise ValueError(f"mobile {j} is denied service")
    n_j = serving.size
    gain = link_table.d_eff[:, j] ** (-alpha) / n_j
    omega_s = assignment.powers[serving, j] * gain[serving]
    if np.any(omega_s <= 0):
        raise DegenerateLink(f"mobile {j} has a serving link without power")

    mask = np.ones(link_table.shape[0], dtype=bool)
    mask[serving] = False
    tx = np.ones(link_table.shape[0])
    if cfg.idle_interference == "pilot":
        tx[assignment.loads == 0] = cfg.f_p
    omega_i = tx[mask] * gain[mask]
    m_i = link_table.m[mask, j].astype(float)
    keep = omega_i > 0
    snr = cfg.snr * n_j if cfg.snr_scaling == "per_bs" else cfg.snr
    return OutageProblem(
        serving_omega=omega_s,
        serving_m=link_table.m[serving, j],
        interferer_omega=omega_i[keep],
        interferer_m=m_i[keep],
        beta=beta,
        snr=snr,
        spread=cfg.spread,
    )
