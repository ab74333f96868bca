"""Monte Carlo campaigns over network realizations."""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, LinkTable, build_link_table
from .errors import ConfigError, PlacementInfeasible
from .outage import OutageBatch, OutageProblem, mc_outage_oracle, shannon_rate
from .policy import PolicyConfig, allocate_power, associate, build_outage_problem, enforce_capacity
from .spatial import SpatialConfig, Topology, place_points

log = logging.getLogger(__name__)

CCDF_GRID = np.linspace(0.0, 10.0, 201)
DEFAULT_R_INT_GRID = tuple(np.round(np.arange(1, 11) * 0.05, 2))
DEFAULT_R_MAX_GRID = tuple(np.round(np.arange(1, 21) * 0.05, 2))


@dataclass(frozen=True)
class CampaignConfig:
    spatial: SpatialConfig = field(default_factory=SpatialConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    eps_hat: float = 0.1
    realizations: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if not 0 < self.eps_hat < 1:
            raise ConfigError("eps_hat", "must lie in (0, 1)")
        if self.realizations < 1:
            raise ConfigError("realizations", "must be at least 1")

    def replace(self, **changes) -> CampaignConfig:
        """Copy with top-level or nested fields changed (``policy__gamma_pc=1``)."""
        nested: dict[str, dict] = {}
        top = {}
        for key, value in changes.items():
            if "__" in key:
                part, name = key.split("__", 1)
                nested.setdefault(part, {})[name] = value
            else:
                top[key] = value
        for part, vals in nested.items():
            top[part] = dataclasses.replace(getattr(self, part), **vals)
        return dataclasses.replace(self, **top)


@dataclass
class RealizationResult:
    rates: np.ndarray
    betas: np.ndarray
    denied: np.ndarray
    n_serving: np.ndarray
    hopeless: int = 0


@dataclass
class CampaignResult:
    rates: np.ndarray
    realization: np.ndarray
    mean_rate: float
    ccdf: np.ndarray  # (n, 2): r, P[R > r]
    ase: float
    denied_fraction: float
    per_realization_ase: np.ndarray
    seeds: np.ndarray

    @property
    def n_realizations(self) -> int:
        return len(self.seeds)


def network_streams(seed: int):
    """Independent generators for base stations, mobiles and shadowing."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def draw_network(config: CampaignConfig, seed: int) -> tuple[Topology, LinkTable]:
    bs_rng, mobile_rng, shadow_rng = network_streams(seed)
    topology = place_points(config.spatial, bs_rng, mobile_rng)
    return topology, build_link_table(topology, config.channel, shadow_rng)


def evaluate_policy(links: LinkTable, policy: PolicyConfig, alpha: float, eps_hat: float) -> RealizationResult:
    """Rates of every mobile in one realization under ``policy``."""
    K = links.shape[1]
    assignment = enforce_capacity(associate(links, policy), links, policy.G, strict=policy.strict_refusal)
    assignment = allocate_power(assignment, links, policy, alpha)
    served = np.flatnonzero(~assignment.denied)
    betas = np.zeros(K)
    rates = np.zeros(K)
    hopeless = 0
    if served.size:
        problems = [build_outage_problem(j, assignment, links, policy, alpha) for j in served]
        b = OutageBatch(problems).invert(eps_hat)
        hopeless = int(np.isnan(b).sum())
        b = np.nan_to_num(b, nan=0.0)
        betas[served] = b
        rates[served] = shannon_rate(b)
    n_serving = np.array([s.size for s in assignment.serving_sets], dtype=int)
    return RealizationResult(rates, betas, assignment.denied, n_serving, hopeless)


def run_realization(config: CampaignConfig, seed: int) -> RealizationResult:
    _, links = draw_network(config, seed)
    return evaluate_policy(links, config.policy, config.channel.alpha, config.eps_hat)


def area_spectral_efficiency(mean_rate: float, K: int, r_net: float, eps_hat: float) -> float:
    return K / (math.pi * r_net ** 2) * (1.0 - eps_hat) * mean_rate


def rate_ccdf(rates, grid=CCDF_GRID) -> np.ndarray:
    rates = np.sort(np.asarray(rates, dtype=float))
    if rates.size == 0:
        return np.column_stack([grid, np.zeros_like(grid)])
    exceed = 1.0 - np.searchsorted(rates, grid, side="right") / rates.size
    return np.column_stack([grid, exceed])


def _safe_realization(args):
    config, seed = args
    try:
        return seed, run_realization(config, seed)
    except PlacementInfeasible as exc:
        log.warning("realization %d skipped: %s", seed, exc)
        return seed, None


def _map(fn, items, n_jobs):
    if n_jobs == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def run_campaign(config: CampaignConfig, n_jobs: int = 1) -> CampaignResult:
    """Average rates over ``config.realizations`` seeded network draws.

    Denied and hopeless mobiles count with rate zero. Results are reduced in
    seed order, so serial and parallel runs are identical.
    """
    seeds = [config.base_seed + r for r in range(config.realizations)]
    outcomes = _map(_safe_realization, [(config, s) for s in seeds], n_jobs)
    kept = [(s, res) for s, res in outcomes if res is not None]
    if not kept:
        raise PlacementInfeasible("every realization failed placement")
    return summarize(config, kept)


def summarize(config: CampaignConfig, kept) -> CampaignResult:
    K = config.spatial.K
    rates = np.concatenate([res.rates for _, res in kept]) if K else np.empty(0)
    realization = np.repeat(np.arange(len(kept)), K)
    denied = np.concatenate([res.denied for _, res in kept]) if K else np.empty(0, bool)
    mean_rate = float(rates.mean()) if rates.size else 0.0
    per_real = np.array([
        area_spectral_efficiency(float(res.rates.mean()) if K else 0.0, K, config.spatial.r_net, config.eps_hat)
        for _, res in kept
    ])
    return CampaignResult(
        rates=rates,
        realization=realization,
        mean_rate=mean_rate,
        ccdf=rate_ccdf(rates),
        ase=area_spectral_efficiency(mean_rate, K, config.spatial.r_net, config.eps_hat),
        denied_fraction=float(denied.mean()) if denied.size else 0.0,
        per_realization_ase=per_real,
        seeds=np.array([s for s, _ in kept], dtype=np.int64),
    )


@dataclass
class OptimizeResult:
    r_int: float
    r_max: float
    ase: float
    table: list  # (r_int, r_max, ase)
    per_realization: dict  # (r_int, r_max) -> per-realization ase array

    def best_per_realization(self) -> np.ndarray:
        return self.per_realization[(self.r_int, self.r_max)]


def optimize_radii(config: CampaignConfig, r_int_grid=None, r_max_grid=None) -> OptimizeResult:
    """Grid search of ``(r_int, r_max)`` maximizing area spectral efficiency.

    Every grid point is evaluated on the same network realizations. Pairs with
    ``r_int > r_max`` are skipped; ties prefer the smaller ``r_max``, then the
    smaller ``r_int``. In conventional mode ``r_int`` is irrelevant and only the
    first admissible ``r_int`` per ``r_max`` is evaluated.
    """
    r_int_grid = DEFAULT_R_INT_GRID if r_int_grid is None else r_int_grid
    r_max_grid = DEFAULT_R_MAX_GRID if r_max_grid is None else r_max_grid
    pairs = [(float(a), float(b)) for a in r_int_grid for b in r_max_grid if a <= b]
    if config.policy.mode == "conventional":
        seen, unique = set(), []
        for a, b in pairs:
            if b not in seen:
                seen.add(b)
                unique.append((a, b))
        pairs = unique
    if not pairs:
        raise ConfigError("r_int_grid", "no grid pair satisfies r_int <= r_max")
    K = config.spatial.K
    alpha = config.channel.alpha
    per = {p: [] for p in pairs}
    policies = {p: dataclasses.replace(config.policy, r_int=p[0], r_max=p[1]) for p in pairs}
    for r in range(config.realizations):
        seed = config.base_seed + r
        try:
            _, links = draw_network(config, seed)
        except PlacementInfeasible as exc:
            log.warning("realization %d skipped: %s", seed, exc)
            continue
        for p in pairs:
            res = evaluate_policy(links, policies[p], alpha, config.eps_hat)
            mean = float(res.rates.mean()) if K else 0.0
            per[p].append(area_spectral_efficiency(mean, K, config.spatial.r_net, config.eps_hat))
    per = {p: np.array(v) for p, v in per.items()}
    if not len(per[pairs[0]]):
        raise PlacementInfeasible("every realization failed placement")
    table = [(a, b, float(per[(a, b)].mean())) for a, b in pairs]
    best = min(table, key=lambda row: (-row[2], row[1], row[0]))
    if config.policy.mode == "conventional":
        # r_int has no effect: report every grid pair with its r_max's value
        full = [(float(a), float(b)) for a in r_int_grid for b in r_max_grid if a <= b]
        by_max = {b: per[(a, b)] for a, b in pairs}
        per = {(a, b): by_max[b] for a, b in full}
        table = [(a, b, float(per[(a, b)].mean())) for a, b in full]
    return OptimizeResult(best[0], best[1], best[2], table, per)


# ---------------------------------------------------------------------------
# Single-mobile outage curves
# ---------------------------------------------------------------------------


def reference_topology(spatial: SpatialConfig, rng: np.random.Generator) -> Topology:
    """Base stations drawn as usual around one mobile fixed at the origin."""
    return place_points(dataclasses.replace(spatial, K=1), rng, fixed_mobiles=[(0.0, 0.0)])


def reference_problem(links: LinkTable, j: int, n_serving: int, policy: PolicyConfig,
                      alpha: float) -> OutageProblem:
    """Outage problem for mobile ``j`` served by its ``n_serving`` closest stations.

    Each serving station dedicates its non-pilot power to this mobile; all other
    stations interfere at full power. The configured SNR is used directly.
    """
    order = np.argsort(links.d_eff[:, j], kind="stable")
    serving = np.sort(order[:n_serving])
    n = serving.size
    gain = links.d_eff[:, j] ** (-alpha) / n
    mask = np.ones(links.shape[0], dtype=bool)
    mask[serving] = False
    return OutageProblem(
        serving_omega=(1.0 - policy.f_p) * gain[serving],
        serving_m=links.m[serving, j],
        interferer_omega=gain[mask],
        interferer_m=links.m[mask, j].astype(float),
        beta=1.0,
        snr=policy.snr,
        spread=policy.spread,
    )


def outage_curve(problem: OutageProblem, beta_db_list, snr_db_grid, oracle_trials: int = 0,
                 rng: np.random.Generator | None = None) -> list[dict]:
    """Outage probability against SNR for each threshold, optionally with the oracle."""
    rows = []
    snr_db_grid = np.asarray(snr_db_grid, dtype=float)
    for beta_db in beta_db_list:
        beta = 10.0 ** (beta_db / 10.0)
        probs = [problem.with_beta(beta).with_snr(10.0 ** (s / 10.0)) for s in snr_db_grid]
        eps = OutageBatch(probs).cdf_z()
        for s, pr, e in zip(snr_db_grid, probs, eps):
            row = {"snr_db": float(s), "beta_db": float(beta_db), "eps_closed_form": float(e),
                   "eps_oracle": math.nan, "oracle_halfwidth": math.nan}
            if oracle_trials:
                est, hw = mc_outage_oracle(pr, oracle_trials, rng)
                row["eps_oracle"], row["oracle_halfwidth"] = est, hw
            rows.append(row)
    return rows
