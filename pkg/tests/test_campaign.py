import math

import numpy as np
import pytest

from mccdownlink.campaign import (
    CCDF_GRID,
    CampaignConfig,
    area_spectral_efficiency,
    draw_network,
    evaluate_policy,
    optimize_radii,
    outage_curve,
    rate_ccdf,
    reference_problem,
    reference_topology,
    run_campaign,
    run_realization,
)
from mccdownlink.channel import LinkTable, build_link_table
from mccdownlink.errors import ConfigError
from mccdownlink.outage import OutageBatch
from mccdownlink.policy import PolicyConfig, associate, enforce_capacity
from mccdownlink.spatial import SpatialConfig


def small_config(**changes):
    cfg = CampaignConfig(spatial=SpatialConfig(M=12, K=60, r_net=1.0), realizations=3, base_seed=5)
    return cfg.replace(**changes)


def test_no_mobiles():
    cfg = small_config(spatial__K=0)
    assert run_realization(cfg, 0).rates.size == 0
    res = run_campaign(cfg)
    assert res.rates.size == 0
    assert res.ase == 0.0 and res.mean_rate == 0.0


def test_single_link_rate_is_analytic():
    links = LinkTable(d=np.ones((1, 1)), xi=np.zeros((1, 1)), d_eff=np.ones((1, 1)),
                      m=np.ones((1, 1), dtype=int))
    policy = PolicyConfig(r_int=0.5, r_max=2.0, f_p=0.0)
    res = evaluate_policy(links, policy, 3.0, 0.1)
    beta = policy.snr * 1.0 * math.log(1 / 0.9)
    # a 1e-6 outage tolerance moves the threshold by at most about 1e-5 relative
    assert res.betas[0] == pytest.approx(beta, rel=2e-5)
    assert res.rates[0] == pytest.approx(math.log2(1 + beta), rel=1e-5)


def test_realization_is_deterministic():
    cfg = small_config()
    a, b = run_realization(cfg, 17), run_realization(cfg, 17)
    assert a.rates.tobytes() == b.rates.tobytes()
    assert not np.array_equal(a.rates, run_realization(cfg, 18).rates)


def test_ase_arithmetic():
    assert area_spectral_efficiency(1.0, 400, 2.0, 0.1) == pytest.approx(400 / (4 * math.pi) * 0.9)
    assert area_spectral_efficiency(1.0, 400, 2.0, 0.1) == pytest.approx(28.65, abs=5e-3)


def test_ccdf_shape():
    out = rate_ccdf([0.0, 0.0, 1.0, 2.5])
    assert out[0].tolist() == [0.0, 0.5]
    assert np.all(np.diff(out[:, 1]) <= 0)
    assert np.allclose(out[:, 0], CCDF_GRID)
    assert rate_ccdf([])[:, 1].max() == 0.0


def test_campaign_summary_consistency():
    cfg = small_config()
    res = run_campaign(cfg)
    assert res.rates.size == 3 * 60
    recomputed = area_spectral_efficiency(res.rates.mean(), 60, 1.0, cfg.eps_hat)
    assert abs(recomputed - res.ase) <= 1e-12 * max(1.0, res.ase)
    assert res.ase == pytest.approx(res.per_realization_ase.mean(), rel=1e-12)
    assert res.ccdf[0, 1] == pytest.approx(np.mean(res.rates > 0))
    assert res.ccdf[0, 1] <= 1 - res.denied_fraction + 1e-12
    assert np.all(np.diff(res.ccdf[:, 1]) <= 0)
    assert res.seeds.tolist() == [5, 6, 7]


def test_ccdf_at_zero_is_served_fraction():
    cfg = small_config(policy__r_max=0.3, policy__r_int=0.05)
    res = run_campaign(cfg)
    parts = [run_realization(cfg, int(seed)) for seed in res.seeds]
    denied = sum(int(p.denied.sum()) for p in parts)
    hopeless = sum(p.hopeless for p in parts)
    assert denied > 0
    assert res.denied_fraction == pytest.approx(denied / res.rates.size)
    assert res.ccdf[0, 1] == pytest.approx(1 - (denied + hopeless) / res.rates.size)


def test_campaign_reproducible_and_parallel_identical():
    cfg = small_config(realizations=2)
    a, b = run_campaign(cfg), run_campaign(cfg, n_jobs=2)
    assert a.rates.tobytes() == b.rates.tobytes()
    assert a.ccdf.tobytes() == b.ccdf.tobytes()
    assert a.ase == b.ase


def test_more_mobiles_only_add_refusals():
    """Extra mobiles keep the earlier ones in place, so those can only lose service."""
    base = CampaignConfig(spatial=SpatialConfig(K=400), policy=PolicyConfig(r_int=0.05, r_max=0.6))
    for seed in range(3):
        prev = None
        for K in (200, 400, 800):
            cfg = base.replace(spatial__K=K)
            _, links = draw_network(cfg, seed)
            denied = set(np.flatnonzero(evaluate_policy(links, cfg.policy, 3.0, 0.1).denied).tolist())
            if prev is not None:
                assert prev <= denied
            prev = denied


def test_idle_pilot_only_raises_rates():
    cfg = small_config(spatial__M=30, spatial__K=40, policy__r_max=0.2, policy__r_int=0.05)
    _, links = draw_network(cfg, 3)
    full = evaluate_policy(links, cfg.policy, 3.0, 0.1)
    pilot_policy = cfg.replace(policy__idle_interference="pilot").policy
    pilot = evaluate_policy(links, pilot_policy, 3.0, 0.1)
    a = enforce_capacity(associate(links, cfg.policy), links, cfg.policy.G)
    assert np.any(a.loads == 0)
    assert np.all(pilot.betas >= full.betas * (1 - 1e-4))
    assert pilot.rates.mean() > full.rates.mean()


def test_optimize_single_point():
    cfg = small_config(realizations=2)
    res = optimize_radii(cfg, [0.1], [0.3])
    assert (res.r_int, res.r_max) == (0.1, 0.3)
    assert res.ase == pytest.approx(run_campaign(cfg.replace(policy__r_int=0.1, policy__r_max=0.3)).ase)


def test_optimize_skips_invalid_pairs_and_rejects_empty_grid():
    cfg = small_config(realizations=1)
    res = optimize_radii(cfg, [0.1, 0.4], [0.2, 0.3])
    assert {(a, b) for a, b, _ in res.table} == {(0.1, 0.2), (0.1, 0.3)}
    with pytest.raises(ConfigError):
        optimize_radii(cfg, [0.5], [0.2])


def test_conventional_ignores_cell_interior_radius():
    cfg = small_config(realizations=2, policy__mode="conventional")
    a = optimize_radii(cfg, [0.05], [0.2, 0.3, 0.4])
    b = optimize_radii(cfg, [0.05, 0.1, 0.15], [0.2, 0.3, 0.4])
    assert (a.r_max, a.ase) == (b.r_max, b.ase)
    by_max = {}
    for _, r_max, ase in b.table:
        by_max.setdefault(r_max, set()).add(ase)
    assert all(len(v) == 1 for v in by_max.values())


def test_optimize_tie_prefers_smaller_radii():
    # with no mobiles every grid point ties at zero
    cfg = small_config(realizations=1, spatial__K=0)
    res = optimize_radii(cfg, [0.1, 0.2], [0.3, 0.2])
    assert (res.r_int, res.r_max) == (0.1, 0.2)


def test_replace_nested_fields():
    cfg = CampaignConfig().replace(policy__gamma_pc=1.0, spatial__K=80, eps_hat=0.05)
    assert cfg.policy.gamma_pc == 1.0 and cfg.spatial.K == 80 and cfg.eps_hat == 0.05
    with pytest.raises(ConfigError):
        CampaignConfig(eps_hat=1.0)
    with pytest.raises(ConfigError):
        CampaignConfig(realizations=0)


def test_outage_curves_shape():
    cfg = CampaignConfig()
    rng = np.random.default_rng(0)
    top = reference_topology(cfg.spatial, rng)
    assert np.array_equal(top.mobile_positions[0], [0.0, 0.0])
    links = build_link_table(top, cfg.channel, rng)
    policy = cfg.replace(policy__snr_scaling="direct").policy
    problem = reference_problem(links, 0, 4, policy, 3.0)
    assert problem.n_serving == 4 and problem.n_interferers == 46
    rows = outage_curve(problem, [-10, 0, 10], np.arange(-10, 62, 2.0))
    eps = {b: np.array([r["eps_closed_form"] for r in rows if r["beta_db"] == b]) for b in (-10, 0, 10)}
    for b in eps:
        assert np.all(np.diff(eps[b]) <= 1e-12)
    assert np.all(eps[10] >= eps[0]) and np.all(eps[0] >= eps[-10])
    assert all(math.isnan(r["eps_oracle"]) for r in rows)


def test_outage_curve_with_oracle():
    cfg = CampaignConfig()
    rng = np.random.default_rng(1)
    top = reference_topology(cfg.spatial, rng)
    links = build_link_table(top, cfg.channel, rng)
    problem = reference_problem(links, 0, 4, cfg.policy, 3.0)
    rows = outage_curve(problem, [0], [0.0, 10.0], oracle_trials=20_000, rng=rng)
    for r in rows:
        assert abs(r["eps_oracle"] - r["eps_closed_form"]) <= r["oracle_halfwidth"] + 1e-12
    batch = OutageBatch([problem.with_beta(1.0).with_snr(1.0)]).cdf_z()[0]
    assert rows[0]["eps_closed_form"] == pytest.approx(batch)
