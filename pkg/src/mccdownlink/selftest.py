"""Quick agreement check between the closed form and its oracles."""

from __future__ import annotations

import math

import numpy as np

from .outage import (
    OutageProblem,
    appendix_integral_oracle,
    mc_outage_oracle,
    outage_probability,
    partial_fraction_xi,
    xi_table,
)


def random_problem(rng: np.random.Generator, max_serving: int = 4, max_interferers: int = 46,
                   spread: float = 24.0) -> OutageProblem:
    """Random problem with log-uniform powers and Nakagami parameters in {1, 2, 3}."""
    n_s = int(rng.integers(1, max_serving + 1))
    n_i = int(rng.integers(0, max_interferers + 1))
    return OutageProblem(
        serving_omega=10.0 ** rng.uniform(-1, 1, n_s),
        serving_m=rng.integers(1, 4, n_s),
        interferer_omega=10.0 ** rng.uniform(-2, 0.5, n_i),
        interferer_m=rng.integers(1, 4, n_i).astype(float),
        beta=10.0 ** (rng.choice([-10.0, 0.0, 10.0]) / 10.0),
        snr=10.0 ** (rng.uniform(-10, 30) / 10.0),
        spread=spread,
    )


def run_selftest(trials: int = 200_000, seed: int = 0, n_problems: int = 10, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True

    worst = 0.0
    for _ in range(20):
        L = int(rng.integers(1, 5))
        r = rng.integers(1, 4, L)
        eta = 10.0 ** rng.uniform(-1, 1, L)
        for a, b in zip(xi_table(r, eta), partial_fraction_xi(r, eta)):
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
    passed = worst <= 1e-8
    ok &= passed
    out(f"{'PASS' if passed else 'FAIL'} xi weights vs partial fractions (max rel err {worst:.2e})")

    p = OutageProblem([0.7], [1], beta=2.0, snr=5.0)
    err = abs(outage_probability(p) - (1 - math.exp(-2.0 / (5.0 * 0.7))))
    passed = err <= 1e-12
    ok &= passed
    out(f"{'PASS' if passed else 'FAIL'} Rayleigh reduction (abs err {err:.2e})")

    for idx in range(n_problems):
        pr = random_problem(rng, max_interferers=8)
        eps = outage_probability(pr)
        mc, _ = mc_outage_oracle(pr, trials, rng)
        ap, ap_se = appendix_integral_oracle(pr, trials, rng)
        sigma = math.sqrt(max(eps * (1 - eps), 0.0) / trials)
        passed = abs(eps - mc) <= 3 * sigma + 1e-12 and abs(eps - ap) <= 3 * ap_se + 1e-12
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'} problem {idx}: closed={eps:.6f} mc={mc:.6f} appendix={ap:.6f}")
    return bool(ok)
