"""Command-line entry point: ``mccdownlink {outage,campaign,optimize,selftest}``."""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import (
    optimize_radii,
    outage_curve,
    reference_problem,
    reference_topology,
    run_campaign,
)
from .channel import build_link_table
from .config import config_to_dict, is_manifest, parse_config, parse_policy, policy_label
from .errors import MCCError

log = logging.getLogger("mccdownlink")


def fmt(value) -> str:
    """Locale-independent CSV cell with 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return format(float(value), ".12g")
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_manifest(out: Path, cfg, command: str, extra: dict | None = None) -> dict:
    manifest = {
        "tool": "mccdownlink",
        "version": __version__,
        "command": command,
        "base_seed": cfg.base_seed,
        "config": config_to_dict(cfg),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _grid(text):
    """``start:stop:step`` (inclusive), a comma list, or an already parsed list."""
    if isinstance(text, str) and ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return _floats(text)


def _recorded(args, defaults: dict) -> None:
    """Fill unset sweep arguments from a manifest given as ``--config``, else from ``defaults``."""
    recorded = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError):
            data = None  # parse_config reports the problem
        if is_manifest(data):
            recorded = data
    for name, default in defaults.items():
        if getattr(args, name, None) is None:
            setattr(args, name, recorded.get(name, default))


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["base_seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        out["realizations"] = args.realizations
    if getattr(args, "policy", None) is not None and not isinstance(args.policy, list):
        out["policy"] = args.policy
    if getattr(args, "mode", None) is not None:
        out["mode"] = args.mode
    if getattr(args, "sigma_s", None) is not None and not isinstance(args.sigma_s, list):
        out["sigma_s"] = args.sigma_s
    return out


def cmd_outage(args) -> int:
    _recorded(args, {"trials": 100_000, "n_serving": 4, "beta_db": "-10,0,10", "snr_db": "-10:40:2"})
    overrides = _overrides(args)
    overrides.setdefault("snr_scaling", "direct")
    cfg = parse_config(args.config, overrides)
    rng = np.random.default_rng(cfg.base_seed)
    topology = reference_topology(cfg.spatial, rng)
    links = build_link_table(topology, cfg.channel, rng)
    problem = reference_problem(links, 0, args.n_serving, cfg.policy, cfg.channel.alpha)
    beta_db, snr_db = _grid(args.beta_db), _grid(args.snr_db)
    rows = outage_curve(problem, beta_db, snr_db, oracle_trials=args.trials, rng=rng)
    out = Path(args.out)
    cols = ["snr_db", "beta_db", "eps_closed_form", "eps_oracle", "oracle_halfwidth"]
    write_csv(out / "outage.csv", cols, ([r[c] for c in cols] for r in rows))
    write_manifest(out, cfg, "outage", {"trials": args.trials, "n_serving": args.n_serving,
                                        "beta_db": beta_db, "snr_db": snr_db})
    print(f"wrote {out / 'outage.csv'}")
    return 0


def cmd_campaign(args) -> int:
    _recorded(args, {"k_over_m": None, "gamma_pc": None, "sigma_s": None})
    base = parse_config(args.config, _overrides(args))
    ratios = _grid(args.k_over_m) if args.k_over_m else [base.spatial.K / base.spatial.M]
    if args.policy:
        gammas = [parse_policy(p) for p in args.policy]
    else:
        gammas = [float(g) for g in args.gamma_pc] if args.gamma_pc else [base.policy.gamma_pc]
    sigmas = args.sigma_s if args.sigma_s else [base.channel.sigma_s]
    out = Path(args.out)
    metrics = []
    points = [(r, g, s) for r in ratios for g in gammas for s in sigmas]
    for ratio, gamma, sigma in points:
        cfg = base.replace(spatial__K=int(round(ratio * base.spatial.M)),
                           policy__gamma_pc=gamma, channel__sigma_s=sigma)
        res = run_campaign(cfg, n_jobs=args.jobs)
        label = policy_label(gamma)
        metrics.append([ratio, label, sigma, res.ase, res.mean_rate, res.denied_fraction])
        name = "ccdf.csv" if len(points) == 1 else f"ccdf_k{ratio:g}_{label}_s{sigma:g}.csv"
        write_csv(out / name, ["r", "p_exceed"], res.ccdf.tolist())
        log.info("K/M=%g %s sigma=%g: ase=%.4f", ratio, label, sigma, res.ase)
    write_csv(out / "metrics.csv",
              ["k_over_m", "policy", "sigma_s", "ase", "mean_rate", "denied_fraction"], metrics)
    write_manifest(out, base, "campaign", {"k_over_m": ratios, "gamma_pc": gammas, "sigma_s": sigmas})
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def cmd_optimize(args) -> int:
    _recorded(args, {"r_int_grid": "0.05:0.5:0.05", "r_max_grid": "0.05:1.0:0.05"})
    cfg = parse_config(args.config, _overrides(args))
    r_int_grid, r_max_grid = _grid(args.r_int_grid), _grid(args.r_max_grid)
    res = optimize_radii(cfg, r_int_grid, r_max_grid)
    out = Path(args.out)
    rows = [[a, b, ase, (a, b) == (res.r_int, res.r_max)] for a, b, ase in res.table]
    write_csv(out / "optimize.csv", ["r_int", "r_max", "ase", "is_best"], rows)
    write_manifest(out, cfg, "optimize", {"r_int_grid": r_int_grid, "r_max_grid": r_max_grid})
    print(f"best r_int={res.r_int:g} r_max={res.r_max:g} ase={res.ase:.6g}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(trials=args.trials, seed=args.seed or 0) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mccdownlink", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON configuration file or a run manifest")
        p.add_argument("--seed", type=int, help="base seed (u64)")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("outage", help="outage probability against SNR for one reference mobile")
    common(p)
    p.add_argument("--trials", type=int, help="oracle trials (default 100000)")
    p.add_argument("--sigma-s", type=float)
    p.add_argument("--beta-db", help="comma list or start:stop:step (default -10,0,10)")
    p.add_argument("--snr-db", help="start:stop:step or comma list (default -10:40:2)")
    p.add_argument("--n-serving", type=int, help="default 4")
    p.set_defaults(func=cmd_outage)

    p = sub.add_parser("campaign", help="area spectral efficiency and rate ccdf")
    common(p)
    p.add_argument("--realizations", type=int)
    p.add_argument("--policy", action="append", help="etp | erp | gamma=<x>; repeatable")
    p.add_argument("--mode", choices=["mcc", "conventional"])
    p.add_argument("--sigma-s", type=float, action="append", help="dB; repeatable")
    p.add_argument("--k-over-m", help="comma list of mobiles per base station")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("optimize", help="grid search of (r_int, r_max)")
    common(p)
    p.add_argument("--realizations", type=int)
    p.add_argument("--policy")
    p.add_argument("--mode", choices=["mcc", "conventional"])
    p.add_argument("--sigma-s", type=float)
    p.add_argument("--r-int-grid", help="default 0.05:0.5:0.05")
    p.add_argument("--r-max-grid", help="default 0.05:1.0:0.05")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("selftest", help="closed form against the oracles on random problems")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=200_000)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MCCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
