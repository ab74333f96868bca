"""Flat key-value configuration files and their resolution into typed configs."""

from __future__ import annotations

import json
from pathlib import Path

from .campaign import CampaignConfig
from .channel import ChannelConfig
from .errors import ConfigError
from .policy import PolicyConfig
from .spatial import SpatialConfig

_SPATIAL = {"M": int, "K": int, "r_net": float, "r_bs": float, "r_m": float}
_CHANNEL = {"alpha": float, "sigma_s": float, "d0": float}
_POLICY = {
    "r_int": float, "r_max": float, "gamma_pc": float, "f_p": float, "G": int, "h": float,
    "snr_db": float, "mode": str, "strict_refusal": bool, "idle_interference": str,
    "snr_scaling": str,
}
_CAMPAIGN = {"eps_hat": float, "realizations": int, "base_seed": int}
_ALIASES = ("policy", "k_over_m", "fading_thresholds")

KNOWN_KEYS = set(_SPATIAL) | set(_CHANNEL) | set(_POLICY) | set(_CAMPAIGN) | set(_ALIASES)


def parse_policy(value) -> float:
    """Power-control factor from ``etp``, ``erp``, ``gamma=<x>`` or a number."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip().lower()
    if text == "etp":
        return 0.0
    if text == "erp":
        return 1.0
    if text.startswith("gamma="):
        text = text[len("gamma="):]
    try:
        return float(text)
    except ValueError:
        raise ConfigError("policy", f"expected etp, erp or gamma=<x>, got {value!r}") from None


def policy_label(gamma_pc: float) -> str:
    if gamma_pc == 0.0:
        return "etp"
    if gamma_pc == 1.0:
        return "erp"
    return f"gamma={gamma_pc:g}"


def _coerce(key, kind, value):
    if kind is bool:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("1", "true", "yes"):
            return True
        if str(value).lower() in ("0", "false", "no"):
            return False
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}") from None
    if kind is int and isinstance(value, float) and value != out:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return out


def resolve(values: dict | None = None) -> CampaignConfig:
    """Build a :class:`CampaignConfig` from flat keys; missing keys take defaults."""
    values = dict(values or {})
    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")

    def pick(table):
        return {k: _coerce(k, t, values[k]) for k, t in table.items() if k in values and values[k] is not None}

    spatial = pick(_SPATIAL)
    channel = pick(_CHANNEL)
    policy = pick(_POLICY)
    campaign = pick(_CAMPAIGN)
    if values.get("policy") is not None:
        policy["gamma_pc"] = parse_policy(values["policy"])
    if values.get("k_over_m") is not None:
        ratio = _coerce("k_over_m", float, values["k_over_m"])
        spatial["K"] = int(round(ratio * spatial.get("M", SpatialConfig.M)))

    spatial_cfg = SpatialConfig(**spatial)
    if values.get("fading_thresholds") is not None:
        thr = values["fading_thresholds"]
        if not isinstance(thr, (list, tuple)) or len(thr) != 2:
            raise ConfigError("fading_thresholds", "expected two distances")
        channel["fading_thresholds"] = tuple(float(v) for v in thr)
    else:
        channel["fading_thresholds"] = (spatial_cfg.r_bs / 2.0, spatial_cfg.r_bs)
    return CampaignConfig(
        spatial=spatial_cfg,
        channel=ChannelConfig(**channel),
        policy=PolicyConfig(**policy),
        **campaign,
    )


def is_manifest(values) -> bool:
    return isinstance(values, dict) and values.get("tool") == "mccdownlink" and isinstance(values.get("config"), dict)


def parse_config(path=None, overrides: dict | None = None) -> CampaignConfig:
    """Read a flat JSON document (if given) and apply ``overrides`` on top.

    A run manifest is accepted as well; its ``config`` block is used.
    """
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
            values = json.loads(text) if text.strip() else {}
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(values, dict):
            raise ConfigError("config", "top level must be a JSON object")
        if is_manifest(values):
            values = dict(values["config"])
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return resolve(values)


def config_to_dict(cfg: CampaignConfig) -> dict:
    """Flat, fully materialized form of ``cfg``; inverse of :func:`resolve`."""
    out = {k: getattr(cfg.spatial, k) for k in _SPATIAL}
    out.update({k: getattr(cfg.channel, k) for k in _CHANNEL})
    out["fading_thresholds"] = list(cfg.channel.fading_thresholds)
    out.update({k: getattr(cfg.policy, k) for k in _POLICY})
    out.update({k: getattr(cfg, k) for k in _CAMPAIGN})
    return out
