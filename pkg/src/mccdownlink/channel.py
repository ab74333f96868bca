"""Per-link propagation state: path loss, shadowing and Nakagami parameters."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FarFieldViolation
from .spatial import Topology, nearest_distances


@dataclass(frozen=True)
class ChannelConfig:
    alpha: float = 3.0
    sigma_s: float = 8.0  # dB; 0 disables shadowing
    d0: float = 0.01
    fading_thresholds: tuple[float, float] = (0.125, 0.25)  # (r_bs/2, r_bs)

    def __post_init__(self):
        if not self.alpha >= 2:
            raise ConfigError("alpha", "path-loss exponent must be >= 2")
        if not self.sigma_s >= 0:
            raise ConfigError("sigma_s", "must be nonnegative")
        if not self.d0 > 0:
            raise ConfigError("d0", "must be positive")
        lo, hi = self.fading_thresholds
        if not 0 <= lo <= hi:
            raise ConfigError("fading_thresholds", "need 0 <= first <= second")
        object.__setattr__(self, "fading_thresholds", (float(lo), float(hi)))


@dataclass(frozen=True)
class LinkTable:
    """Per (base station, mobile) link arrays, all shaped (M, K)."""

    d: np.ndarray
    xi: np.ndarray
    d_eff: np.ndarray
    m: np.ndarray

    @property
    def shape(self):
        return self.d.shape


def path_loss(d, cfg: ChannelConfig):
    """Attenuation ``(d / d0) ** -alpha``; warns when ``d < d0``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < cfg.d0):
        warnings.warn(f"distance below far-field reference d0={cfg.d0}", FarFieldViolation, stacklevel=2)
    out = (d / cfg.d0) ** (-cfg.alpha)
    return float(out) if out.ndim == 0 else out


def effective_distance(d, xi, alpha):
    """Distance perturbed by a shadowing factor ``xi`` given in dB."""
    out = 10.0 ** (-np.asarray(xi, dtype=float) / (10.0 * alpha)) * np.asarray(d, dtype=float)
    return float(out) if out.ndim == 0 else out


def assign_nakagami(d, r_bs=None, thresholds=None):
    """Distance-dependent Nakagami parameter: 3 near, 2 mid-range, 1 beyond ``r_bs``.

    Uses the true (unshadowed) distance. Intervals are closed on the right, so
    ``d == r_bs/2`` maps to 3 and ``d == r_bs`` to 2.
    """
    if thresholds is None:
        thresholds = (r_bs / 2.0, r_bs)
    near, far = thresholds
    d = np.asarray(d, dtype=float)
    out = np.where(d <= near, 3, np.where(d <= far, 2, 1))
    return int(out) if out.ndim == 0 else out


def build_link_table(topology: Topology, cfg: ChannelConfig, rng: np.random.Generator) -> LinkTable:
    """Distances, shadowing draws, effective distances and Nakagami parameters.

    Standard normals are drawn mobile by mobile (column-major) regardless of
    ``sigma_s``, so runs that differ only in ``sigma_s`` or append mobiles share
    the same underlying draws.
    """
    d = nearest_distances(topology)
    M, K = d.shape
    z = rng.standard_normal((K, M)).T
    xi = cfg.sigma_s * z if cfg.sigma_s > 0 else np.zeros_like(d)
    d_eff = effective_distance(d, xi, cfg.alpha)
    if d.size and d.min() < cfg.d0:
        warnings.warn("mobile inside far-field reference distance", FarFieldViolation, stacklevel=2)
    m = assign_nakagami(d, thresholds=cfg.fading_thresholds)
    return LinkTable(d=d, xi=xi, d_eff=np.atleast_2d(d_eff).reshape(M, K), m=np.asarray(m).reshape(M, K))
