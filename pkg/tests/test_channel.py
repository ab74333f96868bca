import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mccdownlink.channel import (
    ChannelConfig,
    assign_nakagami,
    build_link_table,
    effective_distance,
    path_loss,
)
from mccdownlink.errors import ConfigError, FarFieldViolation
from mccdownlink.spatial import SpatialConfig, place_points


@pytest.mark.parametrize("ratio,expected", [(1, 1.0), (2, 0.125), (10, 1e-3)])
def test_path_loss(ratio, expected):
    cfg = ChannelConfig()
    assert path_loss(ratio * cfg.d0, cfg) == pytest.approx(expected, rel=1e-14)


def test_path_loss_inside_far_field_warns_but_computes():
    cfg = ChannelConfig()
    with pytest.warns(FarFieldViolation):
        assert path_loss(0.5 * cfg.d0, cfg) == pytest.approx(8.0)


@pytest.mark.parametrize("xi,expected", [(0.0, 1.0), (30.0, 0.1), (-30.0, 10.0)])
def test_effective_distance(xi, expected):
    assert effective_distance(1.0, xi, 3.0) == pytest.approx(expected, rel=1e-14)


@given(d=st.floats(1e-3, 10), xi=st.floats(-40, 40), alpha=st.floats(2, 6))
def test_effective_distance_round_trip(d, xi, alpha):
    back = effective_distance(effective_distance(d, xi, alpha), -xi, alpha)
    assert back == pytest.approx(d, rel=1e-12)


@pytest.mark.parametrize("d,m", [(0.1, 3), (0.2, 2), (0.3, 1), (0.125, 3), (0.25, 2), (0.0, 3)])
def test_nakagami_steps(d, m):
    assert assign_nakagami(d, r_bs=0.25) == m


def test_nakagami_nonincreasing():
    d = np.linspace(0, 1, 2001)
    m = assign_nakagami(d, r_bs=0.25)
    assert np.all(np.diff(m) <= 0)
    assert set(np.unique(m)) == {1, 2, 3}


def _links(sigma_s, seed=0, M=50, K=400):
    top = place_points(SpatialConfig(M=M, K=K), np.random.default_rng(seed))
    return top, build_link_table(top, ChannelConfig(sigma_s=sigma_s), np.random.default_rng(seed + 1))


def test_no_shadowing_keeps_true_distance():
    _, links = _links(0.0)
    assert np.array_equal(links.d_eff, links.d)
    assert np.all(links.xi == 0)


def test_shadowing_statistics():
    tables = [_links(8.0, seed=s)[1].xi for s in range(0, 60, 10)]
    xi = np.concatenate([t.ravel() for t in tables])
    assert xi.size >= 100_000
    assert np.std(xi) == pytest.approx(8.0, rel=0.02)
    # neighbouring links (same mobile, adjacent stations) are uncorrelated
    a = np.concatenate([t[:-1].ravel() for t in tables])
    b = np.concatenate([t[1:].ravel() for t in tables])
    assert a.size >= 100_000
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


def test_link_table_invariants():
    top, links = _links(8.0, seed=3)
    assert links.shape == (50, 400)
    assert np.all(links.d_eff > 0)
    np.testing.assert_allclose(links.d_eff, 10 ** (-links.xi / 30) * links.d, rtol=1e-14)
    # fading parameter follows the true distance, not the shadowed one
    np.testing.assert_array_equal(links.m, assign_nakagami(links.d, r_bs=0.25))


def test_link_table_deterministic():
    _, a = _links(8.0, seed=4)
    _, b = _links(8.0, seed=4)
    assert a.xi.tobytes() == b.xi.tobytes()
    assert a.d_eff.tobytes() == b.d_eff.tobytes()


def test_shadowing_draws_shared_across_sigma():
    _, a = _links(8.0, seed=6)
    _, b = _links(4.0, seed=6)
    np.testing.assert_allclose(a.xi, 2 * b.xi, rtol=1e-15)


def test_no_warning_at_default_geometry():
    with warnings.catch_warnings():
        warnings.simplefilter("error", FarFieldViolation)
        _links(0.0, seed=9)


@pytest.mark.parametrize("kwargs,name", [
    ({"alpha": 1.5}, "alpha"), ({"sigma_s": -1}, "sigma_s"), ({"d0": 0}, "d0"),
    ({"fading_thresholds": (0.3, 0.1)}, "fading_thresholds"),
])
def test_config_validation(kwargs, name):
    with pytest.raises(ConfigError) as exc:
        ChannelConfig(**kwargs)
    assert exc.value.field == name
