import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trp import propagation
from trp.data import ReturnsPanel, TrpConfig, active_set
from trp.dependence import build_mst, correlation_matrix, distance_matrix
from trp.errors import FixedIndexNotActive
from trp.propagation import (
    ALL_WEIGHTS_PRUNED,
    DEGENERATE_SIGNAL,
    EMPTY_ACTIVE_SET,
    NO_SECTOR_ETFS,
    allocate,
    alpha,
    compact_weights,
    depth_one_groups,
    level_mass,
    neutralize_depth_one,
    normalize_leverage,
    path_product_factors,
    postprocess,
    raw_portfolio,
    stability_certificate,
    topo_factors,
)
from trp.topology import RootedTopology, root_tree, select_root
from trp.verify import random_panel, random_sector_universe, random_topology


def star(k):
    return RootedTopology.from_parents([-1] + [0] * k, 0)


def full_binary(depth):
    n = 2 ** (depth + 1) - 1
    return RootedTopology.from_parents([-1] + [(v - 1) // 2 for v in range(1, n)], 0)


@pytest.mark.parametrize("b", [1, 2, 5, 64])
def test_alpha_rho_zero(b):
    assert alpha(b, 0.0) == 1.0


def test_alpha_examples():
    assert alpha(3, 1.0) == pytest.approx(1 / 3)
    assert alpha(2, 0.5) == 0.75
    assert alpha(1, 0.3) == 1.0


@given(st.integers(1, 1000), st.floats(0, 1))
def test_alpha_in_unit_interval(b, rho):
    a = alpha(b, rho)
    assert 0 < a <= 1
    assert a == pytest.approx((1 - rho) + rho / b, abs=1e-15)


def test_factors_rho_zero_all_one():
    rng = np.random.default_rng(0)
    topo = random_topology(rng, 40)
    np.testing.assert_array_equal(topo_factors(topo, 0.0).g, 1.0)


def test_factors_chain():
    chain = RootedTopology.from_parents([-1, 0, 1], 0)
    for rho in (0.0, 0.3, 1.0):
        assert topo_factors(chain, rho).g[2] == 1.0


def test_factors_star_three():
    f = topo_factors(star(3), 0.25)
    np.testing.assert_allclose(f.g[1:], 5 / 6, rtol=0, atol=1e-15)
    # independent evaluation of the amplification factor: 3 * 0.75 + 0.25
    assert f.g[1:].sum() == pytest.approx(2.5, abs=1e-15)
    assert f.beta[0] == pytest.approx(2.5)


def test_path_product_matches_recursion():
    rng = np.random.default_rng(2)
    for _ in range(50):
        topo = random_topology(rng, 50)
        rho = float(rng.random())
        np.testing.assert_allclose(topo_factors(topo, rho).g, path_product_factors(topo, rho),
                                   rtol=1e-13, atol=0)


def test_level_mass_full_binary_tight():
    topo = full_binary(2)
    f = topo_factors(topo, 0.0)
    assert [level_mass(f, topo, ell) for ell in range(3)] == [1, 2, 4]
    assert [f.gamma_bound**ell for ell in range(3)] == [1, 2, 4]


def test_level_mass_root_and_conservative():
    rng = np.random.default_rng(4)
    for _ in range(30):
        topo = random_topology(rng, 40)
        f = topo_factors(topo, 1.0)
        assert level_mass(f, topo, 0) == 1.0
        assert all(level_mass(f, topo, ell) <= 1 + 1e-12 for ell in range(topo.max_depth + 1))


def test_raw_portfolio():
    f = topo_factors(star(2), 0.5)
    x = raw_portfolio([0.0, -2.0, 1.0], f)
    np.testing.assert_allclose(x, [0.0, -1.5, 0.75])
    np.testing.assert_array_equal(raw_portfolio([0.0, -2.0, 1.0], topo_factors(star(2), 0.0)),
                                  [0.0, -2.0, 1.0])


def test_normalize_leverage():
    np.testing.assert_array_equal(normalize_leverage([1.0, -1.0], 2.0), [1.0, -1.0])
    np.testing.assert_array_equal(normalize_leverage([0.0, 0.0], 2.0), [0.0, 0.0])


# entries below 1e-6 in magnitude would underflow against 1e6 neighbours; signals that small never pass tau
@given(st.lists(st.floats(-1e6, 1e6).filter(lambda v: v == 0 or abs(v) > 1e-6), min_size=1, max_size=30),
       st.floats(0.01, 100))
def test_normalize_gross(x, L):
    x = np.array(x)
    w = normalize_leverage(x, L)
    if np.abs(x).sum() > 0:
        assert np.abs(w).sum() == pytest.approx(L, rel=1e-12)
        assert np.all(np.sign(w) == np.sign(x))


def test_postprocess_examples():
    np.testing.assert_array_equal(postprocess([0.9, -0.2], cap=0.5, min_weight=0.0), [0.5, -0.2])
    np.testing.assert_array_equal(postprocess([0.5, 0.0005], min_weight=0.001), [0.5, 0.0])
    w = np.array([0.3, -0.7])
    np.testing.assert_array_equal(postprocess(w, cap=np.inf, min_weight=0.0), w)


def test_postprocess_clip_then_threshold_then_renormalize():
    out = postprocess([2.0, -0.5, 0.01], cap=1.0, min_weight=0.05, renormalize=True, leverage=3.0)
    np.testing.assert_allclose(out, [2.0, -1.0, 0.0])


def anchored_star():
    # dummy root 4 with two groups: {0, 1} under 0 and {2, 3} under 2
    return RootedTopology.from_parents([4, 0, 4, 2, -1], 4, is_dummy_root=True)


def test_neutralize_demeans_groups():
    topo = RootedTopology.from_parents([2, 0, -1], 2, is_dummy_root=True)
    out = neutralize_depth_one([0.3, 0.1], topo, leverage=0.2)
    np.testing.assert_allclose(out, [0.1, -0.1])


def test_neutralize_fixed_point():
    w = np.array([0.2, -0.2, 0.1, -0.1])
    np.testing.assert_allclose(neutralize_depth_one(w, anchored_star(), 0.6), w)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_neutralize_groups_sum_zero(seed):
    rng = np.random.default_rng(seed)
    panel = random_sector_universe(rng, 30)
    act = active_set(panel, np.ones(panel.n_assets), TrpConfig())
    topo = propagation.build_topology(panel, np.ones(panel.n_assets), act, TrpConfig(), "sector")
    w = rng.standard_normal(topo.n_assets)
    out = neutralize_depth_one(w, topo, 1.5)
    for group in depth_one_groups(topo):
        assert abs(out[group].sum()) < 1e-12
    if np.any(out):
        assert np.abs(out).sum() == pytest.approx(1.5, rel=1e-12)


def test_neutralize_requires_dummy_root():
    with pytest.raises(ValueError):
        neutralize_depth_one([1.0, 2.0], RootedTopology.from_parents([-1, 0], 0))


def test_stability_certificate():
    cert = stability_certificate([1.0, 0.5], np.array([1.0, 2.0]), np.array([0.5, 0.0]), 2.0)
    assert cert.gamma == 0.5
    assert cert.lipschitz_constant == 8.0
    assert stability_certificate([1.0], np.zeros(1), np.ones(1), 1.0).lipschitz_constant == np.inf


# allocate -------------------------------------------------------------------

def test_allocate_rho_zero_is_normalized_signal():
    rng = np.random.default_rng(7)
    panel = random_panel(rng, 12)
    s = rng.standard_normal(12)
    s[3] = 1e-4  # filtered out
    pf = allocate(panel, s, TrpConfig(rho=0.0, leverage=2.0))
    act = np.abs(s) > 1e-3
    expected = np.where(act, 2.0 * s / np.abs(s[act]).sum(), 0.0)
    np.testing.assert_allclose(pf.weights, expected, rtol=0, atol=1e-15)
    assert pf.weights[3] == 0.0


def test_allocate_single_asset():
    panel = ReturnsPanel(("A", "B"), np.array([[0.01, -0.02, 0.015], [0.0, 0.0, 0.0]]))
    pf = allocate(panel, [-0.5, 0.4], TrpConfig(leverage=1.0))
    assert pf.weights.tolist() == [-1.0, 0.0]


def test_allocate_matches_manual_composition():
    rng = np.random.default_rng(5)
    panel = random_panel(rng, 5)
    s = rng.standard_normal(5)
    cfg = TrpConfig(rho=0.6, leverage=1.7, root_mode="maxmag")
    pf = allocate(panel, s, cfg)

    act = active_set(panel, s, cfg)
    c = correlation_matrix(panel, act)
    t = build_mst(distance_matrix(c))
    r = select_root(t, s[act.indices], "maxmag")
    topo = root_tree(t, r)
    f = topo_factors(topo, 0.6)
    w = normalize_leverage(raw_portfolio(s[act.indices], f), 1.7)
    np.testing.assert_array_equal(pf.weights[act.indices], w)
    np.testing.assert_allclose(pf.weights[act.indices],
                               compact_weights(s[act.indices], topo, 0.6, 1.7), rtol=1e-13)
    assert pf.topology == topo


def test_allocate_fixed_root():
    rng = np.random.default_rng(8)
    panel = random_panel(rng, 6)
    s = np.array([1.0, 0.0, 1.0, -1.0, 0.5, 0.2])
    pf = allocate(panel, s, TrpConfig(root_mode="fixed", root_index=4))
    assert pf.topology.root == 3  # ordinal of asset 4 once asset 1 is filtered out
    with pytest.raises(FixedIndexNotActive):
        allocate(panel, s, TrpConfig(root_mode="fixed", root_index=1))


def test_allocate_empty_active_set():
    panel = random_panel(np.random.default_rng(0), 4)
    pf = allocate(panel, np.zeros(4))
    assert pf.is_zero and pf.diagnostics == (EMPTY_ACTIVE_SET,)


def test_allocate_postprocess_only_in_sector_variant_by_default():
    rng = np.random.default_rng(9)
    panel = random_sector_universe(rng, 20)
    s = rng.standard_normal(panel.n_assets)
    cfg = TrpConfig(cap=0.02, min_weight=0.001)
    mst = allocate(panel, s, cfg, "mst")
    sec = allocate(panel, s, cfg, "sector")
    assert mst.gross == pytest.approx(1.0)
    assert np.abs(sec.weights).max() <= 0.02
    forced = allocate(panel, s, TrpConfig(cap=0.02, postprocess=True), "mst")
    assert np.abs(forced.weights).max() <= 0.02


def test_allocate_sector_fallback_without_etfs():
    rng = np.random.default_rng(10)
    panel = random_panel(rng, 8)
    pf = allocate(panel, rng.standard_normal(8), TrpConfig(), "sector")
    assert NO_SECTOR_ETFS in pf.diagnostics
    assert pf.topology.is_dummy_root and pf.topology.n_nodes == 9


def test_allocate_all_pruned():
    rng = np.random.default_rng(12)
    panel = random_sector_universe(rng, 10)
    pf = allocate(panel, rng.standard_normal(panel.n_assets), TrpConfig(min_weight=10.0), "sector")
    assert pf.is_zero and ALL_WEIGHTS_PRUNED in pf.diagnostics


def test_allocate_neutralize_sector():
    rng = np.random.default_rng(13)
    panel = random_sector_universe(rng, 25, n_etfs=3)
    s = rng.standard_normal(panel.n_assets)
    pf = allocate(panel, s, TrpConfig(neutralize_depth_one=True, leverage=2.0), "sector")
    for group in depth_one_groups(pf.topology):
        assert abs(pf.weights[pf.active[group]].sum()) < 1e-12
    assert pf.gross == pytest.approx(2.0)
    with pytest.raises(ValueError):
        allocate(panel, s, TrpConfig(neutralize_depth_one=True), "mst")


def test_degenerate_neutralization_flagged():
    # every group is a single asset, so demeaning zeroes everything
    panel = ReturnsPanel(("XLK", "XLF"), np.array([[0.01, -0.02, 0.03], [0.02, 0.01, -0.01]]))
    pf = allocate(panel, [1.0, -1.0], TrpConfig(neutralize_depth_one=True), "sector")
    assert pf.is_zero and DEGENERATE_SIGNAL in pf.diagnostics

