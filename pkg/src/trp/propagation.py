"""Topological factors, leverage normalization, post-processing and ``allocate``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import ActiveSet, ReturnsPanel, TrpConfig, active_set, is_sector_etf
from .dependence import build_mst, correlation_matrix, distance_matrix
from .errors import EmptyActiveSet, FixedIndexNotActive
from .topology import (
    RootedTopology,
    SubtreeMass,
    anchor_market_sector,
    fallback_augmented_mst,
    root_tree,
    select_root,
    subtree_mass,
)

VARIANTS = ("mst", "sector")

# non-fatal diagnostics carried on a Portfolio
EMPTY_ACTIVE_SET = "EmptyActiveSet"
DEGENERATE_SIGNAL = "DegenerateSignal"
ALL_WEIGHTS_PRUNED = "AllWeightsPruned"
NO_SECTOR_ETFS = "NoSectorEtfs"


def alpha(b, rho: float):
    """Share of a parent's factor passed to each of its ``b`` children.

    Equal to (1 - rho) + rho / b; this arrangement keeps the result <= 1 and
    exactly 1 for b == 1 or rho == 0 in floating point.
    """
    return 1.0 - rho * (1.0 - 1.0 / b)


def beta(b, rho: float):
    """Summed child factor relative to the parent factor."""
    return b * (1.0 - rho) + rho


@dataclass(frozen=True, eq=False)
class TopoFactors:
    g: np.ndarray
    alpha: dict[int, float]
    beta: dict[int, float]
    rho: float
    max_branching: int

    @property
    def gamma_bound(self) -> float:
        """Per-level growth cap B(1 - rho) + rho."""
        return beta(self.max_branching, self.rho)


def topo_factors(topo: RootedTopology, rho: float) -> TopoFactors:
    """Top-down recursion g_root = 1, g_v = alpha(b(pa(v))) * g_pa(v)."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    b = topo.branching
    g = np.empty(topo.n_nodes)
    g[topo.root] = 1.0
    alphas, betas = {}, {}
    for u in topo.order():
        if b[u] == 0:
            continue
        a = alpha(int(b[u]), rho)
        alphas[u] = a
        betas[u] = beta(int(b[u]), rho)
        for v in topo.children[u]:
            g[v] = a * g[u]
    return TopoFactors(g, alphas, betas, float(rho), topo.max_branching)


def path_product_factors(topo: RootedTopology, rho: float) -> np.ndarray:
    """Each g_v as the explicit product of alpha over its ancestors."""
    b = topo.branching.tolist()
    out = np.empty(topo.n_nodes)
    for v in range(topo.n_nodes):
        out[v] = math.prod(alpha(b[u], rho) for u in topo.path_to(v))
    return out


def level_mass(factors: TopoFactors, topo: RootedTopology, ell: int) -> float:
    if ell < 0:
        raise ValueError("level must be nonnegative")
    return float(sum(factors.g[v] for v in topo.level(ell)))


def raw_portfolio(signals, factors: TopoFactors) -> np.ndarray:
    """Pre-normalization exposures s_v * g_v over the real nodes."""
    s = np.asarray(signals, dtype=float)
    return s * factors.g[: len(s)]


def normalize_leverage(x, leverage: float) -> np.ndarray:
    """Scale to gross ``leverage``; an all-zero input stays all zero."""
    x = np.asarray(x, dtype=float)
    gross = np.abs(x).sum()
    if gross == 0:
        return np.zeros_like(x)
    return x / gross * leverage


def postprocess(w, cap: float | None = None, min_weight: float | None = None,
                renormalize: bool = False, leverage: float = 1.0) -> np.ndarray:
    """Clip to [-cap, cap], then zero names below ``min_weight`` in magnitude."""
    out = np.asarray(w, dtype=float).copy()
    if cap is not None:
        if not cap > 0:
            raise ValueError("cap must be positive")
        out = np.clip(out, -cap, cap)
    if min_weight is not None:
        if min_weight < 0:
            raise ValueError("min_weight must be nonnegative")
        out[np.abs(out) < min_weight] = 0.0
    if renormalize:
        out = normalize_leverage(out, leverage)
    return out


def depth_one_groups(topo: RootedTopology) -> list[list[int]]:
    """Real nodes grouped by the depth-one subtree they hang from."""
    if not topo.is_dummy_root:
        raise ValueError("depth-one neutralization needs a dummy market root")
    return [
        sorted(v for v in topo.subtree(c) if v < topo.n_assets)
        for c in topo.children[topo.root]
    ]


def neutralize_depth_one(w, topo: RootedTopology, leverage: float = 1.0) -> np.ndarray:
    """Demean weights within each depth-one subtree, then restore gross leverage."""
    out = np.asarray(w, dtype=float).copy()
    for group in depth_one_groups(topo):
        out[group] -= out[group].mean()
    return normalize_leverage(out, leverage)


def compact_weights(signals, topo: RootedTopology, rho: float, leverage: float) -> np.ndarray:
    """One-shot L * s_i g_i / sum_j |s_j| g_j over the real nodes."""
    g = path_product_factors(topo, rho)[: topo.n_assets]
    x = np.asarray(signals, dtype=float) * g
    denom = np.abs(x).sum()
    return leverage * x / denom if denom > 0 else np.zeros_like(x)


@dataclass(frozen=True)
class StabilityCertificate:
    gamma: float
    leverage: float

    @property
    def lipschitz_constant(self) -> float:
        return 2.0 * self.leverage / self.gamma if self.gamma > 0 else math.inf


def signal_map(g, signals, leverage: float) -> np.ndarray:
    """F(s) = L D_g s / ||D_g s||_1 for a fixed set of factors."""
    return normalize_leverage(np.asarray(g) * np.asarray(signals, dtype=float), leverage)


def stability_certificate(g, s, s_prime, leverage: float) -> StabilityCertificate:
    g = np.asarray(g, dtype=float)
    gamma = min(np.abs(g * s).sum(), np.abs(g * s_prime).sum())
    return StabilityCertificate(float(gamma), float(leverage))


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Allocator output over the full panel; inactive names carry zeros."""

    tickers: tuple[str, ...]
    signals: np.ndarray
    g: np.ndarray
    pre_norm: np.ndarray
    weights: np.ndarray
    leverage: float
    variant: str
    active: np.ndarray
    topology: RootedTopology | None = None
    masses: SubtreeMass | None = field(default=None, repr=False)
    diagnostics: tuple[str, ...] = ()

    @property
    def gross(self) -> float:
        return float(np.abs(self.weights).sum())

    @property
    def net(self) -> float:
        return float(self.weights.sum())

    @property
    def is_zero(self) -> bool:
        return not np.any(self.weights)


def sector_nodes(panel: ReturnsPanel, active: ActiveSet) -> list[int]:
    return [o for o, i in enumerate(active.indices) if is_sector_etf(panel.tickers[i])]


def build_topology(panel: ReturnsPanel, signals, active: ActiveSet, cfg: TrpConfig,
                   variant: str = "mst") -> RootedTopology:
    """Rooted topology over the active set for either variant.

    ``signals`` are the full-panel signals.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if variant == "sector":
        xs = sector_nodes(panel, active)
        if not xs:
            return fallback_augmented_mst(panel, active)
        tree = build_mst(distance_matrix(correlation_matrix(panel, active)))
        return anchor_market_sector(tree, xs)
    tree = build_mst(distance_matrix(correlation_matrix(panel, active)))
    index = None
    if cfg.root_mode == "fixed":
        hits = np.flatnonzero(active.indices == cfg.root_index)
        if hits.size == 0:
            raise FixedIndexNotActive(f"asset {cfg.root_index} is not in the active set")
        index = int(hits[0])
    s_active = np.asarray(signals, dtype=float)[active.indices]
    return root_tree(tree, select_root(tree, s_active, cfg.root_mode, index))


def allocate(panel: ReturnsPanel, signals, cfg: TrpConfig | None = None,
             variant: str = "mst") -> Portfolio:
    """Signals and returns in, leverage-normalized long/short weights out.

    Filter, correlate, build the MST, root it (or anchor it under a dummy
    market root), propagate factors, scale the raw signal, normalize to gross
    leverage, then optionally clip/threshold and neutralize. Degenerate cases
    return an all-zero portfolio with a diagnostic instead of raising.
    """
    cfg = cfg or TrpConfig()
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    signals = np.asarray(signals, dtype=float)
    n = panel.n_assets
    try:
        active = active_set(panel, signals, cfg)
    except EmptyActiveSet:
        zeros = np.zeros(n)
        return Portfolio(panel.tickers, signals, zeros, zeros, zeros, cfg.leverage, variant,
                         np.array([], dtype=int), diagnostics=(EMPTY_ACTIVE_SET,))
    if cfg.neutralize_depth_one and variant != "sector":
        raise ValueError("depth-one neutralization requires the sector variant")
    diagnostics = []
    if variant == "sector" and not sector_nodes(panel, active):
        diagnostics.append(NO_SECTOR_ETFS)
    topo = build_topology(panel, signals, active, cfg, variant)
    s = signals[active.indices]
    factors = topo_factors(topo, cfg.rho)
    masses = subtree_mass(topo, s, cfg.subtree_exponent)
    x = raw_portfolio(s, factors)
    w = normalize_leverage(x, cfg.leverage)
    if not np.any(w):
        diagnostics.append(DEGENERATE_SIGNAL)
    apply_post = cfg.postprocess if cfg.postprocess is not None else variant == "sector"
    if apply_post and np.any(w):
        w = postprocess(w, cfg.cap, cfg.min_weight, cfg.renormalize_after_postprocess,
                        cfg.leverage)
        if not np.any(w):
            diagnostics.append(ALL_WEIGHTS_PRUNED)
    if cfg.neutralize_depth_one and np.any(w):
        w = neutralize_depth_one(w, topo, cfg.leverage)
        if not np.any(w):
            diagnostics.append(DEGENERATE_SIGNAL)

    def spread(values):
        out = np.zeros(n)
        out[active.indices] = values
        return out

    return Portfolio(panel.tickers, signals, spread(factors.g[: topo.n_assets]), spread(x),
                     spread(w), cfg.leverage, variant, active.indices, topo, masses,
                     tuple(diagnostics))
