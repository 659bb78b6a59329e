"""Three-level nested flow model: market, sector and basket shocks plus noise.

    r_i = theta_m z_M + theta_s z_sector(i) + theta_b z_basket(i) + eps_i

All shocks are independent standard normals; eps_i has volatility
``sigma_eps``. Passing ``lam`` replaces the loadings by sqrt(lam) each and the
noise volatility by sqrt(1 - lam); total variance is then 1 + 2 lam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ReturnsPanel
from .dependence import build_mst, correlation_matrix, distance_matrix
from .errors import DegenerateTiers, InconsistentLabels

GENERATOR = "numpy.random.PCG64"


@dataclass(frozen=True)
class FlowModelParams:
    sector_of: tuple[str, ...]
    basket_of: tuple[str, ...]
    theta_m: float = 0.3
    theta_s: float = 0.2
    theta_b: float = 0.15
    sigma_eps: float = 0.1
    lam: float | None = None
    seed: int = 0
    tickers: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "sector_of", tuple(self.sector_of))
        object.__setattr__(self, "basket_of", tuple(self.basket_of))
        if self.tickers is None:
            object.__setattr__(self, "tickers", tuple(f"A{i:03d}" for i in range(len(self.sector_of))))
        else:
            object.__setattr__(self, "tickers", tuple(self.tickers))
        if min(self.theta_m, self.theta_s, self.theta_b, self.sigma_eps) < 0:
            raise ValueError("loadings and sigma_eps must be nonnegative")
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        check_labels(self.sector_of, self.basket_of, self.tickers)

    @classmethod
    def desk(cls, n_sectors: int = 4, baskets_per_sector: int = 3,
             assets_per_basket: int = 4, **kwargs) -> FlowModelParams:
        """Regular universe: sectors x baskets x assets (48 names by default)."""
        sectors, baskets = [], []
        for s in range(n_sectors):
            for b in range(baskets_per_sector):
                for _ in range(assets_per_basket):
                    sectors.append(f"S{s}")
                    baskets.append(f"S{s}B{b}")
        return cls(tuple(sectors), tuple(baskets), **kwargs)

    @property
    def loadings(self) -> tuple[float, float, float, float]:
        """Effective (theta_m, theta_s, theta_b, sigma_eps)."""
        if self.lam is not None:
            a = float(np.sqrt(self.lam))
            return a, a, a, float(np.sqrt(1.0 - self.lam))
        return self.theta_m, self.theta_s, self.theta_b, self.sigma_eps

    @property
    def n_assets(self) -> int:
        return len(self.sector_of)


def check_labels(sector_of, basket_of, tickers=None) -> None:
    if len(sector_of) != len(basket_of):
        raise InconsistentLabels("sector and basket label lists differ in length")
    if tickers is not None and len(tickers) != len(sector_of):
        raise InconsistentLabels("ticker count does not match label count")
    if len(sector_of) == 0:
        raise InconsistentLabels("empty universe")
    home = {}
    for s, b in zip(sector_of, basket_of):
        if home.setdefault(b, s) != s:
            raise InconsistentLabels(f"basket {b!r} spans sectors {home[b]!r} and {s!r}")


def _codes(labels) -> tuple[np.ndarray, int]:
    uniq = sorted(set(labels))
    index = {u: k for k, u in enumerate(uniq)}
    return np.array([index[x] for x in labels], dtype=int), len(uniq)


def generate_returns(params: FlowModelParams, T: int) -> ReturnsPanel:
    if T < 1:
        raise ValueError("T must be positive")
    tm, ts, tb, se = params.loadings
    sec, n_sec = _codes(params.sector_of)
    bsk, n_bsk = _codes(params.basket_of)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    z_m = rng.standard_normal(T)
    z_s = rng.standard_normal((n_sec, T))
    z_b = rng.standard_normal((n_bsk, T))
    eps = rng.standard_normal((params.n_assets, T))
    r = tm * z_m[None, :] + ts * z_s[sec] + tb * z_b[bsk] + se * eps
    return ReturnsPanel(params.tickers, r)


def population_covariance(params: FlowModelParams) -> np.ndarray:
    tm, ts, tb, se = params.loadings
    sec = np.asarray(params.sector_of)
    bsk = np.asarray(params.basket_of)
    same_sector = sec[:, None] == sec[None, :]
    same_basket = bsk[:, None] == bsk[None, :]
    cov = tm**2 + ts**2 * same_sector + tb**2 * same_basket
    cov = cov.astype(float)
    np.fill_diagonal(cov, tm**2 + ts**2 + tb**2 + se**2)
    return cov


@dataclass(frozen=True)
class TierReport:
    rho_basket: float
    rho_sector: float
    rho_cross: float

    @property
    def distances(self) -> tuple[float, float, float]:
        return tuple(float(np.sqrt((1 - r) / 2))
                     for r in (self.rho_basket, self.rho_sector, self.rho_cross))


def tier_ordering_check(params: FlowModelParams) -> TierReport:
    """Population correlations per tier; raises unless strictly ordered."""
    tm, ts, tb, se = params.loadings
    var = tm**2 + ts**2 + tb**2 + se**2
    if var == 0:
        raise DegenerateTiers("zero total variance")
    report = TierReport((tm**2 + ts**2 + tb**2) / var, (tm**2 + ts**2) / var, tm**2 / var)
    d_b, d_s, d_c = report.distances
    if not (report.rho_basket > report.rho_sector > report.rho_cross and d_b < d_s < d_c):
        raise DegenerateTiers(
            f"tiers not strictly ordered: {report.rho_basket}, {report.rho_sector}, {report.rho_cross}"
        )
    return report


@dataclass(frozen=True)
class RegimeStats:
    intra_basket: float
    intra_sector: float
    cross_sector: float
    max_degree: int


def edge_type_fractions(edges, sector_of, basket_of) -> tuple[float, float, float]:
    """Fractions of edges within a basket, within a sector only, and across sectors."""
    counts = [0, 0, 0]
    for e in edges:
        i, j = e[0], e[1]
        if basket_of[i] == basket_of[j]:
            counts[0] += 1
        elif sector_of[i] == sector_of[j]:
            counts[1] += 1
        else:
            counts[2] += 1
    total = max(sum(counts), 1)
    return tuple(c / total for c in counts)


def mst_regime_probe(params: FlowModelParams, T: int) -> RegimeStats:
    """Simulate, build the MST over all assets and summarize its shape."""
    if len(set(params.sector_of)) < 2:
        raise ValueError("need at least two sectors")
    panel = generate_returns(params, T)
    tree = build_mst(distance_matrix(correlation_matrix(panel)))
    fb, fs, fc = edge_type_fractions(tree.edges, params.sector_of, params.basket_of)
    return RegimeStats(fb, fs, fc, int(tree.degrees().max()))
