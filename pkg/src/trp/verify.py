"""Seeded property harness: one named check per structural result of the allocator.

Every check draws its own instances from ``default_rng([seed, k])`` so checks
are independent of each other and of execution order. ``worst_slack`` is the
largest observed excess over the check's bound (or absolute error for an
identity); a check fails when any instance exceeds its tolerance.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import propagation
from .data import ReturnsPanel, TrpConfig, active_set
from .dependence import (
    brute_force_mst,
    build_mst,
    correlation_matrix,
    distance_matrix,
    is_spanning_tree,
    sanitize_correlation,
)
from .flow_model import FlowModelParams, tier_ordering_check
from .topology import RootedTopology, anchor_market_sector

IDENTITY_TOL = 1e-10
BOUND_TOL = 1e-12
RHO_GRID = tuple(round(0.1 * k, 1) for k in range(11))
SECTOR_ETFS = ("XLB", "XLC", "XLE", "XLF", "XLI", "XLK", "XLP", "XLRE", "XLU", "XLV", "XLY")


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    failures: int = 0
    worst_slack: float = -math.inf
    seconds: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.instances > 0

    def record(self, slack: float, tol: float) -> None:
        self.instances += 1
        slack = float(slack)
        if math.isnan(slack) or slack > tol:
            self.failures += 1
        if math.isnan(slack) or slack > self.worst_slack:
            self.worst_slack = slack


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)
    seed: int = 0

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "overall": self.overall,
            "checks": [asdict(c) | {"passed": c.passed} for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(
                f"{status}  {c.name:<30} n={c.instances:<5d} failures={c.failures:<4d} "
                f"worst_slack={c.worst_slack:.3e}"
            )
        out.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return out


# instance generators -------------------------------------------------------

def random_topology(rng: np.random.Generator, max_nodes: int = 64) -> RootedTopology:
    """A random rooted tree drawn from a mix of shapes (recursive, star, path, Pruefer)."""
    n = int(rng.integers(1, max_nodes + 1))
    kind = int(rng.integers(4))
    perm = rng.permutation(n)
    parent = [-1] * n
    if kind == 0:  # random recursive tree
        for k in range(1, n):
            parent[perm[k]] = int(perm[rng.integers(k)])
    elif kind == 1:  # star
        for k in range(1, n):
            parent[perm[k]] = int(perm[0])
    elif kind == 2:  # path
        for k in range(1, n):
            parent[perm[k]] = int(perm[k - 1])
    else:  # bushy: attach to one of the most recent few nodes
        for k in range(1, n):
            parent[perm[k]] = int(perm[max(0, k - 1 - int(rng.integers(3)))])
    return RootedTopology.from_parents(parent, int(perm[0]))


def random_signals(rng: np.random.Generator, n: int, zero_frac: float = 0.0) -> np.ndarray:
    s = rng.standard_normal(n) * rng.choice([1e-3, 1.0, 50.0])
    if zero_frac:
        s[rng.random(n) < zero_frac] = 0.0
    return s


def random_panel(rng: np.random.Generator, n: int, T: int = 40, tickers=None) -> ReturnsPanel:
    """Returns with a random common factor so MSTs are not pure noise."""
    f = rng.standard_normal(T)
    load = rng.uniform(0.0, 1.5, size=n)
    r = 0.01 * (load[:, None] * f[None, :] + rng.standard_normal((n, T)))
    tickers = tickers or tuple(f"A{i:03d}" for i in range(n))
    return ReturnsPanel(tuple(tickers), r)


def random_sector_universe(rng: np.random.Generator, max_nodes: int = 64,
                           n_etfs: int | None = None) -> ReturnsPanel:
    k = int(rng.integers(1, 6)) if n_etfs is None else n_etfs
    n = int(rng.integers(k, max(k, max_nodes) + 1))
    names = [f"S{i:03d}" for i in range(n)]
    for slot, etf in zip(rng.choice(n, size=k, replace=False), rng.choice(SECTOR_ETFS, size=k, replace=False)):
        names[int(slot)] = str(etf)
    return random_panel(rng, n, tickers=tuple(names))


# checks ----------------------------------------------------------------------

def check_distance_bounds(rng, n_inst, max_nodes):
    res = CheckResult("distance-bounds")
    for _ in range(n_inst):
        n = int(rng.integers(1, min(max_nodes, 16) + 1))
        T = int(rng.integers(2, 30))
        r = rng.standard_normal((n, T))
        r[rng.random(n) < 0.2] = 0.0  # zero-variance rows
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.atleast_2d(np.corrcoef(r))
        # push some entries outside [-1, 1] to exercise clipping
        d = distance_matrix(sanitize_correlation(raw + rng.normal(0.0, 0.05, raw.shape)))
        slack = max(-d.min(), d.max() - 1.0)
        ends = sanitize_correlation(np.array([[1.0, 1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]))
        de = distance_matrix(ends)
        slack = max(slack, abs(de[0, 1]), abs(de[0, 2] - 1.0))
        res.record(slack, 0.0)
    return res


def _factor_instances(rng, n_inst, max_nodes):
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        for rho in RHO_GRID:
            yield topo, rho, propagation.topo_factors(topo, rho)


def check_path_product(rng, n_inst, max_nodes):
    res = CheckResult("path-product-equals-recursion")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        b = topo.branching.tolist()
        paths = [topo.path_to(v) for v in range(topo.n_nodes)]
        for rho in RHO_GRID:
            g = propagation.topo_factors(topo, rho).g
            explicit = np.array([math.prod((1.0 - rho) + rho / b[u] for u in p) for p in paths])
            res.record(np.abs(g - explicit).max(), IDENTITY_TOL)
    return res


def check_rho_zero(rng, n_inst, max_nodes):
    res = CheckResult("rho-zero-limit")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        s = random_signals(rng, topo.n_nodes, zero_frac=0.1)
        s[0] = s[0] or 1.0
        L = float(rng.uniform(0.5, 3.0))
        f = propagation.topo_factors(topo, 0.0)
        w = propagation.normalize_leverage(propagation.raw_portfolio(s, f), L)
        expected = L * s / np.abs(s).sum()
        res.record(max(np.abs(f.g - 1.0).max(), np.abs(w - expected).max()), IDENTITY_TOL)
    return res


def check_rho_one(rng, n_inst, max_nodes):
    res = CheckResult("rho-one-equal-split")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        f = propagation.topo_factors(topo, 1.0)
        err = 0.0
        for u, kids in enumerate(topo.children):
            for v in kids:
                err = max(err, abs(f.g[v] - f.g[u] / len(kids)))
            if kids:
                err = max(err, abs(sum(f.g[v] for v in kids) - f.g[u]))
        res.record(err, IDENTITY_TOL)
    return res


def check_mass_amplification(rng, n_inst, max_nodes):
    res = CheckResult("mass-amplification")
    for topo, rho, f in _factor_instances(rng, n_inst, max_nodes):
        err = 0.0
        for u, kids in enumerate(topo.children):
            if not kids:
                continue
            b = len(kids)
            amp = b * (1.0 - rho) + rho
            err = max(err, abs(sum(f.g[v] for v in kids) - amp * f.g[u]))
            err = max(err, abs((amp - 1.0) - (b - 1) * (1.0 - rho)))
            conservative = b == 1 or rho == 1.0
            if amp < 1.0 - IDENTITY_TOL or conservative != (abs(amp - 1.0) <= IDENTITY_TOL):
                err = math.inf
        res.record(err, IDENTITY_TOL)
    return res


def check_level_mass(rng, n_inst, max_nodes):
    res = CheckResult("level-mass-bound")
    for topo, rho, f in _factor_instances(rng, n_inst, max_nodes):
        gamma = topo.max_branching * (1.0 - rho) + rho
        excess = max(
            propagation.level_mass(f, topo, ell) - gamma**ell for ell in range(topo.max_depth + 1)
        )
        res.record(excess, BOUND_TOL)
    return res


def check_factor_bounds(rng, n_inst, max_nodes):
    res = CheckResult("factor-bounds")
    for topo, rho, f in _factor_instances(rng, n_inst, max_nodes):
        B = max(topo.max_branching, 1)
        d = np.array(topo.depth)
        lower = (1.0 - rho + rho / B) ** d
        crude = (1.0 - rho) ** d
        excess = max((lower - f.g).max(), (crude - f.g).max(), (f.g - 1.0).max())
        # upper bound g <= 1 carries no tolerance
        res.record(excess if (f.g <= 1.0).all() else math.inf, BOUND_TOL)
    return res


def _weights(topo, s, rho, L):
    f = propagation.topo_factors(topo, rho)
    return propagation.normalize_leverage(propagation.raw_portfolio(s, f), L)


def check_sign_preservation(rng, n_inst, max_nodes):
    res = CheckResult("sign-preservation")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        s = random_signals(rng, topo.n_nodes, zero_frac=0.2)
        if not s.any():
            s[0] = -1.0
        w = _weights(topo, s, float(rng.choice(RHO_GRID)), float(rng.uniform(0.5, 3.0)))
        res.record(float((np.sign(w) != np.sign(s)).sum()), 0.0)
    return res


def check_scale_symmetry(rng, n_inst, max_nodes):
    res = CheckResult("scale-symmetry")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        s = random_signals(rng, topo.n_nodes)
        rho, L = float(rng.choice(RHO_GRID)), float(rng.uniform(0.5, 3.0))
        c = float(rng.uniform(0.01, 100.0))
        w = _weights(topo, s, rho, L)
        err = max(
            np.abs(_weights(topo, 2.7 * s, rho, L) - w).sum(),
            np.abs(_weights(topo, c * s, rho, L) - w).sum(),
            np.abs(_weights(topo, -s, rho, L) + w).sum(),
            np.abs(_weights(topo, -c * s, rho, L) + w).sum(),
        )
        res.record(err, BOUND_TOL)
    return res


def check_p_independence(rng, n_inst, max_nodes):
    res = CheckResult("p-independence")
    for _ in range(n_inst):
        n = int(rng.integers(2, max_nodes + 1))
        panel = random_panel(rng, n)
        s = random_signals(rng, n)
        rho = float(rng.choice(RHO_GRID))
        mode = str(rng.choice(["hub", "maxmag"]))
        outs = [
            propagation.allocate(panel, s, TrpConfig(rho=rho, root_mode=mode, subtree_exponent=p,
                                                     signal_threshold=1e-12))
            for p in (1.0, 2.0, 3.0)
        ]
        same = all(
            np.array_equal(o.weights, outs[0].weights) and np.array_equal(o.g, outs[0].g)
            for o in outs[1:]
        )
        res.record(0.0 if same else math.inf, 0.0)
    return res


def check_depth_one(rng, n_inst, max_nodes):
    res = CheckResult("depth-one-sector-etfs")
    for _ in range(n_inst):
        panel = random_sector_universe(rng, max_nodes)
        act = active_set(panel, np.ones(panel.n_assets), TrpConfig())
        tree = build_mst(distance_matrix(correlation_matrix(panel, act)))
        xs = propagation.sector_nodes(panel, act)
        topo = anchor_market_sector(tree, xs)
        bad = sum(topo.depth[x] != 1 for x in xs)
        bad += not is_spanning_tree(topo.n_nodes, topo.edges())
        bad += topo.n_nodes != panel.n_assets + 1
        res.record(float(bad), 0.0)
    return res


def check_connectivity(rng, n_inst, max_nodes):
    res = CheckResult("spanning-tree-connectivity")
    cfg = TrpConfig(signal_threshold=1e-12)
    for k in range(n_inst):
        if k % 2:
            panel = random_sector_universe(rng, max_nodes)
        else:
            panel = random_panel(rng, int(rng.integers(1, max_nodes + 1)))
        s = random_signals(rng, panel.n_assets)
        act = active_set(panel, s, cfg)
        bad = 0
        for variant in propagation.VARIANTS:
            topo = propagation.build_topology(panel, s, act, cfg, variant)
            bad += not is_spanning_tree(topo.n_nodes, topo.edges())
            bad += int(topo.branching.sum()) != topo.n_nodes - 1
            bad += topo.n_assets != act.n_active
            bad += sum(1 for p in topo.parent if p == -1) != 1
        res.record(float(bad), 0.0)
    return res


def check_mst_oracle(rng, n_inst, max_nodes):
    res = CheckResult("mst-oracle-equality")
    for _ in range(n_inst):
        n = int(rng.integers(2, 8))
        d = rng.random((n, n))
        if rng.random() < 0.3:
            d = np.round(d, 1)  # force weight ties
        d = np.triu(d, 1)
        d = d + d.T
        fast, slow = build_mst(d), brute_force_mst(d)
        gap = abs(fast.total_weight - slow.total_weight)
        res.record(gap if is_spanning_tree(n, fast.edges) else math.inf, 0.0)
    return res


def check_lipschitz(rng, n_inst, max_nodes):
    res = CheckResult("lipschitz-conditional")
    done = 0
    while done < n_inst:
        topo = random_topology(rng, max_nodes)
        g = propagation.topo_factors(topo, float(rng.choice(RHO_GRID))).g
        s = random_signals(rng, topo.n_nodes)
        s2 = s + rng.standard_normal(topo.n_nodes) * rng.choice([1e-6, 1e-2, 1.0]) * np.abs(s).max()
        L = float(rng.uniform(0.5, 3.0))
        cert = propagation.stability_certificate(g, s, s2, L)
        if cert.gamma <= 0.01:
            continue
        done += 1
        lhs = np.abs(propagation.signal_map(g, s, L) - propagation.signal_map(g, s2, L)).sum()
        tight = cert.lipschitz_constant * np.abs(g * (s - s2)).sum()
        loose = cert.lipschitz_constant * np.abs(s - s2).sum()
        res.record(max(lhs - tight, tight - loose), BOUND_TOL)
    return res


def check_tier_ordering(rng, n_inst, max_nodes):
    res = CheckResult("tier-ordering")
    labels = FlowModelParams.desk(2, 2, 1)
    for k in range(n_inst):
        if k % 2:
            p = FlowModelParams(labels.sector_of, labels.basket_of, lam=float(rng.uniform(1e-6, 1.0)))
        else:
            tm, ts, tb = rng.uniform(0.0, 1.0), rng.uniform(1e-3, 1.0), rng.uniform(1e-3, 1.0)
            p = FlowModelParams(labels.sector_of, labels.basket_of, tm, ts, tb, float(rng.uniform(0, 1)))
        rep = tier_ordering_check(p)
        db, ds, dc = rep.distances
        margin = min(rep.rho_basket - rep.rho_sector, rep.rho_sector - rep.rho_cross, ds - db, dc - ds)
        res.record(-margin if margin > 0 else math.inf, 0.0)
    return res


def check_leverage(rng, n_inst, max_nodes):
    res = CheckResult("leverage-identity")
    for _ in range(n_inst):
        topo = random_topology(rng, max_nodes)
        s = random_signals(rng, topo.n_nodes, zero_frac=0.3)
        if not s.any():
            s[-1] = 0.5
        L = float(rng.uniform(0.1, 10.0))
        w = _weights(topo, s, float(rng.choice(RHO_GRID)), L)
        res.record(abs(np.abs(w).sum() - L), IDENTITY_TOL)
    return res


CHECKS = {
    "distance-bounds": check_distance_bounds,
    "path-product-equals-recursion": check_path_product,
    "rho-zero-limit": check_rho_zero,
    "rho-one-equal-split": check_rho_one,
    "mass-amplification": check_mass_amplification,
    "level-mass-bound": check_level_mass,
    "factor-bounds": check_factor_bounds,
    "sign-preservation": check_sign_preservation,
    "scale-symmetry": check_scale_symmetry,
    "p-independence": check_p_independence,
    "depth-one-sector-etfs": check_depth_one,
    "spanning-tree-connectivity": check_connectivity,
    "mst-oracle-equality": check_mst_oracle,
    "lipschitz-conditional": check_lipschitz,
    "tier-ordering": check_tier_ordering,
    "leverage-identity": check_leverage,
}


def run_verify(instances: int = 1000, seed: int = 0, max_nodes: int = 64,
               checks=None) -> VerifyReport:
    names = list(CHECKS) if checks is None else list(checks)
    report = VerifyReport(seed=seed)
    for name in names:
        k = list(CHECKS).index(name)
        rng = np.random.default_rng([seed, k])
        start = time.perf_counter()
        result = CHECKS[name](rng, instances, max_nodes)
        result.seconds = time.perf_counter() - start
        report.checks.append(result)
    return report
