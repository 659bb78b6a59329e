"""Allocate on a synthetic desk with sector ETF tickers, both variants side by side."""

import argparse

import numpy as np

from trp.data import TrpConfig
from trp.flow_model import FlowModelParams, generate_returns
from trp.propagation import allocate, depth_one_groups
from trp.verify import SECTOR_ETFS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--neutralize", action="store_true")
    args = ap.parse_args()

    base = FlowModelParams.desk(seed=args.seed)
    # the first name in each sector stands in for that sector's ETF
    tickers = list(base.tickers)
    for k, sec in enumerate(sorted(set(base.sector_of))):
        tickers[base.sector_of.index(sec)] = SECTOR_ETFS[k]
    params = FlowModelParams(base.sector_of, base.basket_of, seed=args.seed, tickers=tuple(tickers))
    panel = generate_returns(params, 500)
    s = np.random.default_rng(args.seed).standard_normal(panel.n_assets)

    mst = allocate(panel, s, TrpConfig(rho=args.rho), "mst")
    sec = allocate(panel, s, TrpConfig(rho=args.rho, neutralize_depth_one=args.neutralize), "sector")
    topo = sec.topology
    print(f"mst root: {panel.tickers[mst.active[mst.topology.root]]}, "
          f"sector depth-one groups: {len(depth_one_groups(topo))}")
    for group in depth_one_groups(topo):
        head = panel.tickers[sec.active[group[0]]]
        print(f"  {head:<6} size={len(group):2d}  net={sec.weights[sec.active[group]].sum():+.4f}")
    print(f"gross mst={mst.gross:.4f} sector={sec.gross:.4f}  net mst={mst.net:+.4f} sector={sec.net:+.4f}")


if __name__ == "__main__":
    main()
