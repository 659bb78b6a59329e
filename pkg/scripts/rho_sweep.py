"""Sweep the propagation strength on one synthetic universe.

Prints, for each rho, the level masses of the rooted tree, the largest
absolute weight and the gross weight held below depth one.
"""

import argparse

import numpy as np

from trp.data import TrpConfig
from trp.flow_model import FlowModelParams, generate_returns
from trp.propagation import allocate, level_mass, topo_factors


def main():
    ap = argparse.ArgumentParser(description="level mass and weight concentration versus rho")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--periods", type=int, default=750)
    ap.add_argument("--steps", type=int, default=11)
    args = ap.parse_args()

    params = FlowModelParams.desk(seed=args.seed)
    panel = generate_returns(params, args.periods)
    s = np.random.default_rng(args.seed + 1).standard_normal(panel.n_assets)

    for rho in np.linspace(0.0, 1.0, args.steps):
        pf = allocate(panel, s, TrpConfig(rho=float(rho)))
        topo = pf.topology
        f = topo_factors(topo, float(rho))
        masses = " ".join(f"{level_mass(f, topo, ell):6.2f}" for ell in range(topo.max_depth + 1))
        deep = np.array(topo.depth) > 1
        w = pf.weights[pf.active]
        print(f"rho={rho:4.2f}  max|w|={np.abs(w).max():.4f}  deep gross={np.abs(w[deep]).sum():.3f}"
              f"  masses: {masses}")


if __name__ == "__main__":
    main()
