"""Command-line front end: ``trp allocate | tree | synth | verify``.

Exit codes: 0 success, 1 input error (or failed verification), 2 degenerate
all-zero portfolio.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import TrpConfig, active_set, load_returns, load_signals, write_returns
from .dependence import build_mst, correlation_matrix, distance_matrix
from .errors import EmptyActiveSet, TrpError
from .flow_model import GENERATOR, FlowModelParams, generate_returns
from .propagation import allocate, build_topology
from .topology import RootedTopology
from .verify import CHECKS, SECTOR_ETFS, run_verify

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2
DUMMY_ROOT = "SPY"


def _root_mode(text: str) -> tuple[str, int]:
    if text in ("hub", "maxmag"):
        return text, 0
    if text.startswith("fixed:"):
        try:
            return "fixed", int(text.split(":", 1)[1])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError("expected hub, maxmag or fixed:IDX")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--leverage", type=float, default=1.0)
    p.add_argument("--variant", choices=("mst", "sector"), default="mst")
    p.add_argument("--root", type=_root_mode, default=("hub", 0), metavar="hub|maxmag|fixed:IDX")
    p.add_argument("--lookback", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=1e-8, help="recent-magnitude threshold")
    p.add_argument("--tau", type=float, default=1e-3, help="signal threshold")
    p.add_argument("--cap", type=float, default=None)
    p.add_argument("--min-weight", type=float, default=None)
    p.add_argument("--postprocess", action="store_true",
                   help="apply cap/min-weight in the mst variant too")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--neutralize", action="store_true")


def _config(args) -> TrpConfig:
    mode, index = args.root
    return TrpConfig(
        lookback=args.lookback,
        magnitude_threshold=args.epsilon,
        signal_threshold=args.tau,
        rho=args.rho,
        leverage=args.leverage,
        root_mode=mode,
        root_index=index,
        cap=args.cap,
        min_weight=args.min_weight,
        renormalize_after_postprocess=args.renormalize,
        neutralize_depth_one=args.neutralize,
        postprocess=True if args.postprocess else None,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _num(x: float) -> str:
    return repr(float(x))


def cmd_allocate(args) -> int:
    cfg = _config(args)
    panel = load_returns(args.returns)
    signals = load_signals(args.signals, panel.tickers)
    pf = allocate(panel, signals, cfg, args.variant)
    digest = pf.topology.digest() if pf.topology is not None else "none"
    if args.format == "json":
        text = json.dumps({
            "rho": cfg.rho, "leverage": cfg.leverage, "variant": args.variant,
            "topology": digest, "diagnostics": list(pf.diagnostics),
            "weights": [
                {"ticker": t, "signal": float(s), "g_factor": float(g), "weight": float(w)}
                for t, s, g, w in zip(pf.tickers, pf.signals, pf.g, pf.weights)
            ],
        }, indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# rho={cfg.rho} leverage={cfg.leverage} variant={args.variant} topology={digest}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["ticker", "signal", "g_factor", "weight"])
        for t, s, g, w in zip(pf.tickers, pf.signals, pf.g, pf.weights):
            writer.writerow([t, _num(s), _num(g), _num(w)])
        text = buf.getvalue()
    _emit(text, args.out)
    if pf.is_zero:
        print(f"trp: degenerate portfolio ({', '.join(pf.diagnostics)}); all weights are zero",
              file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _names(tickers, topo: RootedTopology | None = None) -> list[str]:
    names = list(tickers)
    if topo is not None and topo.is_dummy_root:
        dummy = DUMMY_ROOT if DUMMY_ROOT not in names else f"{DUMMY_ROOT}*"
        names.append(dummy)
    return names


def rooted_json(topo: RootedTopology, names) -> dict:
    b = topo.branching
    return {
        "root": names[topo.root],
        "dummy_root": topo.is_dummy_root,
        "parents": {names[v]: names[p] for v, p in enumerate(topo.parent) if p != -1},
        "depths": {names[v]: d for v, d in enumerate(topo.depth)},
        "branching": {names[v]: int(b[v]) for v in range(topo.n_nodes)},
        "topology": topo.digest(),
    }


def rooted_dot(topo: RootedTopology, names) -> str:
    lines = ["digraph trp {"]
    for ell in range(topo.max_depth + 1):
        members = " ".join(f'"{names[v]}";' for v in topo.level(ell))
        lines.append(f"  {{ rank=same; {members} }}")
    for p, v in sorted(topo.edges(), key=lambda e: (topo.depth[e[1]], e[1])):
        lines.append(f'  "{names[p]}" -> "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_tree(args) -> int:
    cfg = _config(args)
    panel = load_returns(args.returns)
    if args.signals:
        signals = load_signals(args.signals, panel.tickers)
    else:
        signals = np.ones(panel.n_assets)
    act = active_set(panel, signals, cfg)
    tickers = [panel.tickers[i] for i in act.indices]
    if args.rooted:
        topo = build_topology(panel, signals, act, cfg, args.variant)
        names = _names(tickers, topo)
        if args.format == "dot":
            text = rooted_dot(topo, names)
        else:
            text = json.dumps(rooted_json(topo, names), indent=2) + "\n"
    else:
        tree = build_mst(distance_matrix(correlation_matrix(panel, act)))
        edges = sorted(tree.edges)
        if args.format == "dot":
            body = "".join(f'  "{tickers[i]}" -- "{tickers[j]}" [weight={w:.6g}];\n' for i, j, w in edges)
            text = "graph mst {\n" + body + "}\n"
        else:
            text = json.dumps({
                "nodes": tickers,
                "edges": [{"source": tickers[i], "target": tickers[j], "weight": w} for i, j, w in edges],
                "total_weight": tree.total_weight,
            }, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    params = FlowModelParams.desk(
        args.sectors, args.baskets, args.assets_per_basket,
        theta_m=args.theta[0], theta_s=args.theta[1], theta_b=args.theta[2],
        sigma_eps=args.sigma_eps, lam=args.lam, seed=args.seed,
    )
    if args.etf_tickers:
        if args.sectors > len(SECTOR_ETFS):
            raise ValueError(f"at most {len(SECTOR_ETFS)} sectors can carry ETF tickers")
        tickers = list(params.tickers)
        for k, sector in enumerate(sorted(set(params.sector_of))):
            tickers[params.sector_of.index(sector)] = SECTOR_ETFS[k]
        params = FlowModelParams(**{**asdict(params), "tickers": tuple(tickers)})
    panel = generate_returns(params, args.periods)
    out = Path(args.out)
    write_returns(out, panel)
    sidecar = {
        "generator": GENERATOR,
        "periods": args.periods,
        **{k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(params).items()},
    }
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    if args.signals_out:
        rng = np.random.Generator(np.random.PCG64([args.seed, 1]))
        with Path(args.signals_out).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["ticker", "signal"])
            for t, s in zip(panel.tickers, rng.standard_normal(panel.n_assets)):
                writer.writerow([t, _num(s)])
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verify(args.instances, args.seed, args.max_nodes, args.check or None)
    print("\n".join(report.lines()))
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK if report.overall else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trp", description="Topological risk parity allocator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("allocate", help="signals + returns -> weights CSV")
    p.add_argument("--returns", required=True)
    p.add_argument("--signals", required=True)
    _add_config_flags(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("tree", help="dump the MST or rooted topology")
    p.add_argument("--returns", required=True)
    p.add_argument("--signals")
    p.add_argument("--rooted", action="store_true")
    _add_config_flags(p)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("synth", help="simulate the nested flow model")
    p.add_argument("--out", required=True, help="returns CSV; a .json sidecar is written alongside")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--periods", type=int, default=1000)
    p.add_argument("--theta", type=float, nargs=3, default=(0.3, 0.2, 0.15), metavar=("M", "S", "B"))
    p.add_argument("--sigma-eps", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--sectors", type=int, default=4)
    p.add_argument("--baskets", type=int, default=3, help="baskets per sector")
    p.add_argument("--assets-per-basket", type=int, default=4)
    p.add_argument("--etf-tickers", action="store_true",
                   help="rename the first asset of each sector to an XL* ticker")
    p.add_argument("--signals-out", help="also write random N(0,1) signals here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="run the seeded property harness")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-nodes", type=int, default=64)
    p.add_argument("--check", action="append", choices=list(CHECKS))
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmptyActiveSet as exc:
        print(f"trp: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (TrpError, ValueError, OSError) as exc:
        print(f"trp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
