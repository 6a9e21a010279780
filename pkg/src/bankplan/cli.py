"""Batch front end: solve the stages, print reports, emit numeric tables.

Exit codes: 0 success, 1 configuration error, 2 infeasible first stage,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bounds as bounds_mod
from . import config as config_mod
from .errors import BankplanError, ConfigError, Infeasible
from .measures import MarketParams
from .scenario import ScenarioTree
from .stage0 import Stage0Decision, solve_t0
from .stage1 import (
    Bankrupt,
    NodeState,
    Stage1Decision,
    current_equity_return,
    leverage_t1,
    node_state,
    solve_t1,
    v_equity,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_INTERNAL = 3


def _pct(v: float) -> str:
    return f"{100.0 * v:.2f}%"


def _write_table(path: Path, rows: list[tuple[str, float]]) -> None:
    """One numeric table per report: full precision plus a display column."""
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value", "display"])
        for name, value in rows:
            disp = f"{value:.6g}" if math.isfinite(value) else str(value)
            w.writerow([name, repr(float(value)), disp])


def _stage0_decision(cfg: config_mod.RunConfig, tree: ScenarioTree,
                     out: Path) -> Stage0Decision:
    if cfg.stage1_uses == "reference":
        ref = cfg.stage0_reference
        return Stage0Decision(x=tuple(ref["x"]), e=float(ref["e"]))
    report = solve_t0(cfg.loans, cfg.params, tree, cfg.optimizer,
                      reference=cfg.stage0_reference)
    return report.decision


def cmd_solve_t0(cfg: config_mod.RunConfig, out: Path) -> int:
    tree = cfg.tree()
    report = solve_t0(cfg.loans, cfg.params, tree, cfg.optimizer,
                      reference=cfg.stage0_reference)
    d = report.decision
    lines = [
        "initial allocation",
        f"  portfolio: safe {_pct(d.x[0])}, mid {_pct(d.x[1])}, high {_pct(d.x[2])}",
        f"  equity share e = {_pct(d.e)}",
        f"  objective = {report.objective:.6f}",
        f"  leverage = {report.leverage_ratio:.6f}  capital req = "
        f"{report.capital_requirement:.6f}  risk = {report.risk:.6f}",
        f"  binding: {', '.join(report.binding_constraints) or 'none'}",
    ]
    for name, slack in sorted(report.slacks.items()):
        lines.append(f"  slack[{name}] = {slack:.6g}")
    for note in report.notes:
        lines.append(f"  note: {note}")
    print("\n".join(lines))
    rows = [("x0", d.x[0]), ("x1", d.x[1]), ("x2", d.x[2]), ("e", d.e),
            ("objective", report.objective), ("leverage", report.leverage_ratio),
            ("capital_requirement", report.capital_requirement),
            ("risk", report.risk)]
    rows += [(f"slack_{k}", v) for k, v in sorted(report.slacks.items())]
    _write_table(out / "stage0.csv", rows)
    return EXIT_OK


def _node_report_lines(outcome, node_id: int) -> list[str]:
    if isinstance(outcome, Bankrupt):
        return [
            f"node {node_id}: BANKRUPT",
            f"  reason: {outcome.reason}",
            f"  minimal equity needed = {outcome.min_equity_needed:.6f}, "
            f"cap = {outcome.equity_cap:.6f}",
        ]
    d = outcome.decision
    lines = [
        f"node {node_id}: solved",
        f"  positions: safe {_pct(d.x1[0])} of wealth-equivalent units "
        f"(x = {d.x1[0]:.6f}, {d.x1[1]:.6f}, {d.x1[2]:.6f})",
        f"  issuance: v_e = {d.v_e:.6f}, v_d = {d.v_d:.6f}",
        f"  objective = {outcome.objective:.6f}",
        f"  leverage = {outcome.leverage:.6f}  risk = {outcome.risk:.6f}",
        f"  equity return = {outcome.v_equity:.6f} "
        f"(threshold {outcome.equity_threshold:.6f})",
        f"  budget gap = {outcome.budget_gap:.3g}",
        f"  binding: {', '.join(outcome.binding_constraints) or 'none'}",
    ]
    return lines


def _node_rows(outcome, node_id: int) -> list[tuple[str, float]]:
    if isinstance(outcome, Bankrupt):
        return [("bankrupt", 1.0),
                ("min_equity_needed", outcome.min_equity_needed),
                ("equity_cap", outcome.equity_cap)]
    d = outcome.decision
    rows = [("bankrupt", 0.0), ("x1_0", d.x1[0]), ("x1_1", d.x1[1]),
            ("x1_2", d.x1[2]), ("v_e", d.v_e), ("v_d", d.v_d),
            ("objective", outcome.objective), ("leverage", outcome.leverage),
            ("risk", outcome.risk), ("v_equity", outcome.v_equity),
            ("equity_threshold", outcome.equity_threshold),
            ("budget_gap", outcome.budget_gap)]
    rows += [(f"slack_{k}", v) for k, v in sorted(outcome.slacks.items())]
    return rows


def cmd_solve_t1(cfg: config_mod.RunConfig, node_id: int, out: Path) -> int:
    tree = cfg.tree()
    d0 = _stage0_decision(cfg, tree, out)
    ns = node_state(d0, tree.node_t1(node_id), tree, cfg.params)
    outcome = solve_t1(ns, d0, cfg.params, tree, cfg.optimizer)
    print("\n".join(_node_report_lines(outcome, node_id)))
    _write_table(out / f"node{node_id}.csv", _node_rows(outcome, node_id))
    return EXIT_OK


def node_bounds(ns: NodeState, d0: Stage0Decision,
                params: MarketParams) -> list[tuple[bounds_mod.BoundReport, bool]]:
    """All applicable caps at a node, each with brute-force verification."""
    e = d0.e
    current = current_equity_return(ns, d0, params)
    regime = (bounds_mod.BELOW_TARGET if current <= 1.0 + params.r_e
              else bounds_mod.ABOVE_TARGET)
    long_t1 = params.beta_lt * (1.0 - e) * (1.0 + params.r_d)
    long_t2 = long_t1 * (1.0 + params.r_d)
    # The closed-form caps track the signed current return (no clipping).
    threshold = ((ns.z1 - long_t1) / e if regime == bounds_mod.BELOW_TARGET
                 else 1.0 + params.r_e)

    def v_lin(ve, vd):
        num = (ns.z1 + (1.0 - params.phi_e) * ve + (1.0 - params.phi_d) * vd
               - (vd + long_t2) / (1.0 + params.r))
        return num / (e + ve)

    def lev(ve, vd):
        cap = (ns.z1 + (1.0 - params.phi_e) * ve
               + (1.0 - params.phi_d) * vd - vd - long_t1)
        return cap / (ns.z1 + vd + ve)

    step = 1e-5
    tol = 1e-12
    out = []

    b = bounds_mod.cap_vd_equityholder(ns, params, e, regime)
    ok = bounds_mod.verify_bound_bruteforce(
        b, lambda vd: v_lin(0.0, vd) >= threshold - tol, step)
    out.append((b, ok))

    b = bounds_mod.cap_vd_leverage(ns, params, e, v_e=0.0)
    ok = bounds_mod.verify_bound_bruteforce(
        b, lambda vd: lev(0.0, vd) >= params.k_lev - tol, step)
    out.append((b, ok))

    b = bounds_mod.cap_ve_equityholder(ns, params, e, 0.0, regime)
    ok = bounds_mod.verify_bound_bruteforce(
        b, lambda ve: v_lin(ve, 0.0) >= threshold - tol, step)
    out.append((b, ok))

    min_ve = bounds_mod.min_ve_for_leverage(ns, params, e)
    b = bounds_mod.BoundReport(
        "min_ve_for_leverage", min_ve,
        bounds_mod.UNCONDITIONAL if math.isfinite(min_ve)
        else bounds_mod.NOT_APPLICABLE,
        {"z1": ns.z1, "e": e})
    # lower bound: verify the mirrored constraint (violated below, holds above)
    if math.isfinite(min_ve) and min_ve > 0.0:
        mirrored = bounds_mod.BoundReport(b.name, min_ve, b.regime, b.inputs)
        ok = bounds_mod.verify_bound_bruteforce(
            mirrored, lambda ve: lev(ve, 0.0) < params.k_lev - tol, step)
    else:
        ok = True
    out.append((b, ok))
    return out


def cmd_bounds(cfg: config_mod.RunConfig, node_id: int, out: Path) -> int:
    tree = cfg.tree()
    d0 = _stage0_decision(cfg, tree, out)
    ns = node_state(d0, tree.node_t1(node_id), tree, cfg.params)
    reports = node_bounds(ns, d0, cfg.params)
    lines = [f"node {node_id} issuance bounds "
             f"(z1 = {ns.z1:.6f}, z1lt = {ns.z1lt:.6f})"]
    rows = []
    for b, ok in reports:
        lines.append(
            f"  {b.name}: cap = {b.cap_value:.6g}  regime = {b.regime}  "
            f"verified = {ok}")
        rows.append((f"{b.name}", b.cap_value))
        rows.append((f"{b.name}_verified", 1.0 if ok else 0.0))
    lines.append(f"  regime(v_d) = {bounds_mod.vd_regime(cfg.params)}; "
                 f"regime(v_e) = {bounds_mod.ve_regime(ns, cfg.params, d0.e)}")
    print("\n".join(lines))
    _write_table(out / f"bounds_node{node_id}.csv", rows)
    return EXIT_OK


def emit_curves(cfg: config_mod.RunConfig, node_id: int, out: Path) -> Path:
    """Equity-return and leverage series in each issuance direction."""
    tree = cfg.tree()
    d0 = _stage0_decision(cfg, tree, out)
    params = cfg.params
    ns = node_state(d0, tree.node_t1(node_id), tree, params)
    n = cfg.curve_points
    ve_grid = np.linspace(0.0, params.cap_e, n)
    vd_grid = np.linspace(0.0, params.cap_d, n)
    path = out / f"curves_node{node_id}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v_e", "v_d", "v_equity_vs_vd", "v_equity_vs_ve",
                    "leverage_vs_ve", "leverage_vs_vd"])
        for ve, vd in zip(ve_grid, vd_grid):
            d_vd = Stage1Decision(x1=(0.0, 0.0, 0.0), v_e=0.0, v_d=float(vd))
            d_ve = Stage1Decision(x1=(0.0, 0.0, 0.0), v_e=float(ve), v_d=0.0)
            w.writerow([
                repr(float(ve)), repr(float(vd)),
                repr(v_equity(ns, d0, d_vd, params)),
                repr(v_equity(ns, d0, d_ve, params)),
                repr(leverage_t1(ns, d_ve, params, d0.e)),
                repr(leverage_t1(ns, d_vd, params, d0.e)),
            ])
    return path


def cmd_curves(cfg: config_mod.RunConfig, node_id: int, out: Path) -> int:
    path = emit_curves(cfg, node_id, out)
    print(f"node {node_id} issuance curves written to {path}")
    return EXIT_OK


def run_pipeline(cfg: config_mod.RunConfig, out: Path) -> int:
    """First-stage solve, all three nodes, bounds, and curves."""
    tree = cfg.tree()
    code = cmd_solve_t0(cfg, out)
    if code != EXIT_OK:
        return code
    d0 = _stage0_decision(cfg, tree, out)
    for node_id in (1, 2, 3):
        ns = node_state(d0, tree.node_t1(node_id), tree, cfg.params)
        outcome = solve_t1(ns, d0, cfg.params, tree, cfg.optimizer)
        print("\n".join(_node_report_lines(outcome, node_id)))
        _write_table(out / f"node{node_id}.csv", _node_rows(outcome, node_id))
        cmd_bounds(cfg, node_id, out)
        emit_curves(cfg, node_id, out)
    return EXIT_OK


def _load_config(args: argparse.Namespace) -> config_mod.RunConfig:
    if args.config:
        cfg = config_mod.load(args.config)
    else:
        cfg = config_mod.example1()
    if args.seed is not None:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=args.seed))
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bankplan",
        description="Three-step bank portfolio planning: solve, bound, report.",
    )
    parser.add_argument("--config", help="path to a YAML run configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the optimizer seed")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve-t0", help="solve the initial allocation")
    p1 = sub.add_parser("solve-t1", help="solve one intermediate node")
    p1.add_argument("--node", type=int, choices=(1, 2, 3), required=True)
    pb = sub.add_parser("bounds", help="issuance bounds at one node")
    pb.add_argument("--node", type=int, choices=(1, 2, 3), required=True)
    pc = sub.add_parser("curves", help="issuance curves at one node")
    pc.add_argument("--node", type=int, choices=(1, 2, 3), required=True)
    sub.add_parser("pipeline", help="run every stage and emit all reports")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        out = Path(args.out) if args.out else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "solve-t0":
            return cmd_solve_t0(cfg, out)
        if args.command == "solve-t1":
            return cmd_solve_t1(cfg, args.node, out)
        if args.command == "bounds":
            return cmd_bounds(cfg, args.node, out)
        if args.command == "curves":
            return cmd_curves(cfg, args.node, out)
        return run_pipeline(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BankplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
