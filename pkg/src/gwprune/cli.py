"""Command-line front end for reproducible pruning experiments.

Subcommands write CSV for tabular series and JSON for structured summaries;
every summary echoes the resolved configuration and the package version.
Exit codes: 0 success, 2 usage error, 3 numerical or truncation failure,
4 statistical conditioning failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import distributions as dists
from . import pruning
from . import sampler
from .errors import (
    CapacityError,
    ConditioningError,
    NumericalError,
    StructuralError,
    TruncationError,
)
from .trees import Tree, branch_statistics, horton_prune, hs_order_recursive

USAGE_EXIT = 2
NUMERICAL_EXIT = 3
CONDITIONING_EXIT = 4


def parse_dist(spec):
    """Distribution specs: binary | igw:Q | zipf-example | zipf:ALPHA |
    finite:q0,q1,q2,... | oscillatory:Q0 | @path.json"""
    if spec.startswith("@"):
        with open(spec[1:]) as fh:
            return dists.distribution_from_json(fh.read())
    if spec == "binary":
        return dists.critical_binary()
    if spec == "zipf-example":
        return dists.ZipfCriticalExample()
    if ":" in spec:
        kind, _, arg = spec.partition(":")
        if kind == "igw":
            return dists.igw(float(arg))
        if kind == "zipf":
            return dists.zipf_critical(float(arg))
        if kind == "finite":
            return dists.ExplicitFinite([float(v) for v in arg.split(",")])
        if kind == "oscillatory":
            return pruning.oscillatory_invariant(float(arg))
    raise ValueError(f"unrecognized distribution spec {spec!r}")


def _out_dir(args):
    path = args.out_dir or os.environ.get("GWPRUNE_OUT_DIR") or "."
    os.makedirs(path, exist_ok=True)
    return path


def _config_dict(args):
    return {k: v for k, v in vars(args).items() if k != "func"}


def _write_summary(path, command, config, payload):
    doc = {"command": command, "version": __version__, "config": config}
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_igw(args):
    out = _out_dir(args)
    files = []
    if args.sweep:
        lo, hi, step = (float(v) for v in args.sweep.split(":"))
        rows = []
        q0 = lo
        while q0 <= hi + 1e-12:
            c = dists.igw_constants(min(q0, 1 - 1e-9))
            rows.append((c.q0, c.a, c.c, c.t1, c.horton_exponent))
            q0 += step
        path = os.path.join(out, "igw_sweep.csv")
        _write_csv(path, ["q0", "a", "c", "T1", "R"], rows)
        files.append(path)
        summary = {"rows": len(rows)}
    else:
        if args.q0 is None:
            raise ValueError("need --q0 or --sweep")
        law = dists.igw(args.q0)
        c = dists.igw_constants(args.q0)
        pmf = law.pmf_upto(args.kmax)
        path = os.path.join(out, "igw_pmf.csv")
        _write_csv(path, ["k", "q_k"], list(enumerate(map(float, pmf))))
        files.append(path)
        table = dists.tokunaga_analytic(law, args.order)
        path = os.path.join(out, "igw_tokunaga.csv")
        _write_csv(path, ["i", "j", "T", "T_reg", "t_total"],
                   [(i, j, table.T[i, j], table.T_reg[i, j], table.t_total[i, j])
                    for j in range(2, args.order + 1) for i in range(1, j)])
        files.append(path)
        path = os.path.join(out, "igw_constants.json")
        with open(path, "w") as fh:
            json.dump({"q0": c.q0, "a": c.a, "c": c.c, "T1": c.t1,
                       "R": c.horton_exponent}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append(path)
        summary = {"constants": {"a": c.a, "c": c.c, "T1": c.t1,
                                 "R": c.horton_exponent}}
    spath = os.path.join(out, "igw_summary.json")
    _write_summary(spath, "igw", _config_dict(args), summary | {"files": files})
    return 0


def cmd_converge(args):
    out = _out_dir(args)
    dist = parse_dist(args.dist)
    traj = pruning.iterate_pruning(dist, args.steps, args.tol)
    path = os.path.join(out, "trajectory.csv")
    traj.to_csv(path)
    files = [path]
    if args.dump_laws:
        laws = [traj.step_law_dict(k, cutoff=128)
                for k in range(traj.n_steps)]
        lpath = os.path.join(out, "trajectory_laws.json")
        with open(lpath, "w") as fh:
            json.dump(laws, fh, sort_keys=True)
            fh.write("\n")
        files.append(lpath)
    _write_summary(os.path.join(out, "converge_summary.json"), "converge",
                   {"dist": args.dist, "steps": args.steps, "tol": args.tol},
                   {"status": traj.status, "target_q": traj.target_q,
                    "n_steps": traj.n_steps,
                    "final_q0": float(traj.q0_path[-1]),
                    "files": files})
    print(f"{traj.status}"
          + (f" (q = {traj.target_q:.6f})" if traj.target_q else ""))
    if traj.status == pruning.BUDGET_EXHAUSTED:
        raise NumericalError("no convergence within the step budget")
    return 0


def cmd_mc(args):
    out = _out_dir(args)
    dist = parse_dist(args.dist)
    cfg = sampler.SampleConfig(seed=args.seed, n_trees=args.trees,
                               max_vertices=args.max_vertices,
                               max_order=args.order,
                               rejection_budget=args.budget,
                               threads=args.threads)
    est = sampler.mc_tokunaga(dist, args.order, cfg.n_trees, cfg.seed,
                              max_vertices=cfg.max_vertices,
                              rejection_budget=cfg.rejection_budget,
                              threads=cfg.threads)
    path = os.path.join(out, "mc_estimates.csv")
    est.to_csv(path)
    _write_summary(os.path.join(out, "mc_summary.json"), "mc",
                   {"dist": args.dist, "order": args.order,
                    "trees": args.trees, "seed": args.seed,
                    "max_vertices": args.max_vertices,
                    "threads": args.threads},
                   est.to_jsonable() | {"files": [path]})
    print(f"accepted {est.n_accepted} of {est.n_draws} draws "
          f"(censoring rate {est.censoring_rate:.2e})")
    return 0


def cmd_oscillatory(args):
    out = _out_dir(args)
    law = pruning.oscillatory_invariant(args.q0, m_max=args.m_max)
    ref = dists.igw(args.q0)
    qm = law.pmf_upto(args.m_max)
    qi = ref.pmf_upto(args.m_max)
    path_qm = os.path.join(out, "oscillatory_qm.csv")
    _write_csv(path_qm, ["m", "q_igw", "q_osc"],
               [(m, float(qi[m]), float(qm[m]))
                for m in range(2, args.m_max + 1)])
    grid = pruning.DEFAULT_GRID
    q0 = law.q0
    mm = (1.0 - q0) * float(law.dq_comp(1.0 - q0))
    res_rows = []
    for z in grid:
        w = 1.0 - z
        lhs = float(law.qmz_comp(w))
        rhs = float(law.qmz_comp((1.0 - q0) * w)) / mm
        res_rows.append((float(z), abs(lhs - rhs)))
    path_res = os.path.join(out, "oscillatory_residual.csv")
    _write_csv(path_res, ["z", "residual"], res_rows)
    l_q, l_b = pruning.oscillatory_L(law)
    # fine agreement tolerance: the phase oscillation shrinks rapidly as
    # q0 -> 1/2 and the default 1e-3 would wash it out
    probe = dists.regularity_probe(law, dists.ProbeConfig(agreement_tol=1e-8))
    _write_summary(os.path.join(out, "oscillatory_summary.json"), "oscillatory",
                   {"q0": args.q0, "m_max": args.m_max},
                   {"A": law.A, "B": law.B, "n_range": law.n_range,
                    "criticality_gap": pruning.oscillatory_criticality_gap(law),
                    "invariance_residual": max(r for _, r in res_rows),
                    "L_from_identity": l_q, "L_from_lattice": l_b,
                    "probe_status": probe.status,
                    "probe_spread": probe.phase_spread,
                    "probe_phase_values": [float(v) for v in probe.phase_values],
                    "files": [path_qm, path_res]})
    print(f"B = {law.B:.9f}, A = {law.A:.9f}, probe: {probe.status}")
    return 0


def cmd_prune_tree(args):
    with open(args.infile) as fh:
        tree = Tree.from_json(fh.read())
    pruned = horton_prune(tree)
    with open(args.outfile, "w") as fh:
        fh.write(pruned.to_json())
        fh.write("\n")
    return 0


def cmd_order(args):
    with open(args.infile) as fh:
        tree = Tree.from_json(fh.read())
    ordered = hs_order_recursive(tree)
    print(ordered.order)
    if args.outfile:
        payload = {"order": ordered.order,
                   "vertex_order": list(ordered.vertex_order)}
        if ordered.order >= 1 and tree.is_planted and tree.is_reduced:
            bs = branch_statistics(tree)
            payload["N"] = bs.N[1:].tolist()
            payload["n_side"] = bs.n_side[1:, 1:].tolist()
            payload["n_side_regular"] = bs.n_side_regular[1:, 1:].tolist()
        with open(args.outfile, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="gwprune",
        description="Horton pruning of Galton-Watson trees: invariant laws, "
                    "attractors, and Tokunaga statistics.")
    p.add_argument("--out-dir", default=None,
                   help="output directory (default: $GWPRUNE_OUT_DIR or .)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("igw", help="invariant-law tables and constants")
    s.add_argument("--q0", type=float)
    s.add_argument("--sweep", help="lo:hi:step sweep of q0")
    s.add_argument("--kmax", type=int, default=64)
    s.add_argument("--order", type=int, default=8)
    s.set_defaults(func=cmd_igw)

    s = sub.add_parser("converge", help="iterate pruning to an attractor")
    s.add_argument("--dist", required=True)
    s.add_argument("--steps", type=int, default=60)
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--dump-laws", action="store_true",
                   help="also dump every step's law as JSON")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("mc", help="Monte Carlo Tokunaga estimates")
    s.add_argument("--dist", required=True)
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--trees", type=int, required=True)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--max-vertices", type=int,
                   default=sampler.DEFAULT_MAX_VERTICES)
    s.add_argument("--budget", type=int, default=20_000_000,
                   help="max rejection-sampling attempts")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("oscillatory",
                       help="build the oscillatory invariant law")
    s.add_argument("--q0", type=float, required=True)
    s.add_argument("--m-max", type=int, default=400)
    s.set_defaults(func=cmd_oscillatory)

    s = sub.add_parser("prune-tree", help="Horton-prune a tree file")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", dest="outfile", required=True)
    s.set_defaults(func=cmd_prune_tree)

    s = sub.add_parser("order", help="order and branch statistics of a tree")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", dest="outfile")
    s.set_defaults(func=cmd_order)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CapacityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (NumericalError, TruncationError, StructuralError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT
    except ConditioningError as exc:
        print(f"conditioning failure: {exc}", file=sys.stderr)
        return CONDITIONING_EXIT


if __name__ == "__main__":
    sys.exit(main())
