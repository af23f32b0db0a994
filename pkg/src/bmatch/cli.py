"""End-to-end experiment driver: generate -> solve -> measure -> compare.

Subcommands:

* ``simulate`` runs a seeded Monte Carlo campaign and writes one file per
  requested empirical curve plus a JSON manifest (config echo, seed rule,
  version, wall time, file list).
* ``analyze`` emits the analytical counterparts (mean-field solvers,
  exact recursion, fluid limits) on the same supports, for direct
  comparison.
* ``compare`` aligns two curve files step-constantly on the coarser
  support and reports sup / mean absolute distance; its exit status is 0
  iff the sup distance is within ``--tol``, which makes validation runs
  scriptable.

Curve files are CSV (header line, 12 significant digits) or JSON
({meta, support, values}); the support column name states the curve kind
and must agree between compared files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import KIND_MATRIX, KIND_NODE, KIND_TORUS, KINDS, NORM_TAXICAB, NORMS
from .fluid import (
    acceptable_rank_ccdf,
    fluid_node_bmatch,
    fluid_rank_bmatch,
    s_distance,
    s_rank_approx,
    torus_diameter,
)
from .generate import (
    SEED_RULE,
    GenSpec,
    MatrixCampaign,
    edge_prob_from_degree,
    load_latency_matrix,
)
from .meanfield import solve_node_bmatch, solve_node_exact_b1, solve_rank_bmatch
from .metrics import (
    AcceptableRankTally,
    DistanceTally,
    GraphStatsTally,
    PairTally,
    RankTally,
    collect,
)

SIM_CURVES = ("rank", "pair", "distance", "accept", "graph")
ANA_CURVES = (
    "rank-mf",
    "rank-fluid",
    "node-mf",
    "node-exact",
    "node-fluid",
    "distance",
    "accept",
    "accept-adjusted",
)


@dataclass
class ExperimentConfig:
    """One simulate/analyze run, as echoed into the manifest."""

    n_nodes: int
    edge_prob: float
    quota: int = 1
    kind: str = "acyclic"
    dim: int = 1
    norm: str = NORM_TAXICAB
    seed: int = 0
    instances: int = 1
    curves: tuple[str, ...] = ("rank",)
    slots: tuple[int, ...] = ()
    pair_nodes: tuple[int, ...] = ()
    bins: int = 200
    grid: int = 2000
    latency_file: str | None = None
    out_dir: str = "."
    fmt: str = "csv"
    jobs: int = 1

    def validate(self, command: str) -> None:
        if self.instances < 1:
            raise ValueError("--instances must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ValueError("--format must be csv or json")
        if self.kind not in KINDS:
            raise ValueError(f"--kind must be one of {KINDS}")
        if self.kind == KIND_MATRIX and not self.latency_file:
            raise ValueError("kind 'matrix' needs --latency-file")
        bad = [c for c in self.curves if c not in (SIM_CURVES if command == "simulate" else ANA_CURVES)]
        if bad:
            raise ValueError(f"unknown curve(s) {bad} for {command}")
        if "pair" in self.curves or any(c.startswith("node-") for c in self.curves):
            if command == "simulate" and self.kind != KIND_NODE:
                raise ValueError("pair curves need a node-based campaign (--kind node)")
            if not self.pair_nodes:
                raise ValueError("pair/node curves need focal nodes via --i")
        if "distance" in self.curves and command == "simulate" and self.kind != KIND_TORUS:
            raise ValueError("distance curves need a geometric campaign (--kind torus)")

    @property
    def slot_list(self) -> tuple[int, ...]:
        return self.slots if self.slots else tuple(range(1, self.quota + 1))


# --- curve files ----------------------------------------------------------


def write_curve(path: Path, support_name: str, support, value_name: str, values, meta: dict) -> None:
    support = np.asarray(support)
    values = np.asarray(values)
    if path.suffix == ".json":
        payload = {
            "meta": {"support": support_name, "value": value_name, **meta},
            "support": support.tolist(),
            "values": values.tolist(),
        }
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
        return
    lines = [f"{support_name},{value_name}"]
    for s, v in zip(support, values):
        lines.append(f"{s:.12g},{v:.12g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curve(path: Path) -> tuple[str, np.ndarray, np.ndarray, dict]:
    """Returns (support_name, support, values, meta) for either file format."""
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        meta = payload.get("meta", {})
        return (
            str(meta.get("support", "support")),
            np.asarray(payload["support"], dtype=np.float64),
            np.asarray(payload["values"], dtype=np.float64),
            meta,
        )
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    header = lines[0].split(",")
    body = np.asarray([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    return header[0], body[:, 0], body[:, 1], {"support": header[0], "value": header[1]}


# --- simulate ---------------------------------------------------------------


def _campaign(config: ExperimentConfig):
    if config.kind == KIND_MATRIX:
        marks = load_latency_matrix(config.latency_file)
        return MatrixCampaign(
            marks=marks,
            n_nodes=min(config.n_nodes, marks.shape[0]),
            edge_prob=config.edge_prob,
            quota=config.quota,
            seed=config.seed,
        )
    return GenSpec(
        n_nodes=config.n_nodes,
        edge_prob=config.edge_prob,
        quota=config.quota,
        kind=config.kind,
        dim=config.dim,
        norm=config.norm,
        seed=config.seed,
    )


def _write_manifest(config: ExperimentConfig, command: str, files: list[Path], t0: float) -> Path:
    out = Path(config.out_dir)
    manifest = {
        "tool": "bmatch",
        "version": __version__,
        "command": command,
        "config": asdict(config),
        "seed_rule": SEED_RULE,
        "wall_time_s": round(time.time() - t0, 3),
        "created_unix": round(time.time(), 3),
        "files": [f.name for f in files],
    }
    path = out / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path


def cmd_simulate(config: ExperimentConfig) -> list[Path]:
    """Run the campaign and write one file per requested empirical curve."""
    config.validate("simulate")
    t0 = time.time()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    campaign = _campaign(config)
    n = campaign.n_nodes

    tallies = []
    handles = []
    for c in config.curves:
        if c == "rank":
            for slot in config.slot_list:
                tallies.append(RankTally(n, slot))
                handles.append(("rank", slot, None))
        elif c == "accept":
            for slot in config.slot_list:
                tallies.append(AcceptableRankTally(n, slot))
                handles.append(("accept", slot, None))
        elif c == "distance":
            for slot in config.slot_list:
                tallies.append(DistanceTally(config.dim, config.norm, config.bins, slot))
                handles.append(("distance", slot, None))
        elif c == "pair":
            for i in config.pair_nodes:
                for slot in config.slot_list:
                    tallies.append(PairTally(n, i, slot))
                    handles.append(("pair", slot, i))
        elif c == "graph":
            tallies.append(GraphStatsTally())
            handles.append(("graph", None, None))
    if not tallies:
        raise ValueError("nothing to do: no curves requested")

    tallies = collect(campaign, config.instances, tallies, jobs=config.jobs)

    ext = "." + config.fmt
    files: list[Path] = []
    for (name, slot, i), tally in zip(handles, tallies):
        if name == "graph":
            path = out / ("graph_stats" + ext)
            _write_graph_stats(path, tally.finalize())
            files.append(path)
            continue
        curve = tally.finalize()
        meta = {"command": "simulate", "n": n, "p": config.edge_prob, "b": config.quota,
                "kind": config.kind, "instances": config.instances, "seed": config.seed,
                **curve.meta}
        if name == "rank":
            path = out / (f"rank_ccdf_s{slot}" + ext)
            write_curve(path, "rank", curve.support, "ccdf_empirical", curve.ccdf, meta)
        elif name == "accept":
            path = out / (f"accept_ccdf_s{slot}" + ext)
            write_curve(path, "accept_rank", curve.support, "ccdf_empirical", curve.ccdf, meta)
        elif name == "distance":
            path = out / (f"distance_ccdf_s{slot}" + ext)
            write_curve(path, "distance", curve.support, "ccdf_empirical", curve.ccdf, meta)
        elif name == "pair":
            path = out / (f"pair_mass_i{i}_s{slot}" + ext)
            write_curve(path, "node", curve.support, "mass_empirical", curve.mass, meta)
        files.append(path)
    files.append(_write_manifest(config, "simulate", files, t0))
    return files


def _write_graph_stats(path: Path, rows: list[dict]) -> None:
    cols = ["aspl", "disconnected_pairs", "mean_eccentricity", "diameter",
            "transitivity", "mean_local", "baseline"]
    if path.suffix == ".json":
        path.write_text(json.dumps({"meta": {"table": "graph_stats"}, "rows": rows}, indent=1) + "\n",
                        encoding="utf-8")
        return
    lines = ["instance," + ",".join(cols)]
    for k, row in enumerate(rows):
        vals = ",".join("" if row[c] is None else f"{row[c]:.12g}" for c in cols)
        lines.append(f"{k},{vals}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- analyze ----------------------------------------------------------------


def cmd_analyze(config: ExperimentConfig) -> list[Path]:
    """Emit analytical curves on the supports cmd_simulate uses."""
    config.validate("analyze")
    t0 = time.time()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    N, p, b = config.n_nodes, config.edge_prob, config.quota
    d = p * (N - 1)
    ext = "." + config.fmt
    files: list[Path] = []
    meta = {"command": "analyze", "n": N, "p": p, "b": b, "d": d}

    def emit(name: str, support_name: str, support, value_name: str, values) -> None:
        path = out / (name + ext)
        write_curve(path, support_name, support, value_name, values, meta)
        files.append(path)

    Ks = np.arange(1, N + 1)
    for c in config.curves:
        if c == "rank-mf":
            for rd in solve_rank_bmatch(N, p, b):
                if rd.slot in config.slot_list:
                    emit(f"rank_ccdf_mf_s{rd.slot}", "rank", Ks, "S_R_meanfield", rd.s_vals)
        elif c == "rank-fluid":
            if b == 1:
                emit("rank_ccdf_fluid_s1", "rank", Ks, "S_R_fluid", s_rank_approx(Ks, p))
            else:
                for fc in fluid_rank_bmatch(d, b, config.grid):
                    slot = fc.meta["slot"]
                    if slot in config.slot_list:
                        vals = np.interp((Ks - 1) / (N - 1), fc.grid, fc.values)
                        emit(f"rank_ccdf_fluid_s{slot}", "rank", Ks, "S_R_fluid", vals)
        elif c == "node-mf":
            pd = solve_node_bmatch(N, p, b)
            for i in config.pair_nodes:
                for slot in config.slot_list:
                    emit(f"pair_mass_mf_i{i}_s{slot}", "node", Ks, "D_meanfield", pd.row(i, slot))
        elif c == "node-exact":
            if b != 1:
                raise ValueError("the exact recursion is defined for b=1 only")
            pd = solve_node_exact_b1(N, p)
            for i in config.pair_nodes:
                emit(f"pair_mass_exact_i{i}_s1", "node", Ks, "D_exact", pd.row(i))
        elif c == "node-fluid":
            if b == 1:
                js = Ks.astype(np.float64)
                for i in config.pair_nodes:
                    e = np.exp(p * np.abs(js - i))
                    vals = p * e / (1.0 - np.exp(-p * np.minimum(js, i)) + e) ** 2
                    emit(f"pair_mass_fluid_i{i}_s1", "node", Ks, "D_fluid", vals)
            else:
                for fc in fluid_node_bmatch(d, b, config.grid):
                    slot = fc.meta["slot"]
                    if slot not in config.slot_list:
                        continue
                    for i in config.pair_nodes:
                        ai = np.searchsorted(fc.alpha_grid, (i - 1) / N, side="right") - 1
                        vals = np.interp((Ks - 1) / N, fc.grid, fc.values[ai])
                        emit(f"pair_ccdf_fluid_i{i}_s{slot}", "node", Ks, "S_fluid", vals)
        elif c == "distance":
            if config.kind != KIND_TORUS:
                raise ValueError("distance curves need --kind torus")
            xs = np.linspace(0.0, torus_diameter(config.dim, config.norm), config.bins + 1)
            emit("distance_ccdf_fluid_s1", "distance", xs,
                 "S_X_fluid", s_distance(xs, d, config.dim, config.norm))
        elif c in ("accept", "accept-adjusted"):
            rd = acceptable_rank_ccdf(N, p, adjusted=(c == "accept-adjusted"))
            tag = "adj" if c == "accept-adjusted" else "raw"
            emit(f"accept_ccdf_{tag}", "accept_rank", Ks, f"S_r_{tag}", rd.s_vals)
    files.append(_write_manifest(config, "analyze", files, t0))
    return files


# --- compare ----------------------------------------------------------------


def cmd_compare(file_a, file_b, tol: float = np.inf, report_path=None) -> tuple[int, dict]:
    """Compare two curve files; exit status 0 iff sup distance <= tol."""
    name_a, sup_a, val_a, meta_a = read_curve(Path(file_a))
    name_b, sup_b, val_b, meta_b = read_curve(Path(file_b))
    if name_a != name_b:
        raise ValueError(f"incompatible curve kinds: {name_a!r} vs {name_b!r}")
    # step-constant alignment on the coarser support
    if sup_a.size <= sup_b.size:
        coarse_sup, coarse_val = sup_a, val_a
        other_sup, other_val = sup_b, val_b
    else:
        coarse_sup, coarse_val = sup_b, val_b
        other_sup, other_val = sup_a, val_a
    idx = np.clip(np.searchsorted(other_sup, coarse_sup, side="right") - 1, 0, other_sup.size - 1)
    aligned = other_val[idx]
    residuals = coarse_val - aligned if sup_a.size <= sup_b.size else aligned - coarse_val
    sup_dist = float(np.abs(residuals).max()) if residuals.size else 0.0
    mean_abs = float(np.abs(residuals).mean()) if residuals.size else 0.0
    report = {
        "file_a": str(file_a),
        "file_b": str(file_b),
        "support": name_a,
        "points": int(coarse_sup.size),
        "sup_distance": sup_dist,
        "mean_abs_distance": mean_abs,
        "tol": None if np.isinf(tol) else tol,
        "residuals": [{"support": float(s), "residual": float(r)}
                      for s, r in zip(coarse_sup, residuals)],
    }
    if report_path is not None:
        Path(report_path).write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    status = 0 if sup_dist <= tol else 1
    return status, report


# --- argument parsing ---------------------------------------------------------


def _add_model_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n", type=int, required=True, help="number of nodes N")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--p", type=float, help="edge probability of the acceptance graph")
    grp.add_argument("--d", type=float, help="expected degree; converted via p = d/(N-1)")
    sp.add_argument("--b", type=int, default=1, help="quota (mates per node)")
    sp.add_argument("--kind", choices=KINDS, default="acyclic")
    sp.add_argument("--dim", type=int, default=1, help="torus dimension")
    sp.add_argument("--norm", choices=NORMS, default=NORM_TAXICAB)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--latency-file", help="latency matrix for --kind matrix")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--slots", default="", help="comma list of slots (default: 1..b)")
    sp.add_argument("--i", default="", help="comma list of focal nodes for pair curves")
    sp.add_argument("--bins", type=int, default=200, help="distance histogram bins")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _config_from(args: argparse.Namespace, curves: tuple[str, ...]) -> ExperimentConfig:
    p = args.p if args.p is not None else edge_prob_from_degree(args.d, args.n)
    return ExperimentConfig(
        n_nodes=args.n,
        edge_prob=p,
        quota=args.b,
        kind=args.kind,
        dim=args.dim,
        norm=args.norm,
        seed=args.seed,
        instances=getattr(args, "instances", 1),
        curves=curves,
        slots=_parse_int_list(args.slots),
        pair_nodes=_parse_int_list(args.i),
        bins=args.bins,
        grid=getattr(args, "grid", 2000),
        latency_file=args.latency_file,
        out_dir=args.out,
        fmt=args.format,
        jobs=getattr(args, "jobs", 1),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmatch",
        description="Stable b-matchings of preference-based systems: simulate, analyze, compare.",
    )
    parser.add_argument("--version", action="version", version=f"bmatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded Monte Carlo campaign")
    _add_model_args(sim)
    sim.add_argument("--instances", type=int, default=1)
    sim.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sim.add_argument("--curves", default="rank",
                     help=f"comma list from {','.join(SIM_CURVES)}")

    ana = sub.add_parser("analyze", help="emit solver and fluid curves")
    _add_model_args(ana)
    ana.add_argument("--grid", type=int, default=2000, help="fluid integration grid")
    ana.add_argument("--curves", default="rank-mf,rank-fluid",
                     help=f"comma list from {','.join(ANA_CURVES)}")

    cmp_ = sub.add_parser("compare", help="compare two curve files")
    cmp_.add_argument("file_a")
    cmp_.add_argument("file_b")
    cmp_.add_argument("--tol", type=float, default=np.inf,
                      help="exit 0 iff sup distance <= tol")
    cmp_.add_argument("--out", help="write the full JSON report here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            files = cmd_simulate(_config_from(args, tuple(args.curves.split(","))))
            for f in files:
                print(f)
            return 0
        if args.command == "analyze":
            files = cmd_analyze(_config_from(args, tuple(args.curves.split(","))))
            for f in files:
                print(f)
            return 0
        if args.command == "compare":
            status, report = cmd_compare(args.file_a, args.file_b, args.tol, args.out)
            print(f"support: {report['support']}  points: {report['points']}")
            print(f"sup_distance: {report['sup_distance']:.6g}")
            print(f"mean_abs_distance: {report['mean_abs_distance']:.6g}")
            if report["tol"] is not None:
                print("PASS" if status == 0 else "FAIL", f"(tol {report['tol']:g})")
            return status
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
