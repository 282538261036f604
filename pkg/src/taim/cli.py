"""Command-line front end: ``taim ingest | run | gap | verify``.

Exit codes: 0 success, 1 user error (bad flags, unreadable input, bad
config), 2 contract violation or failed verification.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import struct
import sys
import time
from pathlib import Path

import numpy as np

from . import oracle
from .graph import EdgeListParseError, Graph, GraphError, ProbModel, ProbModelError, generate_power_law, load_edge_list
from .policies import make_policy
from .process import ContractViolation, ProcessConfig, run_trials
from .rng import stream
from .rrset import SelectorConfig

SCHEMA_VERSION = 1
ARTIFACT_MAGIC = b"TAIMGRPH"
ARTIFACT_VERSION = 1

RESULT_COLUMNS = ["dataset", "policy", "params", "T", "K", "trials", "mean_influence", "stddev", "ci95",
                  "mean_wall_time_per_decision"]
TRACE_COLUMNS = ["policy", "params", "trial", "step", "t", "seeds_used", "cumulative_budget", "influence",
                 "diagnostics"]
GAP_COLUMNS = ["N", "p", "delta_ad", "delta_nonad", "ratio", "simulated_ad", "simulated_ad_se",
               "exhaustive_nonad", "limit", "closed_form_limit"]


class UserError(Exception):
    pass


# ---------------------------------------------------------------------------
# graph artifacts

def save_graph_artifact(graph: Graph, path) -> None:
    """Write magic, version, a JSON header, then the raw edge arrays.

    The header is serialized with sorted keys, so equal graphs give equal bytes.
    """
    header = {
        "n": graph.n,
        "m": graph.m,
        "meta": {k: v for k, v in sorted(graph.meta.items())},
        "labels": None if graph.labels is None else [str(x) for x in graph.labels],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(ARTIFACT_MAGIC)
        fh.write(struct.pack("<II", ARTIFACT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(graph.src, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(graph.dst, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(graph.prob, dtype="<f8").tobytes())


def load_graph_artifact(path) -> Graph:
    data = Path(path).read_bytes()
    if data[:8] != ARTIFACT_MAGIC:
        raise UserError(f"{path}: not a graph artifact")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != ARTIFACT_VERSION:
        raise UserError(f"{path}: unsupported artifact version {version}")
    header = json.loads(data[16:16 + hlen])
    m = header["m"]
    off = 16 + hlen
    src = np.frombuffer(data, "<i8", m, off)
    dst = np.frombuffer(data, "<i8", m, off + 8 * m)
    prob = np.frombuffer(data, "<f8", m, off + 16 * m)
    return Graph.from_edges(header["n"], src, dst, prob, labels=header["labels"], meta=header["meta"])


def resolve_dataset(ref: str, prob_model: str = "wc") -> Graph:
    """``powerlaw:n,exponent,avg_degree,seed``, a ``.taim`` artifact, or an edge list."""
    if ref.startswith("powerlaw:"):
        try:
            n, exp, deg, seed = ref.split(":", 1)[1].split(",")
            return generate_power_law(int(n), float(exp), float(deg), int(seed), prob_model)
        except ValueError as exc:
            raise UserError(f"bad generator reference {ref!r}: {exc}") from exc
    path = Path(ref)
    if not path.exists():
        raise UserError(f"dataset {ref!r} not found")
    if path.read_bytes()[:8] == ARTIFACT_MAGIC:
        return load_graph_artifact(path)
    return load_edge_list(path, prob_model)


# ---------------------------------------------------------------------------
# config

def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def load_experiment(path) -> dict:
    """Parse the INI experiment file into a fully resolved spec dict.

    ``[experiment]`` holds dataset, prob_model, T, K, trials, seed and
    output; ``[selector]`` the RR selector; every ``[policy.<name>]``
    section adds a policy, and comma-separated values sweep.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise UserError(f"cannot read config {path}")
    if "experiment" not in cp:
        raise UserError("config needs an [experiment] section")
    ex = cp["experiment"]
    try:
        spec = {
            "dataset": ex["dataset"],
            "prob_model": ex.get("prob_model", "wc"),
            "T": ex.getint("T"),
            "K": ex.getint("K"),
            "trials": ex.getint("trials", 1),
            "seed": ex.getint("seed", 0),
            "workers": ex.getint("workers", 1),
            "output": ex.get("output", "results"),
        }
    except (KeyError, ValueError) as exc:
        raise UserError(f"bad [experiment] section: {exc}") from exc
    if spec["T"] is None or spec["K"] is None:
        raise UserError("[experiment] needs T and K")
    sel = cp["selector"] if "selector" in cp else {}
    try:
        selector = SelectorConfig(
            epsilon=float(sel.get("epsilon", 0.5)),
            confidence=float(sel.get("confidence", 1.0)),
            mode=sel.get("mode", "adaptive"),
            count=int(sel.get("count", 10_000)),
        )
    except ValueError as exc:
        raise UserError(f"bad [selector] section: {exc}") from exc
    spec["selector"] = selector.as_dict()
    policies = []
    for name in cp.sections():
        if not name.startswith("policy."):
            continue
        kind = name.split(".", 1)[1].split(":")[0]
        keys = list(cp[name].keys())
        grids = [_split(cp[name][k]) for k in keys]
        for combo in itertools.product(*grids):
            policies.append({"policy": kind, "params": dict(zip(keys, combo))})
    if not policies:
        raise UserError("config lists no [policy.<name>] sections")
    spec["policies"] = policies
    return spec


def _build_policy(entry: dict, selector: dict):
    params = {}
    for k, v in entry["params"].items():
        params[k] = [int(x) for x in v.split("-")] if k == "pattern" else v
    return make_policy(entry["policy"], SelectorConfig(**selector), **params)


def _write_csv(path: Path, columns, rows, spec: dict) -> None:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write("# spec=" + json.dumps(spec, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> list[dict]:
    """Rows of a harness CSV, skipping the leading comment lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _compact(trace: dict) -> str:
    keep = {}
    for key in ("case", "k_star", "ind", "beta"):
        if key in trace:
            val = trace[key]
            if isinstance(val, list):
                val = [None if x is None else round(float(x), 4) for x in val]
            keep[key] = val
    return json.dumps(keep, sort_keys=True) if keep else ""


def run_experiment(spec: dict, outdir, log=print) -> tuple[Path, Path]:
    graph = resolve_dataset(spec["dataset"], spec["prob_model"])
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results, traces = [], []
    for entry in spec["policies"]:
        policy = _build_policy(entry, spec["selector"])
        cfg = ProcessConfig(spec["T"], spec["K"], spec["trials"], spec["seed"], spec["workers"], keep_traces=True)
        t0 = time.perf_counter()
        summary = run_trials(graph, policy, cfg)
        params = json.dumps(entry["params"], sort_keys=True)
        results.append([spec["dataset"], entry["policy"], params, spec["T"], spec["K"], spec["trials"],
                        f"{summary.mean:.6f}", f"{summary.stddev:.6f}", f"{summary.ci95:.6f}",
                        f"{summary.mean_decision_time:.6g}"])
        for r in summary.results:
            for step_trace, used, cum in zip(r.traces, r.seeds_used, r.cumulative):
                traces.append([entry["policy"], params, r.trial, step_trace["step"], step_trace["t"], used, cum,
                               r.influence, _compact(step_trace)])
        if log:
            log(f"{policy.label()}: mean {summary.mean:.2f} +- {summary.ci95:.2f} "
                f"({time.perf_counter() - t0:.1f}s, {summary.mean_decision_time * 1e3:.2f} ms/decision)")
    res_path, tr_path = outdir / "results.csv", outdir / "traces.csv"
    _write_csv(res_path, RESULT_COLUMNS, results, spec)
    _write_csv(tr_path, TRACE_COLUMNS, traces, spec)
    return res_path, tr_path


def gap_rows(Ns, trials: int, seed: int = 0, exhaustive_max_N: int = 5) -> list[list]:
    rows = []
    for N in Ns:
        inst = oracle.gap_closed_forms(N)
        sim, se = "", ""
        if trials > 0:
            x = oracle.gap_policy_samples(N, trials, stream(seed, "oracle", N))
            sim = f"{x.mean():.9g}"
            se = f"{x.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0:.6g}"
        exh = ""
        if N <= exhaustive_max_N:
            _, val = oracle.exact_optimal_nonadaptive(oracle.gap_line(N), 2 * N, 2)
            exh = f"{val:.12g}"
        rows.append([N, f"{inst.p:.12g}", f"{inst.delta_ad:.12g}", f"{inst.delta_nonad:.12g}",
                     f"{inst.ratio:.12g}", sim, se, exh, f"{oracle.LIMIT_RATIO:.12g}",
                     f"{oracle.CLOSED_FORM_LIMIT:.12g}"])
    return rows


# ---------------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _prob_model(text: str) -> ProbModel:
    try:
        return ProbModel.parse(text)
    except (ProbModelError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"invalid --prob-model {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="taim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ing = sub.add_parser("ingest", help="edge list -> binary graph artifact")
    ing.add_argument("input")
    ing.add_argument("-o", "--output", required=True)
    ing.add_argument("--prob-model", type=_prob_model, default=ProbModel.parse("wc"),
                     help="wc, uniform:<p> or explicit (default wc)")

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("-o", "--output", help="output directory (overrides the config)")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)

    gap = sub.add_parser("gap", help="adaptive-gap report on the line construction")
    gap.add_argument("--N", type=int, nargs="*", default=[2, 3, 5, 10])
    gap.add_argument("--trials", type=int, default=100_000)
    gap.add_argument("--seed", type=int, default=0)
    gap.add_argument("-o", "--output", default="gap.csv")

    ver = sub.add_parser("verify", help="oracle-equivalence self-tests")
    ver.add_argument("--tier", choices=["quick", "full"], default="quick")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--inject-depth-bias", type=int, default=0,
                     help="shift the RR-set depth cap (mutation test of the harness)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            graph = load_edge_list(args.input, args.prob_model)
            save_graph_artifact(graph, args.output)
            print(f"wrote {args.output}: n={graph.n} m={graph.m} model={args.prob_model}")
            return 0
        if args.command == "run":
            spec = load_experiment(args.config)
            for key in ("trials", "seed", "workers"):
                if getattr(args, key) is not None:
                    spec[key] = getattr(args, key)
            if args.output:
                spec["output"] = args.output
            res, tr = run_experiment(spec, spec["output"])
            print(f"wrote {res} and {tr}")
            return 0
        if args.command == "gap":
            if any(N < 2 for N in args.N):
                raise UserError("--N values must be >= 2")
            spec = {"command": "gap", "N": args.N, "trials": args.trials, "seed": args.seed}
            _write_csv(Path(args.output), GAP_COLUMNS, gap_rows(args.N, args.trials, args.seed), spec)
            print(f"wrote {args.output}")
            return 0
        if args.command == "verify":
            from .verify import run_checks
            results = run_checks(args.tier, args.seed, args.inject_depth_bias)
            failed = [r.name for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} checks passed")
            return 2 if failed else 0
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 2
    except (UserError, GraphError, EdgeListParseError, ProbModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
