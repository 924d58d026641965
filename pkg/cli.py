"""Command-line experiment runner.

Subcommands:
    simulate  epsilon sweeps of phi(s) on any graph (one CSV row per (eps, replicate))
    exact     complete-graph report: B, u1_bar(B), v1_bar, exact stationary mean, gap
    dual      edge-dual coupling check, native particle runs, agreement density on a ring
    hitting   entry and exit times of the checkerboard pair on bipartite graphs

Every CSV starts with a ``#`` metadata line (output version and the echoed
arguments) followed by a header row.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from config import settings
from dual import (EdgeConfiguration, agreement_probability, couple_and_verify, project,
                  simulate_dual_native)
from dynamics import initial_configuration, parse_init
from engine import ENGINES, simulate
from errors import DivisionOfLaborError, GraphError, SpecError
from exact import exact_report_rows
from graph import Graph, find_bipartition, make_cycle, parse_graph_spec
from hitting import estimate_hitting_times
from logger_config import setup_logger
from sampling import RandomStream
from schemas import ExperimentSpec, Params

logger = setup_logger(__name__, 'cli.log')

SIMULATE_COLUMNS = [
    "graph_spec", "N", "c1", "c2", "epsilon", "engine", "seed", "replicate", "updates",
    "sim_time", "phi", "phi_post_burnin", "residence_xi_plus", "residence_xi_minus", "absorbed",
]
EXACT_COLUMNS = ["N", "c1", "c2", "epsilon", "B", "u1_bar", "v1_bar", "stationary_mean", "gap"]
COUPLING_COLUMNS = [
    "N", "c1", "c2", "epsilon", "seed", "replicate", "events", "flips", "jumps", "births",
    "annihilations", "ok",
]
NATIVE_COLUMNS = [
    "N", "c1", "c2", "epsilon", "seed", "replicate", "initial_particles", "final_particles",
    "jumps_left", "jumps_right", "births", "annihilations", "extinction_time", "final_time",
]
AGREEMENT_COLUMNS = [
    "N", "c1", "c2", "epsilon", "p", "horizon", "burnin", "replicates", "agreement",
    "agreement_se", "phi", "phi_se", "window_phi", "window_phi_se", "window_half_width",
    "boundary",
]
HITTING_COLUMNS = [
    "graph_spec", "N", "N1", "N2", "c1", "c2", "epsilon", "replicates", "mean_t_in", "se_t_in",
    "mean_t_out_plus", "se_t_out_plus", "mean_t_out_minus", "se_t_out_minus",
    "expected_t_out_plus", "expected_t_out_minus", "t_out_lower_bound",
]

# pool of the sweep in progress, so a signal handler can cancel it
_active_pool: Optional[ProcessPoolExecutor] = None


class ToolkitArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises SpecError instead of exiting."""

    def error(self, message):
        token = None
        marker = "unrecognized arguments: "
        if marker in message:
            token = message.split(marker, 1)[1].split()[0]
        elif "argument " in message:
            token = message.split("argument ", 1)[1].split(":")[0]
        raise SpecError(message, token)


def parse_epsilon_sweep(text: str) -> List[float]:
    """``start:end:steps`` -> ``steps`` evenly spaced values from start to end."""
    parts = text.split(":")
    if len(parts) != 3:
        raise SpecError("epsilon sweep must look like start:end:steps", text)
    try:
        start, end, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise SpecError("malformed epsilon sweep", text) from None
    if steps < 1:
        raise SpecError("epsilon sweep needs at least one step", parts[2])
    if not (0.0 <= start <= 1.0 and 0.0 <= end <= 1.0):
        raise SpecError("epsilon sweep bounds must lie in [0, 1]", text)
    if steps == 1:
        return [start]
    return [float(e) for e in np.linspace(start, end, steps)]


def _epsilons(args) -> List[float]:
    if args.epsilon_sweep is not None:
        return parse_epsilon_sweep(args.epsilon_sweep)
    return [args.epsilon]


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise SpecError("expected a comma-separated list of integers", text) from None
    if not values:
        raise SpecError("expected at least one value", text)
    return values


def _add_costs(parser: argparse.ArgumentParser):
    parser.add_argument("--c1", type=float, default=1.0, help="cost of task 1 (default 1)")
    parser.add_argument("--c2", type=float, default=2.0, help="cost of task 2 (default 2)")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon", type=float, help="defection probability")
    group.add_argument("--epsilon-sweep", metavar="START:END:STEPS",
                       help="linear sweep of defection probabilities")


def _add_run_options(parser: argparse.ArgumentParser, init_default: str):
    parser.add_argument("--replicates", type=int, default=1, help="replicates per point (default 1)")
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    parser.add_argument("--init", default=init_default,
                        help=f"all1 | all2 | bernoulli:p | explicit:1,2,... (default {init_default})")
    parser.add_argument("--out", help="CSV output path (default stdout)")


def build_parser() -> ToolkitArgumentParser:
    parser = ToolkitArgumentParser(
        prog="division-of-labor",
        description="Simulation and exact analysis of the two-task anti-voter model",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ToolkitArgumentParser)

    sim = sub.add_parser("simulate", help="phi(s) sweeps over eps")
    sim.add_argument("graph_spec", nargs="?", help="graph spec, e.g. complete:1000")
    sim.add_argument("--graph", help="graph spec (alternative to the positional form)")
    _add_costs(sim)
    budget = sim.add_mutually_exclusive_group(required=True)
    budget.add_argument("--updates", type=int, help="number of events to apply")
    budget.add_argument("--time", type=float, help="time horizon s")
    sim.add_argument("--burnin", type=float, help="also report phi over [burnin, s]")
    sim.add_argument("--engine", choices=sorted(ENGINES), default="gillespie")
    sim.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS,
                     help="worker processes (default from settings)")
    _add_run_options(sim, "all1")

    ex = sub.add_parser("exact", help="complete-graph closed form and exact chain")
    ex.add_argument("--N", dest="sizes", required=True, help="comma-separated list of N")
    _add_costs(ex)
    ex.add_argument("--out", help="CSV output path (default stdout)")

    du = sub.add_parser("dual", help="edge dual on a ring")
    du.add_argument("--N", dest="size", type=int, required=True, help="ring size (even)")
    _add_costs(du)
    du.add_argument("--time", type=float, required=True, help="horizon")
    mode = du.add_mutually_exclusive_group(required=True)
    mode.add_argument("--verify-coupling", action="store_true")
    mode.add_argument("--native", action="store_true")
    mode.add_argument("--agreement", action="store_true")
    du.add_argument("--until-extinct", action="store_true",
                    help="native mode: run until the particle count reaches 0")
    du.add_argument("--burnin", type=float, help="agreement mode: defaults to half the horizon")
    du.add_argument("--window", type=int, help="agreement mode: half-width M of the phi_N window")
    _add_run_options(du, "bernoulli:0.5")

    hit = sub.add_parser("hitting", help="entry/exit times of the checkerboard pair")
    hit.add_argument("--graph", required=True, help="connected bipartite graph spec")
    _add_costs(hit)
    hit.add_argument("--engine", choices=sorted(ENGINES), default="gillespie")
    _add_run_options(hit, "bernoulli:0.5")
    return parser


def _params(c1: float, c2: float, epsilon: float) -> Params:
    if c1 > c2:
        raise SpecError(f"costs must satisfy c1 <= c2 (task 1 is the cheaper task), "
                        f"got c1={c1}, c2={c2}", "--c1")
    return Params(c1=c1, c2=c2, epsilon=epsilon)


def _spec_from_args(args) -> ExperimentSpec:
    graph = args.graph or args.graph_spec
    if graph is None:
        raise SpecError("a graph spec is required (positional or --graph)")
    if args.graph and args.graph_spec and args.graph != args.graph_spec:
        raise SpecError("graph given twice", args.graph_spec)
    if args.c1 > args.c2:
        raise SpecError(f"costs must satisfy c1 <= c2 (task 1 is the cheaper task), "
                        f"got c1={args.c1}, c2={args.c2}", "--c1")
    try:
        parse_graph_spec(graph)
    except GraphError as e:
        raise SpecError(str(e), graph) from e
    try:
        parse_init(args.init)
    except DivisionOfLaborError as e:
        raise SpecError(str(e), args.init) from e
    try:
        return ExperimentSpec(
            graph=graph, c1=args.c1, c2=args.c2, epsilons=_epsilons(args), engine=args.engine,
            updates=args.updates, time=args.time, burnin=args.burnin,
            replicates=args.replicates, seed=args.seed, init=args.init, out=args.out,
            workers=args.workers,
        )
    except ValidationError as e:
        raise SpecError(f"invalid experiment: {e.errors()[0]['msg']}") from e


def parse_spec(argv: Sequence[str]) -> ExperimentSpec:
    """Parse the arguments of a ``simulate`` run (with or without the subcommand word)."""
    argv = list(argv)
    if not argv or argv[0] != "simulate":
        argv = ["simulate"] + argv
    return _spec_from_args(build_parser().parse_args(argv))


@lru_cache(maxsize=8)
def _graph(spec: str) -> Graph:
    return parse_graph_spec(spec)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: Iterable[Dict], columns: List[str], metadata: Dict, out: Optional[str] = None):
    """Write a metadata comment line, a header and one line per row."""
    buffer = io.StringIO()
    meta = {"version": settings.OUTPUT_VERSION, **metadata}
    buffer.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format(row.get(c)) for c in columns])
    text = buffer.getvalue()
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        raise SpecError(f"cannot write output file: {e.strerror}", out) from e


def read_csv(path: str):
    """Return (metadata, rows) of a file written by ``write_csv``."""
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
        meta = json.loads(first[2:]) if first.startswith("# ") else {}
        rows = list(csv.DictReader(handle))
    return meta, rows


def _simulate_point(spec_json: str, k: int, epsilon: float, replicate: int) -> Dict:
    spec = ExperimentSpec.model_validate_json(spec_json)
    graph = _graph(spec.graph)
    params = Params(c1=spec.c1, c2=spec.c2, epsilon=epsilon)
    summary = simulate(graph, params, parse_init(spec.init), spec.budget(), spec.engine,
                       seed=spec.seed, keys=(k, replicate), burnin=spec.burnin or 0.0)
    return {
        "graph_spec": spec.graph,
        "N": graph.vertex_count,
        "c1": spec.c1,
        "c2": spec.c2,
        "epsilon": epsilon,
        "engine": spec.engine,
        "seed": spec.seed,
        "replicate": replicate,
        "updates": summary.event_count,
        "sim_time": summary.sim_time,
        "phi": summary.phi,
        "phi_post_burnin": summary.phi_post_burnin,
        "residence_xi_plus": summary.residence.get("xi_plus"),
        "residence_xi_minus": summary.residence.get("xi_minus"),
        "absorbed": summary.absorbed,
    }


def run_sweep(spec: ExperimentSpec) -> List[Dict]:
    """Simulate every (eps, replicate) pair and write the CSV.

    Replicate r of sweep point k draws from the stream keyed (seed, k, r), so
    the rows do not depend on the number of workers. Rows are written in
    (eps, replicate) order.
    """
    global _active_pool
    spec_json = spec.model_dump_json()
    jobs = [(k, eps, r) for k, eps in enumerate(spec.epsilons) for r in range(spec.replicates)]
    logger.info(f"sweep on {spec.graph}: {len(spec.epsilons)} eps values x {spec.replicates} "
                f"replicates, engine={spec.engine}, workers={spec.workers}")
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            _active_pool = pool
            try:
                futures = [pool.submit(_simulate_point, spec_json, k, eps, r) for k, eps, r in jobs]
                rows = [f.result() for f in futures]
            finally:
                _active_pool = None
    else:
        rows = [_simulate_point(spec_json, k, eps, r) for k, eps, r in jobs]
    write_csv(rows, SIMULATE_COLUMNS, {"command": "simulate", "spec": spec.model_dump()}, spec.out)
    return rows


def cancel_pending():
    """Drop queued sweep jobs; running ones finish."""
    if _active_pool is not None:
        logger.warning("cancelling pending sweep jobs")
        _active_pool.shutdown(wait=False, cancel_futures=True)


def run_exact_report(sizes: Sequence[int], c1: float, c2: float, epsilons: Sequence[float],
                     out: Optional[str] = None) -> List[Dict]:
    if c1 > c2:
        raise SpecError(f"costs must satisfy c1 <= c2, got c1={c1}, c2={c2}", "--c1")
    rows = [row.model_dump() for row in exact_report_rows(sizes, c1, c2, epsilons)]
    write_csv(rows, EXACT_COLUMNS,
              {"command": "exact", "N": list(sizes), "c1": c1, "c2": c2, "epsilons": list(epsilons)},
              out)
    return rows


def run_dual(args) -> int:
    n = args.size
    epsilons = _epsilons(args)
    init = parse_init(args.init)
    meta = {"command": "dual", "N": n, "c1": args.c1, "c2": args.c2, "epsilons": epsilons,
            "horizon": args.time, "seed": args.seed, "init": init.label(), "boundary": "ring"}
    rows = []
    status = 0
    if args.agreement:
        if init.kind != "bernoulli":
            raise SpecError("agreement needs a Bernoulli initial law", args.init)
        for eps in epsilons:
            report = agreement_probability(n, _params(args.c1, args.c2, eps), init.p, args.time,
                                           args.replicates, args.seed, args.burnin, args.window)
            rows.append({"c1": args.c1, "c2": args.c2, "epsilon": eps, "p": init.p,
                         "N": report.vertex_count, **report.model_dump(exclude={"vertex_count"})})
        write_csv(rows, AGREEMENT_COLUMNS, meta, args.out)
        return status

    graph = make_cycle(n)
    for eps in epsilons:
        params = _params(args.c1, args.c2, eps)
        for r in range(args.replicates):
            base = {"N": n, "c1": args.c1, "c2": args.c2, "epsilon": eps, "seed": args.seed,
                    "replicate": r}
            if args.verify_coupling:
                report = couple_and_verify(n, params, init, args.time, args.seed, replicate=r)
                if not report.ok:
                    status = 1
                rows.append({**base, **report.model_dump(exclude={"vertex_count", "first_mismatch"})})
            else:
                config = initial_configuration(graph, init, RandomStream(args.seed, 1, r))
                edges: EdgeConfiguration = project(graph, config)
                trajectory = simulate_dual_native(
                    n, params, edges, args.time, args.seed, reference=int(config.tasks[0]),
                    until_extinct=args.until_extinct, record_events=False, replicate=r,
                )
                rows.append({
                    **base,
                    "initial_particles": edges.particle_count,
                    "final_particles": trajectory.final_edges.particle_count,
                    "jumps_left": trajectory.jumps_left,
                    "jumps_right": trajectory.jumps_right,
                    "births": trajectory.births,
                    "annihilations": trajectory.annihilations,
                    "extinction_time": trajectory.extinction_time,
                    "final_time": trajectory.final_time,
                })
    write_csv(rows, COUPLING_COLUMNS if args.verify_coupling else NATIVE_COLUMNS, meta, args.out)
    return status


def run_hitting(args) -> int:
    graph = parse_graph_spec(args.graph)
    if find_bipartition(graph) is None:
        raise SpecError("hitting times need a bipartite graph", args.graph)
    init = parse_init(args.init)
    rows = []
    for eps in _epsilons(args):
        report = estimate_hitting_times(graph, _params(args.c1, args.c2, eps), init,
                                        args.replicates, args.seed, args.engine)
        rows.append({"graph_spec": args.graph, "N": report.vertex_count, "N1": report.n1,
                     "N2": report.n2, "c1": args.c1, "c2": args.c2, "epsilon": eps,
                     **report.model_dump()})
    write_csv(rows, HITTING_COLUMNS,
              {"command": "hitting", "graph": args.graph, "seed": args.seed, "init": init.label()},
              args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "simulate":
            run_sweep(_spec_from_args(args))
            return 0
        if args.command == "exact":
            if args.c1 > args.c2:
                raise SpecError("costs must satisfy c1 <= c2 (task 1 is the cheaper task)", "--c1")
            run_exact_report(_int_list(args.sizes), args.c1, args.c2, _epsilons(args), args.out)
            return 0
        if args.command == "dual":
            return run_dual(args)
        return run_hitting(args)
    except (DivisionOfLaborError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        logger.error(f"unexpected failure running {argv}: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1
