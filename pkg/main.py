"""
TrustRoute - Main Entry Point
Command line for learning-augmented online routing: instance generation,
simulation, offline optimum, cover error, experiment matrix, adversarial
instances and plots.

Examples:
  python3 main.py gen --rows 5 --cols 5 --count 3 --per-instance 6 --out data/grid
  python3 main.py gen --instance data/grid/instance_000.json --sigma-location 2 --out data/pred.json
  python3 main.py simulate --instance data/grid/instance_000.json --prediction data/pred.json \
      --algo smart-trust --alpha 0.5 --trace results/trace.json
  python3 main.py error --instance data/grid/instance_000.json --prediction data/pred.json --k 1
  python3 main.py matrix --config scripts/experiments/grid_location.yaml --jobs 4
  python3 main.py adversarial --kind smarttrust --alpha 0.5 --eps 0.001 --run
"""

import argparse
import json
import math
import sys
from pathlib import Path

from utils.config import config
from utils.logger import get_logger, setup_logging


def _parse_k(text: str) -> float:
    if text.lower() in ("inf", "infinity", "∞"):
        return math.inf
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("k must be a positive integer or inf")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=f"{config.APP_NAME}: online routing with predictions")
    parser.add_argument("--log-level", default="", help="Override LOG_LEVEL (DEBUG shows every phase change)")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate instances, or a prediction for --instance")
    gen.add_argument("--instance", default="", help="Instance JSON to predict (prediction mode)")
    gen.add_argument("--space", choices=["grid", "halfline"], default="grid")
    gen.add_argument("--rows", type=int, default=5)
    gen.add_argument("--cols", type=int, default=5)
    gen.add_argument("--length", type=float, default=10.0, help="Half-line length")
    gen.add_argument("--points", type=int, default=21, help="Half-line grid points")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--per-instance", type=int, default=8)
    gen.add_argument("--horizon", type=float, default=10.0, help="Release horizon")
    gen.add_argument("--rides", action="store_true", help="Dial-a-Ride instances")
    gen.add_argument("--sigma-release", type=float, default=0.0)
    gen.add_argument("--sigma-location", type=float, default=0.0)
    gen.add_argument("--fraction", type=float, default=None, help="Partial prediction fraction")
    gen.add_argument("--delta", type=float, default=None, help="Scalar prediction C* + delta (half-line)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="", help="Output directory (instances) or file (prediction)")

    sim = commands.add_parser("simulate", help="Run one policy on one instance")
    sim.add_argument("--instance", required=True)
    sim.add_argument("--prediction", default="")
    sim.add_argument("--algo", default="smart-trust")
    sim.add_argument("--alpha", type=float, default=None)
    sim.add_argument("--sub", default="smartstart", help="delay-trust subroutine")
    sim.add_argument("--nu", type=float, default=None)
    sim.add_argument("--approx", action="store_true", help="Approximate tours")
    sim.add_argument("--practical", choices=["on", "off"], default="on",
                     help="off keeps predicted requests known to be absent")
    sim.add_argument("--opt-mode", choices=["exact", "approx"], default="exact")
    sim.add_argument("--trace", default="", help="Dump the full trace JSON here")

    opt = commands.add_parser("opt", help="Offline optimum of an instance")
    opt.add_argument("--instance", required=True)
    opt.add_argument("--nu", type=float, default=None)

    err = commands.add_parser("error", help="Cover error and prior error measures")
    err.add_argument("--instance", required=True)
    err.add_argument("--prediction", required=True)
    err.add_argument("--oracle", choices=["tsp", "darp", "st", "sf", "fl"], default="")
    err.add_argument("--k", type=_parse_k, default=1)
    err.add_argument("--opening-costs", default="", help="Comma separated facility costs per point")

    matrix = commands.add_parser("matrix", help="Run an experiment matrix from a YAML/JSON config")
    matrix.add_argument("--config", required=True)
    matrix.add_argument("--jobs", type=int, default=None)
    matrix.add_argument("--seed", type=int, default=None)
    matrix.add_argument("--out", default="")
    matrix.add_argument("--plot", action="store_true", help="Also write the SVG chart")

    adv = commands.add_parser("adversarial", help="Lower-bound instances")
    adv.add_argument("--kind", choices=["tradeoff", "tradeoff-robust", "smarttrust", "algohl"], required=True)
    adv.add_argument("--alpha", type=float, required=True)
    adv.add_argument("--eps", type=float, required=True)
    adv.add_argument("--out", default="", help="Directory for instance.json and prediction.json")
    adv.add_argument("--run", action="store_true", help="Simulate the construction's policy")

    plot = commands.add_parser("plot", help="SVG chart from a result CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--out", default="")
    plot.add_argument("--title", default="")
    return parser


def cmd_gen(args) -> int:
    from services import instance_io
    from services.instance_model import ProblemKind
    from services.metric_space import grid_graph, half_line_space, metric_closure
    from services.prediction_gen import NoiseSpec, predict, scalar_prediction, synth_instances, synth_rides

    if args.instance:
        instance = instance_io.load_instance(args.instance)
        if args.delta is not None:
            prediction = scalar_prediction(instance, args.delta)
        else:
            spec = NoiseSpec(args.sigma_release, args.sigma_location, args.fraction, args.seed)
            prediction = predict(instance, spec)
        out = args.out or str(Path(args.instance).with_name(Path(args.instance).stem + "_prediction.json"))
        instance_io.save_prediction(prediction, out)
        print(f"Prediction: {out}")
        return 0

    if args.space == "grid":
        space = metric_closure(grid_graph(args.rows, args.cols))
    else:
        space = half_line_space([args.length * i / max(1, args.points - 1) for i in range(args.points)])
    make = synth_rides if args.rides else synth_instances
    instances = make(space, args.count, args.per_instance, args.horizon, args.seed)
    out_dir = args.out or str(Path(config.OUTPUT_DIR) / "instances")
    paths = instance_io.save_instances(instances, out_dir)
    kind = ProblemKind.DARP.value if args.rides else ProblemKind.TSP.value
    print(f"Generated {len(paths)} {kind} instances in {out_dir}")
    return 0


def cmd_simulate(args) -> int:
    from services import instance_io
    from services.policy_factory import build_policy
    from services.simulator import empirical_cr, run

    instance = instance_io.load_instance(args.instance)
    prediction = instance_io.load_prediction(args.prediction) if args.prediction else None
    policy = build_policy(args.algo, prediction, args.alpha, args.sub, args.nu,
                          practical=args.practical == "on", approx=args.approx)
    trace = run(instance, policy, prediction)
    ratio = empirical_cr(trace, instance, args.opt_mode)
    print(f"Policy: {trace.policy}")
    print(f"Makespan: {trace.makespan:.6f}")
    print(f"Ratio ({args.opt_mode}): {ratio:.6f}")
    if policy.rho is not None:
        print(f"Certified bound: {policy.rho:.6f}")
    for entry in trace.phase_log:
        print(f"- phase {entry['phase']} at t={entry['t']:.6f}")
    if args.trace:
        instance_io.save_trace(trace, args.trace)
        print(f"Trace: {args.trace}")
    return 0


def cmd_opt(args) -> int:
    from services import instance_io
    from services.tour_oracle import TourSolver, halfline_makespan

    instance = instance_io.load_instance(args.instance)
    exact = TourSolver("exact", fallback=False).makespan(instance)
    approx = TourSolver("approx", nu=args.nu).makespan(instance)
    print(f"C* (exact): {exact:.6f}")
    print(f"Approximate completion: {approx:.6f}")
    if instance.space.half_line:
        print(f"Half-line closed form: {halfline_makespan(instance.space, instance.requests):.6f}")
    return 0


def cmd_error(args) -> int:
    from services import instance_io
    from services.cover_error import cover_report, lambda_halfline, prior_errors
    from services.instance_model import ProblemKind

    instance = instance_io.load_instance(args.instance)
    prediction = instance_io.load_prediction(args.prediction)
    if prediction.is_scalar:
        value = lambda_halfline(instance, prediction.makespan_prediction)
        print(json.dumps({"oracle": "halfline", "lambda_k": value}, indent=2))
        print(f"lambda_k={value}")
        return 0
    oracle = args.oracle or ("darp" if instance.kind == ProblemKind.DARP else "tsp")
    costs = [float(x) for x in args.opening_costs.split(",")] if args.opening_costs else None
    report = cover_report(oracle, instance, prediction, args.k, costs)
    prior = prior_errors(instance, prediction)
    payload = report.to_dict()
    payload["prior_errors"] = prior.to_dict()
    print(json.dumps(payload, indent=2, default=str))
    print(f"lambda_k={report.lambda_k}")
    return 0


def cmd_matrix(args) -> int:
    from services.experiment_service import ExperimentSpec, plot, run_matrix

    spec = ExperimentSpec.load(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    if args.out:
        spec.output = args.out
    result = run_matrix(spec, max_workers=args.jobs)
    print(f"Rows: {len(result.rows)}")
    print(f"Results: {result.csv_path}")
    print(f"Summary: {result.summary_path}")
    for row in result.summary.itertuples(index=False):
        print(f"- {row.algo} alpha={row.alpha} sweep={row.sweep_param:g} "
              f"mean={row.mean_ratio:.4f} ci=[{row.ci_low:.4f}, {row.ci_high:.4f}]")
    if args.plot:
        print(f"Plot: {plot(result.summary_path, str(Path(result.csv_path).with_suffix('.svg')), spec.name)}")
    return 0


def cmd_adversarial(args) -> int:
    from services import instance_io
    from services.adversarial import adversarial
    from services.policy_factory import build_policy
    from services.simulator import empirical_cr, run

    case = adversarial(args.kind, args.alpha, args.eps)
    print(json.dumps(case.describe(), indent=2))
    if args.out:
        instance_io.save_instance(case.instance, str(Path(args.out) / "instance.json"))
        instance_io.save_prediction(case.prediction, str(Path(args.out) / "prediction.json"))
    if args.run:
        policy = build_policy(case.policy, case.prediction, case.alpha)
        trace = run(case.instance, policy, case.prediction)
        print(f"Makespan: {trace.makespan:.6f}")
        print(f"Ratio: {empirical_cr(trace, case.instance):.6f} (construction forces {case.target_ratio:.6f})")
    return 0


def cmd_plot(args) -> int:
    from services.experiment_service import plot

    print(f"Plot: {plot(args.csv, args.out or None, args.title or None)}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "opt": cmd_opt,
    "error": cmd_error,
    "matrix": cmd_matrix,
    "adversarial": cmd_adversarial,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or None)
    logger = get_logger(__name__)
    logger.info("Starting %s command=%s", config.APP_NAME, args.command)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        logger.exception("Command %s failed", args.command)
        print(f"Error: {exc}")
        return 1


if __name__ == '__main__':
    raise SystemExit(main())
