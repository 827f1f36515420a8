#!/usr/bin/env python3
"""
Run one or more experiment matrices and plot their summaries.

Examples:
  python3 scripts/run_experiment_matrix.py scripts/experiments/grid_location.yaml
  python3 scripts/run_experiment_matrix.py scripts/experiments/*.yaml --jobs 8
  python3 scripts/run_experiment_matrix.py scripts/experiments/grid_partial.yaml --no-plot
"""

import argparse
import os
import sys


def main() -> int:
    """Run experiment configs in order; stop at the first failure."""
    parser = argparse.ArgumentParser(description="Run experiment matrices.")
    parser.add_argument("configs", nargs="+", help="YAML or JSON experiment configs")
    parser.add_argument("--jobs", type=int, default=None, help="Worker threads per matrix")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--no-plot", action="store_true", help="Skip the SVG chart")
    args = parser.parse_args()

    project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
    sys.path.insert(0, project_root)

    from services.experiment_service import ExperimentSpec, plot, run_matrix
    from utils.logger import get_logger

    logger = get_logger(__name__)
    for path in args.configs:
        try:
            spec = ExperimentSpec.load(path)
            if args.seed is not None:
                spec.seed = args.seed
            result = run_matrix(spec, max_workers=args.jobs)
        except Exception as exc:
            logger.exception("Experiment %s failed", path)
            print(f"Failed: {path}: {exc}")
            return 1
        print(f"{spec.name}: {len(result.rows)} rows -> {result.csv_path}")
        if not args.no_plot:
            svg = plot(result.summary_path, os.path.splitext(result.csv_path)[0] + ".svg", spec.name)
            print(f"{spec.name}: plot -> {svg}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
