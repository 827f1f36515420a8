"""
Experiment Service
Runs an experiment matrix (algorithms x trust grid x prediction sweep x
instances), writes the sorted result CSV with a per-cell confidence summary,
and plots mean empirical ratios with 95% whiskers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np
import pandas as pd
import yaml
from scipy import stats

from services.cover_error import cover_report, lambda_halfline
from services.instance_io import load_instance
from services.instance_model import Instance, PredictionSet, ProblemKind, split_errors
from services.metric_space import grid_graph, half_line_space, metric_closure
from services.policy_factory import POLICY_NAMES, TRUSTING_POLICIES, build_policy
from services.prediction_gen import (
    NOISE_SETTINGS,
    derive_seed,
    noise_preset,
    predict,
    scalar_prediction,
    synth_instances,
    synth_rides,
)
from services.simulator import run
from services.tour_oracle import optimal_makespan
from utils.config import config
from utils.logger import get_logger

SWEEP_SETTINGS = NOISE_SETTINGS + ("scalar",)
RESULT_COLUMNS = ["algo", "alpha", "sweep_param", "instance_id", "makespan", "opt_est", "ratio", "lambda1",
                  "runtime_ms"]
SORT_COLUMNS = ["algo", "alpha", "sweep_param", "instance_id"]
Z_95 = 1.96


@dataclass
class AlgorithmSpec:
    name: str
    alphas: List[Optional[float]] = field(default_factory=lambda: [None])
    sub: str = "smartstart"

    @classmethod
    def from_dict(cls, data: Any) -> "AlgorithmSpec":
        if isinstance(data, str):
            data = {"name": data}
        name = data["name"]
        if name not in POLICY_NAMES:
            raise ValueError(f"Unknown algorithm in experiment: {name}")
        alphas = data.get("alpha", data.get("alphas"))
        if alphas is None:
            alphas = [config.DEFAULT_ALPHA] if name in TRUSTING_POLICIES else [None]
        elif not isinstance(alphas, list):
            alphas = [alphas]
        if not alphas:
            raise ValueError(f"Empty alpha grid for {name}")
        alphas = [None if a is None else float(a) for a in alphas]
        return cls(name=name, alphas=alphas, sub=data.get("sub", "smartstart"))


@dataclass
class ExperimentSpec:
    """Experiment matrix loaded from a YAML or JSON config file."""

    name: str
    algorithms: List[AlgorithmSpec]
    source: Dict[str, Any]
    setting: str
    values: List[float]
    opt_mode: str = "exact"
    seed: int = 0
    nu: float = 2.0
    approx: bool = False
    practical: bool = True
    include_runtime: bool = False
    output: str = ""

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("Experiment needs at least one algorithm")
        if not self.values:
            raise ValueError("Experiment needs a non-empty sweep")
        if self.setting not in SWEEP_SETTINGS:
            raise ValueError(f"Unknown sweep setting: {self.setting} (choose from {', '.join(SWEEP_SETTINGS)})")
        if self.opt_mode not in ("exact", "approx"):
            raise ValueError(f"Unknown opt mode: {self.opt_mode}")
        if not self.output:
            self.output = str(Path(config.OUTPUT_DIR) / f"{self.name}.csv")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        if not data:
            raise ValueError("Experiment config is empty")
        sweep = data.get("sweep") or {}
        return cls(
            name=str(data.get("name", "experiment")),
            algorithms=[AlgorithmSpec.from_dict(item) for item in data.get("algorithms") or []],
            source=dict(data.get("instances") or {}),
            setting=str(sweep.get("setting", "location")),
            values=[float(v) for v in sweep.get("values") or []],
            opt_mode=str(data.get("opt_mode", "exact")),
            seed=int(data.get("seed", 0)),
            nu=float(data.get("nu", config.DEFAULT_NU)),
            approx=bool(data.get("approx", False)),
            practical=bool(data.get("practical", True)),
            include_runtime=bool(data.get("include_runtime", False)),
            output=str(data.get("output", "")),
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(yaml.safe_load(handle) or {})


@dataclass
class MatrixResult:
    rows: pd.DataFrame
    summary: pd.DataFrame
    csv_path: Optional[str] = None
    summary_path: Optional[str] = None


def summarize(rows: pd.DataFrame) -> pd.DataFrame:
    """Mean ratio and mean +- 1.96 * stderr per (algo, alpha, sweep_param)."""
    records = []
    for (algo, alpha, sweep), group in rows.groupby(["algo", "alpha", "sweep_param"], dropna=False, sort=True):
        ratios = group["ratio"].to_numpy(dtype=float)
        mean = float(ratios.mean())
        sem = float(stats.sem(ratios)) if len(ratios) > 1 else 0.0
        if not np.isfinite(sem):
            sem = 0.0
        records.append({
            "algo": algo,
            "alpha": alpha,
            "sweep_param": sweep,
            "n": len(ratios),
            "mean_ratio": mean,
            "sem": sem,
            "ci_low": mean - Z_95 * sem,
            "ci_high": mean + Z_95 * sem,
        })
    return pd.DataFrame.from_records(records, columns=["algo", "alpha", "sweep_param", "n", "mean_ratio", "sem",
                                                       "ci_low", "ci_high"])


class ExperimentService:
    """Build instances and predictions for a spec and run every policy on them."""

    def __init__(self, spec: ExperimentSpec, max_workers: Optional[int] = None):
        """Init.

        Args:
            spec: Experiment matrix.
            max_workers: Thread pool size; config.MATRIX_MAX_WORKERS when omitted.
        """
        self.spec = spec
        self.max_workers = max(1, max_workers or config.MATRIX_MAX_WORKERS)
        self.logger = get_logger(__name__)

    # instances -------------------------------------------------------------

    def build_instances(self) -> List[Instance]:
        src = self.spec.source
        kind = src.get("type", "grid")
        seed = int(src.get("seed", self.spec.seed))
        count = int(src.get("count", 10))
        per_instance = int(src.get("per_instance", 8))
        horizon = float(src.get("release_horizon", 10.0))
        if kind == "files":
            paths = src.get("paths") or []
            if not paths:
                raise ValueError("File instance source lists no paths")
            return [load_instance(p) for p in paths]
        if kind == "grid":
            rows, cols = int(src.get("rows", 5)), int(src.get("cols", 5))
            space = metric_closure(grid_graph(rows, cols, float(src.get("weight", 1.0)), int(src.get("origin", 0))))
            if src.get("rides"):
                return synth_rides(space, count, per_instance, horizon, seed)
            return synth_instances(space, count, per_instance, horizon, seed)
        if kind == "halfline":
            length = float(src.get("length", 10.0))
            points = int(src.get("points", 21))
            space = half_line_space(np.linspace(0.0, length, points).tolist())
            return synth_instances(space, count, per_instance, horizon, seed)
        raise ValueError(f"Unknown instance source: {kind}")

    def prediction_for(self, instance: Instance, value: float, seed: int) -> PredictionSet:
        if self.spec.setting == "scalar":
            return scalar_prediction(instance, value)
        return predict(instance, noise_preset(self.spec.setting, value, seed))

    def lambda1(self, instance: Instance, prediction: PredictionSet) -> Optional[float]:
        """Lambda_1 when both error sides are within the cover cap, else None."""
        if prediction.is_scalar:
            return lambda_halfline(instance, prediction.makespan_prediction)
        unexpected, absent, _ = split_errors(instance, prediction)
        cap = config.MATRIX_LAMBDA_CAP
        if len(unexpected) > cap or len(absent) > cap:
            return None
        oracle = "darp" if instance.kind == ProblemKind.DARP else "tsp"
        try:
            return cover_report(oracle, instance, prediction, 1).lambda_k
        except ValueError as exc:
            self.logger.warning("lambda1 skipped: %s", exc)
            return None

    # matrix ----------------------------------------------------------------

    def _cell(self, instance_id: int, instance: Instance, opt: float, sweep_idx: int) -> List[Dict[str, Any]]:
        spec = self.spec
        value = spec.values[sweep_idx]
        pred_seed = derive_seed(spec.seed, instance_id, sweep_idx)
        prediction = self.prediction_for(instance, value, pred_seed)
        lam = self.lambda1(instance, prediction)
        rows = []
        for algo in spec.algorithms:
            for alpha in algo.alphas:
                policy = build_policy(algo.name, prediction, alpha, algo.sub, spec.nu, spec.practical, spec.approx)
                uses_prediction = algo.name not in ("replan", "ignore", "smartstart", "mrin")
                started = time.perf_counter()
                trace = run(instance, policy, prediction if uses_prediction else None)
                elapsed = (time.perf_counter() - started) * 1000.0
                ratio = trace.makespan / opt if opt > 0 else (1.0 if trace.makespan <= 0 else math.inf)
                rows.append({
                    "algo": f"{algo.name}[{algo.sub}]" if algo.name.endswith("delay-trust") else algo.name,
                    "alpha": np.nan if alpha is None or not uses_prediction else alpha,
                    "sweep_param": value,
                    "instance_id": instance_id,
                    "makespan": trace.makespan,
                    "opt_est": opt,
                    "ratio": ratio,
                    "lambda1": np.nan if lam is None else lam,
                    "runtime_ms": elapsed,
                })
        return rows

    def run_matrix(self, write: bool = True) -> MatrixResult:
        spec = self.spec
        instances = self.build_instances()
        if not instances:
            raise ValueError("Experiment produced no instances")
        self.logger.info("Matrix %s: %s instances x %s sweep points x %s algorithms workers=%s",
                         spec.name, len(instances), len(spec.values), len(spec.algorithms), self.max_workers)

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            opts = list(pool.map(lambda inst: optimal_makespan(inst, spec.opt_mode), instances))
            futures = [
                pool.submit(self._cell, iid, inst, opts[iid], sweep_idx)
                for iid, inst in enumerate(instances)
                for sweep_idx in range(len(spec.values))
            ]
            rows: List[Dict[str, Any]] = []
            for future in futures:
                rows.extend(future.result())

        frame = pd.DataFrame.from_records(rows, columns=RESULT_COLUMNS)
        frame = frame.sort_values(SORT_COLUMNS, na_position="first", kind="mergesort").reset_index(drop=True)
        if not spec.include_runtime:
            frame = frame.drop(columns=["runtime_ms"])
        summary = summarize(frame)
        result = MatrixResult(rows=frame, summary=summary)
        if write:
            result.csv_path, result.summary_path = self.write(frame, summary)
        return result

    def write(self, frame: pd.DataFrame, summary: pd.DataFrame) -> Tuple[str, str]:
        out = Path(self.spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        summary_path = out.with_name(f"{out.stem}_summary.csv")
        frame.to_csv(out, index=False, lineterminator="\n", float_format="%.12g")
        summary.to_csv(summary_path, index=False, lineterminator="\n", float_format="%.12g")
        self.logger.info("Matrix results rows=%s path=%s summary=%s", len(frame), out, summary_path)
        return str(out), str(summary_path)


def run_matrix(spec: ExperimentSpec, max_workers: Optional[int] = None, write: bool = True) -> MatrixResult:
    return ExperimentService(spec, max_workers).run_matrix(write=write)


def _series_label(algo: str, alpha: float) -> str:
    if alpha is None or (isinstance(alpha, float) and math.isnan(alpha)):
        return algo
    return f"{algo} (alpha={alpha:g})"


def plot(csv_path: str, out_path: Optional[str] = None, title: Optional[str] = None) -> str:
    """Mean ratio against the sweep parameter, one series per (algo, alpha)."""
    try:
        frame = pd.read_csv(csv_path)
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame()
    if frame.empty:
        raise ValueError(f"No results to plot in {csv_path}")
    summary = frame if "mean_ratio" in frame.columns else summarize(frame)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (algo, alpha), group in summary.groupby(["algo", "alpha"], dropna=False, sort=True):
        group = group.sort_values("sweep_param")
        half = (group["ci_high"] - group["mean_ratio"]).to_numpy(dtype=float)
        ax.errorbar(group["sweep_param"], group["mean_ratio"], yerr=half, marker="o", capsize=3,
                    label=_series_label(algo, alpha))

    xs = summary["sweep_param"].to_numpy(dtype=float)
    positive = xs[xs > 0]
    if len(positive) and positive.max() / positive.min() >= 1e3:
        if (xs <= 0).any():
            ax.set_xscale("symlog", linthresh=float(positive.min()))
        else:
            ax.set_xscale("log")
    ax.set_xlabel("sweep parameter")
    ax.set_ylabel("empirical competitive ratio")
    ax.set_title(title or Path(csv_path).stem)
    ax.legend(loc="best")
    fig.tight_layout()

    out = Path(out_path) if out_path else Path(csv_path).with_suffix(".svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg")
    plt.close(fig)
    get_logger(__name__).info("Wrote plot %s", out)
    return str(out)
