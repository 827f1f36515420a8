"""
Instance IO
Reads and writes instance, prediction and trace files.

Instance JSON:
    {"kind": "tsp" | "darp", "origin": 0,
     one of "matrix": [[...]], "graph": {"edges": [[u, v, w], ...], "n": N},
            "grid": {"rows": R, "cols": C, "weight": w},
            "line": {"coords": [...], "half_line": false, "origin_coord": 0.0},
            "matrix_csv": "path", "graph_csv": "path",
     "requests": [{"loc": p, "release": r}] or [{"pickup": p, "dropoff": q, "release": r}]}

Prediction JSON: {"requests": [...]} or {"makespan_prediction": C_hat}.
Graph CSV columns: u, v, w. Matrix CSV: square, no header.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from services.instance_model import AnyRequest, Instance, PredictionSet, ProblemKind, Request, RideRequest
from services.metric_space import (
    GraphInput,
    MetricSpace,
    from_matrix,
    grid_graph,
    line_space,
    metric_closure,
)
from services.simulator import Trace
from utils.logger import get_logger

logger = get_logger(__name__)


def read_graph_csv(path: str, origin: int = 0, n: Optional[int] = None) -> GraphInput:
    frame = pd.read_csv(path)
    missing = {"u", "v", "w"} - set(frame.columns)
    if missing:
        raise ValueError(f"Graph CSV {path} lacks columns {sorted(missing)}")
    edges = tuple((int(u), int(v), float(w)) for u, v, w in frame[["u", "v", "w"]].itertuples(index=False))
    return GraphInput(edges=edges, origin=origin, n=n)


def read_matrix_csv(path: str) -> np.ndarray:
    return pd.read_csv(path, header=None).to_numpy(dtype=float)


def space_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> MetricSpace:
    """Build the metric space described by an instance document."""
    origin = int(data.get("origin", 0))
    base_dir = base_dir or Path(".")
    if "matrix" in data:
        return from_matrix(data["matrix"], origin)
    if "matrix_csv" in data:
        return from_matrix(read_matrix_csv(str(base_dir / data["matrix_csv"])), origin)
    if "graph" in data:
        graph = data["graph"]
        edges = tuple((int(u), int(v), float(w)) for u, v, w in graph["edges"])
        return metric_closure(GraphInput(edges=edges, origin=origin, n=graph.get("n")))
    if "graph_csv" in data:
        return metric_closure(read_graph_csv(str(base_dir / data["graph_csv"]), origin, data.get("n")))
    if "grid" in data:
        grid = data["grid"]
        return metric_closure(grid_graph(int(grid["rows"]), int(grid["cols"]),
                                         float(grid.get("weight", 1.0)), origin))
    if "line" in data:
        line = data["line"]
        return line_space(line["coords"], float(line.get("origin_coord", 0.0)),
                          half_line=bool(line.get("half_line", False)))
    raise ValueError("Instance document needs one of matrix, matrix_csv, graph, graph_csv, grid, line")


def space_to_dict(space: MetricSpace) -> Dict[str, Any]:
    if space.is_line:
        return {
            "origin": space.origin,
            "line": {"coords": space.coords.tolist(), "half_line": space.half_line,
                     "origin_coord": space.coord(space.origin)},
        }
    return {"origin": space.origin, "matrix": space.dist.tolist()}


def request_from_dict(item: Dict[str, Any]) -> AnyRequest:
    if "pickup" in item:
        return RideRequest(int(item["pickup"]), int(item["dropoff"]), float(item["release"]))
    if "loc" in item:
        return Request(int(item["loc"]), float(item["release"]))
    raise ValueError(f"Request entry needs loc or pickup/dropoff: {item}")


def requests_from_list(items: Sequence[Dict[str, Any]]) -> tuple:
    return tuple(request_from_dict(item) for item in items)


def instance_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> Instance:
    kind = ProblemKind(data.get("kind", "tsp"))
    space = space_from_dict(data, base_dir)
    return Instance(space, kind, requests_from_list(data.get("requests", [])))


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    data = {"kind": instance.kind.value}
    data.update(space_to_dict(instance.space))
    data["requests"] = [req.to_dict() for req in instance.requests]
    return data


def prediction_from_dict(data: Dict[str, Any]) -> PredictionSet:
    if "makespan_prediction" in data:
        return PredictionSet(makespan_prediction=float(data["makespan_prediction"]))
    return PredictionSet(requests=requests_from_list(data.get("requests", [])))


def prediction_to_dict(prediction: PredictionSet) -> Dict[str, Any]:
    if prediction.is_scalar:
        return {"makespan_prediction": prediction.makespan_prediction}
    return {"requests": [req.to_dict() for req in prediction.requests]}


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _write_json(data: Any, path: str) -> str:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, default=_json_default)
    logger.info("Wrote %s", out)
    return str(out)


def load_instance(path: str) -> Instance:
    return instance_from_dict(_read_json(path), Path(path).parent)


def save_instance(instance: Instance, path: str) -> str:
    return _write_json(instance_to_dict(instance), path)


def load_prediction(path: str) -> PredictionSet:
    return prediction_from_dict(_read_json(path))


def save_prediction(prediction: PredictionSet, path: str) -> str:
    return _write_json(prediction_to_dict(prediction), path)


def save_trace(trace: Trace, path: str) -> str:
    return _write_json(trace.to_dict(), path)


def save_instances(instances: List[Instance], directory: str, stem: str = "instance") -> List[str]:
    return [save_instance(inst, str(Path(directory) / f"{stem}_{idx:03d}.json"))
            for idx, inst in enumerate(instances)]
