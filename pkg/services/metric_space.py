"""
Metric Space Service
Finite metric spaces with a distinguished origin: explicit distance matrices,
shortest-path closures of weighted graphs, the real line and the half-line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from utils.config import config
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class GraphInput:
    """Undirected weighted graph plus origin, as read from an edge CSV."""

    edges: Tuple[Tuple[int, int, float], ...]
    origin: int
    n: Optional[int] = None


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Immutable finite metric with an origin.

    ``coords`` is set for line and half-line spaces; distances there are
    exactly ``|coords[i] - coords[j]|``.
    """

    dist: np.ndarray
    origin: int
    coords: Optional[np.ndarray] = None
    half_line: bool = False
    name: str = "matrix"

    @property
    def n(self) -> int:
        return int(self.dist.shape[0])

    @property
    def is_line(self) -> bool:
        return self.coords is not None

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def row(self, i: int) -> np.ndarray:
        return self.dist[i]

    def coord(self, i: int) -> float:
        if self.coords is None:
            raise ValueError("Coordinates are only defined on line spaces")
        return float(self.coords[i])

    def row_at_coord(self, c: float) -> np.ndarray:
        """Distances from coordinate ``c`` on the line to every point."""
        if self.coords is None:
            raise ValueError("Coordinates are only defined on line spaces")
        return np.abs(self.coords - c)

    def contains(self, point: int) -> bool:
        return 0 <= int(point) < self.n

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def describe(self) -> dict:
        info = {"name": self.name, "n": self.n, "origin": self.origin}
        if self.coords is not None:
            info["coords"] = [float(c) for c in self.coords]
            info["half_line"] = self.half_line
        return info


def _find_triangle_violation(d: np.ndarray, tol: float) -> Optional[Tuple[int, int, int]]:
    """Return (i, j, k) with d[i,k] > d[i,j] + d[j,k] beyond tolerance, else None."""
    n = d.shape[0]
    for j in range(n):
        through = d[:, j][:, None] + d[j, :][None, :]
        slack = tol * np.maximum(1.0, through)
        bad = d > through + slack
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return int(i), j, int(k)
    return None


def from_matrix(d: Sequence[Sequence[float]], origin: int,
                check_triangle: Optional[bool] = None,
                name: str = "matrix") -> MetricSpace:
    """Build a metric space from an explicit distance matrix.

    Args:
        d: Square matrix of non-negative finite distances.
        origin: PointId of the depot.
        check_triangle: Force (True) or skip (False) the O(n^3) triangle
            check. Defaults to checking when n is within
            TRIANGLE_CHECK_MAX_POINTS.
        name: Label carried into logs and trace dumps.

    Returns:
        MetricSpace: Validated, read-only space.
    """
    mat = np.array(d, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"Distance matrix must be square, got shape {mat.shape}")
    n = mat.shape[0]
    if n == 0:
        raise ValueError("Distance matrix must contain at least one point")
    if not np.all(np.isfinite(mat)):
        raise ValueError("Distance matrix contains non-finite entries")
    if (mat < 0).any():
        i, j = np.argwhere(mat < 0)[0]
        raise ValueError(f"Negative distance d[{i}][{j}] = {mat[i, j]}")
    if np.any(np.diag(mat) != 0):
        i = int(np.nonzero(np.diag(mat))[0][0])
        raise ValueError(f"Non-zero self distance d[{i}][{i}] = {mat[i, i]}")

    tol = config.METRIC_REL_TOL
    asym = np.abs(mat - mat.T) > tol * np.maximum(1.0, np.maximum(mat, mat.T))
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise ValueError(f"Distance matrix is asymmetric: d[{i}][{j}]={mat[i, j]} vs d[{j}][{i}]={mat[j, i]}")
    if not 0 <= int(origin) < n:
        raise ValueError(f"Origin {origin} outside universe of {n} points")

    if check_triangle is None:
        check_triangle = n <= config.TRIANGLE_CHECK_MAX_POINTS
    if check_triangle:
        violation = _find_triangle_violation(mat, tol)
        if violation is not None:
            i, j, k = violation
            raise ValueError(
                f"Triangle inequality violated: d[{i}][{k}]={mat[i, k]} > "
                f"d[{i}][{j}] + d[{j}][{k}] = {mat[i, j] + mat[j, k]}"
            )
    else:
        logger.debug("Skipping triangle check for %s-point space", n)

    mat = np.minimum(mat, mat.T)
    mat.setflags(write=False)
    return MetricSpace(dist=mat, origin=int(origin), name=name)


def metric_closure(g: GraphInput) -> MetricSpace:
    """Shortest-path closure of a connected weighted graph."""
    ids = [g.origin] + [u for u, _, _ in g.edges] + [v for _, v, _ in g.edges]
    n = g.n if g.n is not None else max(ids) + 1
    if min(ids) < 0 or max(ids) >= n:
        raise ValueError(f"Edge endpoints must be PointIds in [0, {n})")

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for u, v, w in g.edges:
        w = float(w)
        if not np.isfinite(w) or w <= 0:
            raise ValueError(f"Edge ({u}, {v}) has non-positive weight {w}")
        if graph.has_edge(u, v):
            w = min(w, graph[u][v]["weight"])
        graph.add_edge(int(u), int(v), weight=w)

    if n > 1 and not nx.is_connected(graph):
        components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
        a, b = components[0][0], components[1][0]
        raise ValueError(f"Graph is disconnected: no path between {a} and {b}")

    mat = nx.floyd_warshall_numpy(graph, nodelist=list(range(n)), weight="weight")
    mat = np.asarray(mat, dtype=float)
    logger.info("Metric closure built for %s nodes and %s edges", n, graph.number_of_edges())
    # Closures satisfy the triangle inequality by construction.
    return from_matrix(mat, g.origin, check_triangle=False, name="graph")


def line_space(coords: Sequence[float], origin_coord: float = 0.0,
               half_line: bool = False) -> MetricSpace:
    """Points on the real line (or half-line) with ``|a - b|`` distances.

    The origin is the point at ``origin_coord``; it is appended when absent so
    that the given coordinates keep their PointIds.
    """
    pts = [float(c) for c in coords]
    if not all(np.isfinite(pts)):
        raise ValueError("Line coordinates must be finite")
    if half_line:
        if origin_coord != 0:
            raise ValueError("Half-line origin must be at coordinate 0")
        negative = [c for c in pts if c < 0]
        if negative:
            raise ValueError(f"Half-line rejects negative coordinate {negative[0]}")
    if origin_coord in pts:
        origin = pts.index(origin_coord)
    else:
        pts.append(float(origin_coord))
        origin = len(pts) - 1

    arr = np.array(pts, dtype=float)
    mat = np.abs(arr[:, None] - arr[None, :])
    mat.setflags(write=False)
    arr.setflags(write=False)
    return MetricSpace(dist=mat, origin=origin, coords=arr, half_line=half_line,
                       name="half-line" if half_line else "line")


def half_line_space(coords: Sequence[float]) -> MetricSpace:
    return line_space(coords, 0.0, half_line=True)


def grid_graph(rows: int, cols: int, weight: float = 1.0, origin: int = 0) -> GraphInput:
    """Row-major grid "city" with uniform edge weights."""
    if rows <= 0 or cols <= 0:
        raise ValueError("Grid dimensions must be positive")
    edges: List[Tuple[int, int, float]] = []
    for r in range(rows):
        for c in range(cols):
            node = r * cols + c
            if c + 1 < cols:
                edges.append((node, node + 1, weight))
            if r + 1 < rows:
                edges.append((node, node + cols, weight))
    return GraphInput(edges=tuple(edges), origin=origin, n=rows * cols)
