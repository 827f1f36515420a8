"""
Tour Oracle
Offline tours with release dates: an exact subset DP for small request
counts and an MST-doubling approximation for the polynomial-time variants.
Both realize C*, the predicted makespan and every excursion cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from services.instance_model import AnyRequest, Instance, Request, RideRequest
from services.metric_space import MetricSpace
from utils.config import config
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class TourProblem:
    """Serve ``requests`` starting from ``start`` at ``start_time`` and finish at ``terminal``.

    ``start`` is a PointId or, for a server between points, its distance row.
    """

    space: MetricSpace
    start: Union[int, np.ndarray]
    start_time: float
    requests: Tuple[AnyRequest, ...]
    terminal: int

    def start_row(self) -> np.ndarray:
        if isinstance(self.start, (int, np.integer)):
            return self.space.row(int(self.start))
        return np.asarray(self.start, dtype=float)


@dataclass(frozen=True)
class Tour:
    order: Tuple[int, ...]
    completion: float
    exact: bool = True

    def length_from(self, start_time: float) -> float:
        return self.completion - start_time


class _Nodes:
    """Requests flattened into entry/exit/duration/release arrays."""

    def __init__(self, space: MetricSpace, requests: Sequence[AnyRequest]):
        self.entry = np.array([r.entry for r in requests], dtype=int)
        self.exit = np.array([r.exit for r in requests], dtype=int)
        self.release = np.array([r.release for r in requests], dtype=float)
        self.length = space.dist[self.entry, self.exit] if len(requests) else np.zeros(0)
        self.travel = space.dist[np.ix_(self.exit, self.entry)] if len(requests) else np.zeros((0, 0))

    def __len__(self) -> int:
        return len(self.entry)


def evaluate_order(p: TourProblem, order: Sequence[int]) -> float:
    """Completion time of visiting ``p.requests`` in ``order``, waiting for releases."""
    dist = p.space.dist
    t = float(p.start_time)
    row = p.start_row()
    for idx in order:
        req = p.requests[idx]
        t = max(t + float(row[req.entry]), float(req.release))
        if isinstance(req, RideRequest):
            t += float(dist[req.pickup, req.dropoff])
        row = dist[req.exit]
    return t + float(row[p.terminal])


def service_times(p: TourProblem, order: Sequence[int]) -> List[float]:
    """Start of service (arrival or release, whichever is later) per visited request."""
    dist = p.space.dist
    t = float(p.start_time)
    row = p.start_row()
    out = []
    for idx in order:
        req = p.requests[idx]
        t = max(t + float(row[req.entry]), float(req.release))
        out.append(t)
        if isinstance(req, RideRequest):
            t += float(dist[req.pickup, req.dropoff])
        row = dist[req.exit]
    return out


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    counts = np.zeros(1 << n, dtype=int)
    for bit in range(n):
        counts += (masks >> bit) & 1
    return counts


def _earliest_exit_table(nodes: _Nodes, start_row: np.ndarray, t0: float, pc: np.ndarray) -> np.ndarray:
    """E[mask, j]: earliest time to have served ``mask`` ending with ``j``."""
    n = len(nodes)
    table = np.full((1 << n, n), np.inf)
    ids = np.arange(n)
    first = np.maximum(t0 + start_row[nodes.entry], nodes.release) + nodes.length
    table[1 << ids, ids] = first
    for size in range(2, n + 1):
        masks = np.flatnonzero(pc == size)
        for j in range(n):
            sel = masks[((masks >> j) & 1) == 1]
            best = (table[sel ^ (1 << j)] + nodes.travel[:, j]).min(axis=1)
            table[sel, j] = np.maximum(best, nodes.release[j]) + nodes.length[j]
    return table


def _latest_start_table(nodes: _Nodes, terminal_row: np.ndarray, limit: float, pc: np.ndarray) -> np.ndarray:
    """R[mask, k]: least time needed from the start of ``k`` to finish ``mask`` by ``limit``.

    Entries are infinite when some release in ``mask`` cannot be respected.
    """
    n = len(nodes)
    deadline = limit - nodes.release
    table = np.full((1 << n, n), np.inf)
    ids = np.arange(n)
    tail = terminal_row[nodes.exit] + nodes.length
    table[1 << ids, ids] = np.where(tail <= deadline, tail, np.inf)
    for size in range(2, n + 1):
        masks = np.flatnonzero(pc == size)
        for k in range(n):
            sel = masks[((masks >> k) & 1) == 1]
            val = (table[sel ^ (1 << k)] + nodes.travel[k, :]).min(axis=1) + nodes.length[k]
            table[sel, k] = np.where(val <= deadline[k], val, np.inf)
    return table


def exact_tour(p: TourProblem, cap: Optional[int] = None) -> Tour:
    """Optimal completion with the lexicographically smallest optimal order."""
    cap = config.EXACT_TOUR_CAP if cap is None else cap
    n = len(p.requests)
    start_row = p.start_row()
    if n == 0:
        return Tour((), float(p.start_time) + float(start_row[p.terminal]))
    if n > cap:
        raise ValueError(f"{n} requests exceed the exact solver cap of {cap}; use approx_tour")

    nodes = _Nodes(p.space, p.requests)
    pc = _popcounts(n)
    full = (1 << n) - 1
    terminal_row = p.space.dist[:, p.terminal]
    forward = _earliest_exit_table(nodes, start_row, float(p.start_time), pc)
    best = float((forward[full] + terminal_row[nodes.exit]).min())
    limit = best + 1e-9 * max(1.0, abs(best))
    backward = _latest_start_table(nodes, terminal_row, limit, pc)

    order: List[int] = []
    remaining = full
    t = float(p.start_time)
    row = start_row
    while remaining:
        chosen = None
        fallback = None
        for j in range(n):
            if not (remaining >> j) & 1:
                continue
            done = max(t + float(row[nodes.entry[j]]), float(nodes.release[j])) + float(nodes.length[j])
            rest = remaining ^ (1 << j)
            if rest:
                need = float((nodes.travel[j, :] + backward[rest]).min())
            else:
                need = float(terminal_row[nodes.exit[j]])
            if done + need <= limit:
                chosen = j
                break
            if fallback is None or done + need < fallback[0]:
                fallback = (done + need, j)
        if chosen is None:
            logger.warning("Lexicographic reconstruction lost feasibility; taking best local step")
            chosen = fallback[1]
        order.append(chosen)
        t = max(t + float(row[nodes.entry[chosen]]), float(nodes.release[chosen])) + float(nodes.length[chosen])
        row = p.space.dist[nodes.exit[chosen]]
        remaining ^= 1 << chosen

    return Tour(tuple(order), evaluate_order(p, order))


def approx_tour(p: TourProblem, nu: float = 2.0) -> Tour:
    """Follow a doubled-MST tour over the request points, waiting at early arrivals.

    Only MST doubling is available, so ``nu`` below 2 is rejected. For rides
    the tree is built on pickups and carries no approximation guarantee.
    """
    if nu < 2.0:
        raise ValueError(f"MST doubling guarantees nu = 2, cannot provide nu = {nu}")
    n = len(p.requests)
    if n == 0:
        return Tour((), float(p.start_time) + float(p.start_row()[p.terminal]), exact=False)

    dist = p.space.dist
    start_row = p.start_row()
    entries = [r.entry for r in p.requests]
    graph = nx.Graph()
    graph.add_nodes_from(range(n + 1))
    for i in range(n):
        graph.add_edge(i, n, weight=float(start_row[entries[i]]))
    for i in range(n):
        for j in range(i + 1, n):
            graph.add_edge(i, j, weight=float(dist[entries[i], entries[j]]))
    tree = nx.minimum_spanning_tree(graph, weight="weight", algorithm="kruskal")

    ordered = nx.Graph()
    ordered.add_nodes_from(range(n + 1))
    ordered.add_edges_from(sorted(tuple(sorted(edge)) for edge in tree.edges()))
    order = [v for v in nx.dfs_preorder_nodes(ordered, source=n) if v != n]
    return Tour(tuple(order), evaluate_order(p, order), exact=False)


def gamma_tsp(space: MetricSpace, subset: Sequence[Request], anchor: Request,
              cap: Optional[int] = None) -> float:
    """Relative makespan of serving ``subset`` on an excursion from the anchor."""
    if len(subset) == 1 and subset[0] == anchor:
        return 0.0
    tour = exact_tour(TourProblem(space, anchor.loc, anchor.release, tuple(subset), anchor.loc), cap)
    return tour.completion - anchor.release


def gamma_darp(space: MetricSpace, subset: Sequence[RideRequest], anchor: RideRequest,
               transport: float, cap: Optional[int] = None) -> float:
    """Cheaper of the excursions leaving from the anchor's pickup or its dropoff, plus ``transport``."""
    if len(subset) == 1 and subset[0] == anchor:
        return 0.0
    rides = tuple(subset)
    from_pickup = exact_tour(TourProblem(space, anchor.pickup, anchor.release, rides, anchor.pickup), cap)
    drop_time = anchor.release + space.d(anchor.pickup, anchor.dropoff)
    from_dropoff = exact_tour(TourProblem(space, anchor.dropoff, drop_time, rides, anchor.dropoff), cap)
    return min(from_pickup.completion - anchor.release, from_dropoff.completion - drop_time) + transport


def halfline_makespan(space: MetricSpace, requests: Sequence[Request]) -> float:
    """Closed-form optimum on the half-line: max over requests of max(r + x, 2x)."""
    best = 0.0
    for req in requests:
        x = space.coord(req.loc)
        best = max(best, req.release + x, 2.0 * x)
    return best


class TourSolver:
    """Exact or approximate tour computation with an optional cap fallback."""

    def __init__(self, mode: str = "exact", nu: Optional[float] = None,
                 fallback: Optional[bool] = None):
        """Init.

        Args:
            mode: "exact" or "approx".
            nu: Approximation factor of the underlying TSP heuristic.
            fallback: Use approx_tour when the exact cap is exceeded.
        """
        if mode not in ("exact", "approx"):
            raise ValueError(f"Unknown tour solver mode: {mode}")
        self.mode = mode
        self.nu = config.DEFAULT_NU if nu is None else float(nu)
        self.fallback = config.TOUR_FALLBACK_TO_APPROX if fallback is None else fallback
        self.fallbacks = 0
        self.logger = get_logger(__name__)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def solve(self, problem: TourProblem) -> Tour:
        if self.mode == "approx":
            return approx_tour(problem, self.nu)
        if len(problem.requests) > config.EXACT_TOUR_CAP and self.fallback:
            self.fallbacks += 1
            self.logger.warning("%s requests exceed exact cap %s; falling back to approx tour",
                                len(problem.requests), config.EXACT_TOUR_CAP)
            return approx_tour(problem, self.nu)
        return exact_tour(problem)

    def makespan(self, instance: Instance, requests: Optional[Sequence[AnyRequest]] = None) -> float:
        """Tour from the origin at time 0 back to the origin."""
        reqs = tuple(instance.requests if requests is None else requests)
        origin = instance.space.origin
        return self.solve(TourProblem(instance.space, origin, 0.0, reqs, origin)).completion


def optimal_makespan(instance: Instance, mode: str = "exact") -> float:
    """C* (exact) or the (1+nu)-approximate estimate of it."""
    return TourSolver(mode, fallback=False).makespan(instance)
