"""
Cover Error Service
Exact minimum-cost k-hyperedge covers between actual and predicted requests,
the resulting cover error Lambda_k, the half-line makespan error, and the
older counting / matching error measures for comparison.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from services.instance_model import (
    AnyRequest, Instance, PredictionSet, ProblemKind, RideRequest,
    max_transport_distance, split_requests,
)
from services.metric_space import MetricSpace
from services.network_costs import gamma_fl, gamma_sf, gamma_st
from services.tour_oracle import gamma_darp, gamma_tsp, halfline_makespan
from utils.config import config
from utils.logger import get_logger

logger = get_logger(__name__)

INFINITE_K = math.inf


@dataclass(frozen=True)
class Hyperedge:
    left: Tuple[Any, ...]
    right: Any
    cost: float

    def to_dict(self) -> dict:
        return {"left": [_item_dict(x) for x in self.left], "right": _item_dict(self.right), "cost": self.cost}


@dataclass
class CostOracle:
    """Hyperedge cost ``evaluate(left_subset, right_element)``.

    ``cover_discount(right, covered)`` is subtracted once per right element
    after the cover is assembled, given how many left elements it covers.
    """

    name: str
    evaluate: Callable[[Tuple[Any, ...], Any], float]
    monotone: bool = True
    cover_discount: Optional[Callable[[Any, int], float]] = None


@dataclass
class CoverReport:
    gamma_inf_pred: float
    gamma_k_actual: float
    k: float
    oracle: str
    edges_pred: List[Hyperedge] = field(default_factory=list)
    edges_actual: List[Hyperedge] = field(default_factory=list)

    @property
    def lambda_k(self) -> float:
        return self.gamma_inf_pred + self.gamma_k_actual

    def to_dict(self) -> dict:
        return {
            "oracle": self.oracle,
            "k": "inf" if math.isinf(self.k) else int(self.k),
            "gamma_inf_pred": self.gamma_inf_pred,
            "gamma_k_actual": self.gamma_k_actual,
            "lambda_k": self.lambda_k,
            "edges_pred": [e.to_dict() for e in self.edges_pred],
            "edges_actual": [e.to_dict() for e in self.edges_actual],
        }


@dataclass
class PriorErrors:
    eta: int
    delta: int
    d_matching: float
    curve: Dict[int, float]

    def to_dict(self) -> dict:
        return {"eta": self.eta, "delta": self.delta, "d_matching": self.d_matching,
                "curve": {str(m): v for m, v in self.curve.items()}}


def _item_dict(item: Any) -> Any:
    if hasattr(item, "to_dict"):
        return item.to_dict()
    return list(item) if isinstance(item, tuple) else item


def _bits(mask: int, n: int) -> List[int]:
    return [i for i in range(n) if (mask >> i) & 1]


def _effective_k(k: Optional[float], n: int) -> int:
    if k is None or (isinstance(k, float) and math.isinf(k)) or k >= n:
        return n
    if k < 1:
        raise ValueError(f"Hyperedge size bound k must be at least 1, got {k}")
    return int(k)


class _CoverInput:
    """Left elements still uncovered once exact matches are paired off, with cheapest edge per subset."""

    def __init__(self, A: Sequence[Any], B: Sequence[Any], k: Optional[float], oracle: CostOracle):
        # each right element absorbs at most one identical left element
        unmatched = Counter(B)
        self.left = []
        for a in A:
            if unmatched[a]:
                unmatched[a] -= 1
            else:
                self.left.append(a)
        self.right = list(B)
        self.n = len(self.left)
        self.k = _effective_k(k, self.n) if self.n else 0
        self.oracle = oracle
        self.popcount = [bin(m).count("1") for m in range(1 << self.n)] if self.n <= 20 else None

    def subset(self, mask: int) -> Tuple[Any, ...]:
        return tuple(self.left[i] for i in _bits(mask, self.n))

    def edge_cost(self, mask: int, b_idx: int) -> float:
        return float(self.oracle.evaluate(self.subset(mask), self.right[b_idx]))

    def cheapest(self) -> Dict[int, Tuple[float, int]]:
        best: Dict[int, Tuple[float, int]] = {}
        for mask in range(1, 1 << self.n):
            if self.popcount[mask] > self.k:
                continue
            costs = [self.edge_cost(mask, b) for b in range(len(self.right))]
            b = int(np.argmin(costs))
            best[mask] = (costs[b], b)
        return best


def _finish(inp: _CoverInput, picks: List[Tuple[int, int, float]]) -> Tuple[float, List[Hyperedge]]:
    edges = [Hyperedge(inp.subset(mask), inp.right[b], cost) for mask, b, cost in picks]
    return float(sum(cost for _, _, cost in picks)), edges


def gamma_k(A: Sequence[Any], B: Sequence[Any], k: Optional[float], oracle: CostOracle,
            dp_cap: Optional[int] = None, brute_cap: Optional[int] = None) -> Tuple[float, List[Hyperedge]]:
    """Minimum-cost k-hyperedge cover of A by B.

    Exact matches between A and B are paired off one-for-one first. Monotone
    oracles use the partition DP, others the exhaustive cover DP.
    """
    dp_cap = config.COVER_DP_CAP if dp_cap is None else dp_cap
    inp = _CoverInput(A, B, k, oracle)
    if inp.n == 0:
        return 0.0, []
    if not inp.right:
        logger.warning("No right elements to cover %s requests with; cover cost is infinite", inp.n)
        return math.inf, []
    if oracle.cover_discount is not None:
        return _discounted_cover(inp, dp_cap)
    if not oracle.monotone:
        return gamma_k_exhaustive(A, B, k, oracle, brute_cap)

    if inp.k == 1:
        picks = []
        for i in range(inp.n):
            costs = [inp.edge_cost(1 << i, b) for b in range(len(inp.right))]
            b = int(np.argmin(costs))
            picks.append((1 << i, b, costs[b]))
        return _finish(inp, picks)

    if inp.n > dp_cap:
        raise ValueError(f"{inp.n} uncovered requests exceed cover DP cap {dp_cap}; use k=1")

    best = inp.cheapest()
    full = (1 << inp.n) - 1
    f = [0.0] + [math.inf] * full
    choice = [0] * (full + 1)
    for T in range(1, full + 1):
        low = T & -T
        S = T
        while S:
            if S & low and S in best:
                cand = f[T ^ S] + best[S][0]
                if cand < f[T]:
                    f[T] = cand
                    choice[T] = S
            S = (S - 1) & T

    picks = []
    T = full
    while T:
        S = choice[T]
        picks.append((S, best[S][1], best[S][0]))
        T ^= S
    return _finish(inp, picks)


def gamma_k_exhaustive(A: Sequence[Any], B: Sequence[Any], k: Optional[float], oracle: CostOracle,
                       brute_cap: Optional[int] = None) -> Tuple[float, List[Hyperedge]]:
    """Cover DP over arbitrary (overlapping) hyperedges; valid for any non-negative oracle."""
    brute_cap = config.COVER_BRUTE_CAP if brute_cap is None else brute_cap
    inp = _CoverInput(A, B, k, oracle)
    if inp.n == 0:
        return 0.0, []
    if not inp.right:
        return math.inf, []
    if inp.n > brute_cap:
        raise ValueError(f"{inp.n} uncovered requests exceed exhaustive cover cap {brute_cap}")

    best = inp.cheapest()
    full = (1 << inp.n) - 1
    h = [0.0] + [math.inf] * full
    choice = [0] * (full + 1)
    edges = sorted(best)
    for U in range(1, full + 1):
        low = U & -U
        for e in edges:
            if e & low:
                cand = best[e][0] + h[U & ~e]
                if cand < h[U]:
                    h[U] = cand
                    choice[U] = e

    picks = []
    U = full
    while U:
        e = choice[U]
        picks.append((e, best[e][1], best[e][0]))
        U &= ~e
    return _finish(inp, picks)


def _discounted_cover(inp: _CoverInput, dp_cap: int) -> Tuple[float, List[Hyperedge]]:
    """Cover where each right element gets its discount once, keyed by how many it covers."""
    if inp.n > dp_cap:
        raise ValueError(f"{inp.n} uncovered requests exceed cover DP cap {dp_cap}")
    n = inp.n
    full = (1 << n) - 1
    pc = inp.popcount

    # per right element: cheapest split of U into hyperedges, minus the discount
    per_right = []
    for b in range(len(inp.right)):
        part = [0.0] + [math.inf] * full
        split = [0] * (full + 1)
        edge = {}
        for U in range(1, full + 1):
            low = U & -U
            S = U
            while S:
                if S & low and pc[S] <= inp.k:
                    if S not in edge:
                        edge[S] = inp.edge_cost(S, b)
                    cand = part[U ^ S] + edge[S]
                    if cand < part[U]:
                        part[U] = cand
                        split[U] = S
                S = (S - 1) & U
        adjusted = [0.0] + [part[U] - inp.oracle.cover_discount(inp.right[b], pc[U]) for U in range(1, full + 1)]
        per_right.append((adjusted, split, edge))

    g = [0.0] + [math.inf] * full
    trail = []
    for adjusted, _, _ in per_right:
        nxt = list(g)
        take = [0] * (full + 1)
        for T in range(1, full + 1):
            U = T
            while U:
                cand = g[T ^ U] + adjusted[U]
                if cand < nxt[T]:
                    nxt[T] = cand
                    take[T] = U
                U = (U - 1) & T
        trail.append(take)
        g = nxt

    picks = []
    T = full
    for b in range(len(per_right) - 1, -1, -1):
        U = trail[b][T]
        if not U:
            continue
        adjusted, split, edge = per_right[b]
        discount = inp.oracle.cover_discount(inp.right[b], pc[U])
        first = True
        V = U
        while V:
            S = split[V]
            cost = edge[S] - (discount if first else 0.0)
            picks.append((S, b, cost))
            first = False
            V ^= S
        T ^= U
    picks.reverse()
    return _finish(inp, picks)


def lambda_k(actual: Instance, predicted: PredictionSet, k: Optional[float], oracle: CostOracle,
             pred_oracle: Optional[CostOracle] = None) -> CoverReport:
    """Gamma_inf(predicted, actual) + Gamma_k(actual, predicted)."""
    actual_reqs = list(actual.requests)
    predicted_reqs = predicted.as_list()
    inf_cost, inf_edges = gamma_k(predicted_reqs, actual_reqs, INFINITE_K, pred_oracle or oracle)
    k_cost, k_edges = gamma_k(actual_reqs, predicted_reqs, k, oracle)
    report = CoverReport(
        gamma_inf_pred=inf_cost,
        gamma_k_actual=k_cost,
        k=INFINITE_K if k is None else k,
        oracle=oracle.name,
        edges_pred=inf_edges,
        edges_actual=k_edges,
    )
    logger.debug("lambda_%s (%s) = %s", k, oracle.name, report.lambda_k)
    return report


def lambda_halfline(actual: Instance, chat: float) -> float:
    """|C_hat - C*| on the half-line."""
    if not actual.space.half_line:
        raise ValueError("lambda_halfline requires a half-line instance")
    return abs(chat - halfline_makespan(actual.space, actual.requests))


def halfline_additional_cost_oracle() -> CostOracle:
    """Extra optimal makespan to serve the left points when the right one is served anyway.

    Items are ``(coordinate, release)`` pairs.
    """
    def makespan(points):
        return max((max(r + x, 2.0 * x) for x, r in points), default=0.0)

    def evaluate(subset, b):
        return makespan(list(subset) + [b]) - makespan([b])

    return CostOracle("halfline", evaluate, monotone=True)


def halfline_reduced_lambda(actual: Instance, chat: float) -> float:
    """Lambda_1 of the single-request reductions {(C*/2, 0)} and {(C_hat/2, 0)}."""
    c_star = halfline_makespan(actual.space, actual.requests)
    oracle = halfline_additional_cost_oracle()
    reduced_actual = [(c_star / 2.0, 0.0)]
    reduced_pred = [(chat / 2.0, 0.0)]
    inf_cost, _ = gamma_k(reduced_pred, reduced_actual, INFINITE_K, oracle)
    one_cost, _ = gamma_k(reduced_actual, reduced_pred, 1, oracle)
    return inf_cost + one_cost


def _request_distance(space: MetricSpace, a: AnyRequest, b: AnyRequest) -> float:
    if isinstance(a, RideRequest):
        return space.d(a.pickup, b.pickup) + space.d(a.dropoff, b.dropoff)
    return space.d(a.loc, b.loc)


def min_cost_matchings(space: MetricSpace, actual: Sequence[AnyRequest],
                       predicted: Sequence[AnyRequest]) -> Dict[int, float]:
    """D_m for every matched-subset size m, via padded assignment problems."""
    a, b = len(actual), len(predicted)
    cost = np.array([[_request_distance(space, x, y) for y in predicted] for x in actual],
                    dtype=float).reshape(a, b)
    curve = {0: 0.0}
    for m in range(1, min(a, b) + 1):
        size = a + b - m
        padded = np.zeros((size, size))
        padded[:a, :b] = cost
        padded[a:, b:] = np.inf
        rows, cols = linear_sum_assignment(padded)
        curve[m] = float(padded[rows, cols].sum())
    return curve


def prior_errors(actual: Instance, predicted: PredictionSet,
                 cap: Optional[int] = None) -> PriorErrors:
    """Counting error eta and the outlier/matching pair (Delta, D)."""
    cap = config.MATCHING_CAP if cap is None else cap
    actual_reqs = list(actual.requests)
    predicted_reqs = predicted.as_list()
    if max(len(actual_reqs), len(predicted_reqs)) > cap:
        raise ValueError(f"Matching sides exceed cap {cap}")
    _, _, correct = split_requests(actual_reqs, predicted_reqs)
    eta = max(len(actual_reqs), len(predicted_reqs)) - len(correct)
    curve = min_cost_matchings(actual.space, actual_reqs, predicted_reqs)
    m = min(len(actual_reqs), len(predicted_reqs))
    delta = len(actual_reqs) + len(predicted_reqs) - 2 * m
    return PriorErrors(eta=eta, delta=delta, d_matching=curve[m], curve=curve)


def tsp_oracle(space: MetricSpace) -> CostOracle:
    return CostOracle("tsp", lambda subset, b: gamma_tsp(space, subset, b))


def darp_oracle(space: MetricSpace, transport: float) -> CostOracle:
    return CostOracle("darp", lambda subset, b: gamma_darp(space, subset, b, transport))


def steiner_tree_oracle(space: MetricSpace) -> CostOracle:
    return CostOracle("st", lambda subset, b: gamma_st(space, [r.loc for r in subset], b.loc))


def steiner_forest_oracle(space: MetricSpace) -> CostOracle:
    """Items are rides read as terminal pairs (pickup, dropoff)."""
    return CostOracle(
        "sf",
        lambda subset, b: gamma_sf(space, [(r.pickup, r.dropoff) for r in subset], (b.pickup, b.dropoff)),
    )


def facility_location_oracle(space: MetricSpace, opening_costs: Sequence[float]) -> CostOracle:
    """Facility at the right element's location; a facility serving a single client pays no opening cost."""
    costs = [float(f) for f in opening_costs]
    if len(costs) != space.n:
        raise ValueError(f"Need one opening cost per point ({space.n}), got {len(costs)}")
    return CostOracle(
        "fl",
        lambda subset, b: gamma_fl(space, [r.loc for r in subset], b.loc, costs),
        cover_discount=lambda b, covered: costs[b.loc] if covered == 1 else 0.0,
    )


def make_oracles(name: str, actual: Instance, predicted: PredictionSet,
                 opening_costs: Optional[Sequence[float]] = None) -> Tuple[CostOracle, CostOracle]:
    """Oracle for covering actual requests and the one for covering predicted requests.

    Both sides share one oracle; for Dial-a-Ride both carry the transport term
    D of the correctly predicted rides.
    """
    space = actual.space
    if name == "tsp":
        oracle = tsp_oracle(space)
        return oracle, oracle
    if name == "darp":
        if actual.kind != ProblemKind.DARP:
            raise ValueError("The darp oracle needs a Dial-a-Ride instance")
        transport = max_transport_distance(space, actual.requests, predicted.as_list())
        oracle = darp_oracle(space, transport)
        return oracle, oracle
    if name == "st":
        oracle = steiner_tree_oracle(space)
        return oracle, oracle
    if name == "sf":
        if actual.kind != ProblemKind.DARP:
            raise ValueError("The sf oracle reads terminal pairs from a Dial-a-Ride instance")
        oracle = steiner_forest_oracle(space)
        return oracle, oracle
    if name == "fl":
        if opening_costs is None:
            opening_costs = [0.0] * space.n
        oracle = facility_location_oracle(space, opening_costs)
        return oracle, oracle
    raise ValueError(f"Unknown cost oracle: {name}")


def cover_report(name: str, actual: Instance, predicted: PredictionSet, k: Optional[float],
                 opening_costs: Optional[Sequence[float]] = None) -> CoverReport:
    """lambda_k with the named oracle pair."""
    oracle, pred_oracle = make_oracles(name, actual, predicted, opening_costs)
    return lambda_k(actual, predicted, k, oracle, pred_oracle)
