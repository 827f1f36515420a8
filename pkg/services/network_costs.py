"""
Network Design Costs
Exact subinstance values used as hyperedge costs for the network-design
error measures: rooted Steiner tree, Steiner forest with one free pair,
and single-facility location.
"""

from __future__ import annotations

from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from services.metric_space import MetricSpace
from utils.config import config


def steiner_tree_cost(dist: np.ndarray, terminals: Sequence[int], root: int,
                      cap: Optional[int] = None) -> float:
    """Dreyfus-Wagner over the metric closure ``dist``.

    dp[S][v] is the cheapest tree spanning terminal set S plus vertex v.
    """
    cap = config.STEINER_TERMINAL_CAP if cap is None else cap
    terms = sorted(set(int(t) for t in terminals) - {int(root)})
    if len(terms) + 1 > cap:
        raise ValueError(f"{len(terms) + 1} Steiner terminals exceed cap {cap}")
    if not terms:
        return 0.0
    if len(terms) == 1:
        return float(dist[root, terms[0]])

    k = len(terms)
    full = (1 << k) - 1
    dp = np.full((1 << k, dist.shape[0]), np.inf)
    for i, t in enumerate(terms):
        dp[1 << i] = dist[t]
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        merged = np.full(dist.shape[0], np.inf)
        sub = (mask - 1) & mask
        while sub:
            if sub & low:
                merged = np.minimum(merged, dp[sub] + dp[mask ^ sub])
            sub = (sub - 1) & mask
        dp[mask] = (merged[:, None] + dist).min(axis=0)
    return float(dp[full, root])


def gamma_st(space: MetricSpace, terminals: Sequence[int], root: int) -> float:
    """Optimal Steiner tree connecting ``terminals`` to ``root``."""
    return steiner_tree_cost(space.dist, terminals, root)


def _set_partitions(items: List[int]) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        yield [[head]] + partition
        for i in range(len(partition)):
            yield partition[:i] + [[head] + partition[i]] + partition[i + 1:]


def gamma_sf(space: MetricSpace, pairs: Sequence[Tuple[int, int]],
             free_pair: Tuple[int, int]) -> float:
    """Optimal Steiner forest for ``pairs`` when connecting ``free_pair`` costs nothing.

    The free connection is modelled as a zero-length shortcut between its
    endpoints; each group of a pair partition is joined by one Steiner tree.
    """
    terminals = {p for pair in pairs for p in pair}
    if len(terminals) > config.STEINER_FOREST_TERMINAL_CAP:
        raise ValueError(f"{len(terminals)} Steiner forest terminals exceed cap "
                         f"{config.STEINER_FOREST_TERMINAL_CAP}")
    s, t = free_pair
    d = space.dist
    shortcut = np.minimum(d[:, s][:, None] + d[t, :][None, :], d[:, t][:, None] + d[s, :][None, :])
    dist = np.minimum(d, shortcut)

    wanted = [pair for pair in pairs if pair[0] != pair[1]]
    if not wanted:
        return 0.0
    best = np.inf
    for partition in _set_partitions(list(range(len(wanted)))):
        total = 0.0
        for group in partition:
            nodes = sorted({p for idx in group for p in wanted[idx]})
            total += steiner_tree_cost(dist, nodes[1:], nodes[0], cap=len(nodes) + 1)
            if total >= best:
                break
        best = min(best, total)
    return float(best)


def gamma_fl(space: MetricSpace, clients: Sequence[int], facility: int,
             opening_costs: Sequence[float]) -> float:
    """Open ``facility`` and assign every client to it."""
    return float(opening_costs[facility]) + float(sum(space.d(facility, c) for c in clients))
