"""
Simulator
Deterministic event-driven execution of an online policy against an
instance. Produces a feasibility-checked trace with the makespan, service
times, phase transitions and policy decisions.

Events at equal times run in the order: releases, timers (including the
phase budget watch), step completions, end signal.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.instance_model import AnyRequest, Instance, PredictionSet, ProblemKind, RideRequest
from services.metric_space import MetricSpace
from services.tour_oracle import TourProblem, optimal_makespan
from utils.config import config
from utils.logger import get_logger

logger = get_logger(__name__)

POSITION_TOL = 1e-9


class EventKind(IntEnum):
    RELEASE = 0
    TIMER = 1
    ARRIVAL = 2
    END = 3


@dataclass(frozen=True, eq=False)
class Position:
    """Server location: a point, a line coordinate, or a spot on the current leg.

    ``row`` holds the distance to every point of the space.
    """

    row: np.ndarray
    point: Optional[int] = None
    coord: Optional[float] = None

    @classmethod
    def at_point(cls, space: MetricSpace, point: int) -> "Position":
        coord = space.coord(point) if space.is_line else None
        return cls(space.row(point), int(point), coord)

    @classmethod
    def at_coord(cls, space: MetricSpace, coord: float) -> "Position":
        row = space.row_at_coord(coord)
        hits = np.flatnonzero(row == 0)
        return cls(row, int(hits[0]) if len(hits) else None, float(coord))

    def dist_to(self, point: int) -> float:
        return float(self.row[point])

    def to_dict(self, origin: int) -> dict:
        return {"point": self.point, "coord": self.coord, "to_origin": float(self.row[origin])}


@dataclass(frozen=True)
class Step:
    """One waypoint of a plan.

    The server travels to ``point`` (or line ``coord``), waits until
    ``ready_at`` and then performs ``action`` for ``requests``.
    """

    point: Optional[int] = None
    coord: Optional[float] = None
    ready_at: float = 0.0
    action: str = "visit"
    requests: Tuple[AnyRequest, ...] = ()
    tag: Optional[Tuple[str, int]] = None


@dataclass(frozen=True, eq=False)
class Segment:
    t_start: float
    t_end: float
    start: Position
    end: Position
    length: float

    def to_dict(self, origin: int) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "from": self.start.to_dict(origin),
            "to": self.end.to_dict(origin),
            "length": self.length,
        }


@dataclass
class Trace:
    policy: str
    origin: int
    segments: List[Segment] = field(default_factory=list)
    services: Dict[int, float] = field(default_factory=dict)
    makespan: float = 0.0
    phase_log: List[dict] = field(default_factory=list)
    decision_log: List[dict] = field(default_factory=list)

    def replay(self) -> float:
        """Walk the segments and return the time the last one ends."""
        t = 0.0
        for seg in self.segments:
            if seg.t_start != t:
                raise RuntimeError(f"Segment gap at {t}: next segment starts at {seg.t_start}")
            t = seg.t_end
        return t

    def decisions(self, kind: str) -> List[dict]:
        return [d for d in self.decision_log if d["kind"] == kind]

    def phases(self) -> List[str]:
        return [p["phase"] for p in self.phase_log]

    def verify(self, instance: Instance) -> None:
        """Raise RuntimeError naming the first infeasible segment or request."""
        origin = instance.origin
        t = 0.0
        for idx, seg in enumerate(self.segments):
            duration = seg.t_end - seg.t_start
            if seg.t_start != t or duration < 0:
                raise RuntimeError(f"Segment {idx} breaks time continuity: {seg.to_dict(origin)}")
            if seg.length > duration * (1 + 1e-12) + 1e-12:
                raise RuntimeError(f"Segment {idx} exceeds unit speed: {seg.to_dict(origin)}")
            if seg.end.point is not None and seg.start.dist_to(seg.end.point) > seg.length + POSITION_TOL:
                raise RuntimeError(f"Segment {idx} reaches point {seg.end.point} too early: {seg.to_dict(origin)}")
            t = seg.t_end
        for idx, req in enumerate(instance.requests):
            if idx not in self.services:
                raise RuntimeError(f"Request {idx} {req} was never served")
            if self.services[idx] < req.release:
                raise RuntimeError(f"Request {idx} served at {self.services[idx]} before release {req.release}")
        if self.segments:
            if self.segments[-1].end.dist_to(origin) > POSITION_TOL:
                raise RuntimeError("Trace does not end at the origin")
            if self.segments[-1].t_end != self.makespan:
                raise RuntimeError(f"Makespan {self.makespan} differs from last segment end {self.segments[-1].t_end}")

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "makespan": self.makespan,
            "segments": [s.to_dict(self.origin) for s in self.segments],
            "services": {str(k): v for k, v in sorted(self.services.items())},
            "phase_log": self.phase_log,
            "decision_log": self.decision_log,
        }


class _Leg:
    """Unit-speed straight motion from ``start`` toward the head step's waypoint."""

    def __init__(self, space: MetricSpace, start: Position, start_time: float, step: Step):
        self.space = space
        self.start = start
        self.start_time = start_time
        self.step = step
        if step.point is not None:
            self.length = start.dist_to(step.point)
            self.target_coord = space.coord(step.point) if space.is_line else None
        elif step.coord is not None:
            if start.coord is None:
                raise RuntimeError("Coordinate waypoints need a line space")
            self.length = abs(step.coord - start.coord)
            self.target_coord = float(step.coord)
        else:
            raise RuntimeError(f"Step without a waypoint: {step}")
        if self.target_coord is not None:
            self.sign = 1.0 if self.target_coord >= start.coord else -1.0

    @property
    def arrival(self) -> float:
        return self.start_time + self.length

    @property
    def completion(self) -> float:
        return max(self.arrival, self.step.ready_at)

    def end_position(self) -> Position:
        if self.step.point is not None:
            return Position.at_point(self.space, self.step.point)
        return Position.at_coord(self.space, self.target_coord)

    def position_at(self, s: float) -> Position:
        if s >= self.length:
            return self.end_position()
        if s <= 0:
            return self.start
        if self.target_coord is not None:
            return Position.at_coord(self.space, self.start.coord + self.sign * s)
        row = np.minimum(self.start.row + s, (self.length - s) + self.space.row(self.step.point))
        return Position(row)

    def dist_at(self, y: int, s: float) -> float:
        if s >= self.length:
            return self.end_position().dist_to(y)
        if self.target_coord is not None:
            return abs(self.start.coord + self.sign * s - self.space.coord(y))
        return min(self.start.dist_to(y) + s, self.length - s + self.space.d(self.step.point, y))

    def pieces(self, y: int) -> List[Tuple[float, float, float]]:
        """Split [0, length] into intervals on which the distance to ``y`` is linear."""
        length = self.length
        if length <= 0:
            return []
        if self.target_coord is not None:
            q = self.sign * (self.space.coord(y) - self.start.coord)
            if q <= 0:
                return [(0.0, length, 1.0)]
            if q >= length:
                return [(0.0, length, -1.0)]
            return [(0.0, q, -1.0), (q, length, 1.0)]
        a = self.start.dist_to(y)
        b = self.space.d(self.step.point, y)
        bend = min(max((length + b - a) / 2.0, 0.0), length)
        out = []
        if bend > 0:
            out.append((0.0, bend, 1.0))
        if bend < length:
            out.append((bend, length, -1.0))
        return out

    def origin_contact(self, origin: int) -> Optional[float]:
        """Progress at which the leg first touches the origin, if it does."""
        if self.start.dist_to(origin) <= POSITION_TOL:
            return 0.0
        if self.target_coord is not None:
            q = self.sign * (self.space.coord(origin) - self.start.coord)
            return q if 0 < q <= self.length + POSITION_TOL else None
        if self.step.point is not None and self.space.d(self.step.point, origin) <= POSITION_TOL:
            return self.length
        return None


class OnlinePolicy:
    """Callback contract between the simulator and an online algorithm.

    Every hook receives the live ``SimulationContext``; policies steer the
    server only through it.
    """

    name = "policy"
    rho: Optional[float] = None

    def start(self, ctx: "SimulationContext") -> None:
        pass

    def on_release(self, ctx: "SimulationContext", released: List[Tuple[int, AnyRequest]]) -> None:
        pass

    def on_timer(self, ctx: "SimulationContext", tag: str) -> None:
        pass

    def on_budget(self, ctx: "SimulationContext", tag: str) -> None:
        pass

    def on_step(self, ctx: "SimulationContext", step: Step) -> None:
        pass

    def on_idle(self, ctx: "SimulationContext") -> None:
        pass

    def allow_pickup(self, ctx: "SimulationContext", ride: RideRequest) -> bool:
        return True

    def on_pickup_declined(self, ctx: "SimulationContext", ride: RideRequest) -> None:
        self.on_idle(ctx)


class SimulationContext:
    """Everything a policy may observe or control during one episode."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.space = instance.space
        self.origin = instance.origin
        self.kind = instance.kind
        self.time = 0.0
        self.position = Position.at_point(self.space, self.origin)
        self.plan: Deque[Step] = deque()
        self.leg: Optional[_Leg] = None
        self.carrying: Optional[int] = None
        self.released: List[int] = []
        self.served: Dict[int, float] = {}
        self.timers: List[Tuple[float, int, str]] = []
        self.watch: Optional[Tuple[float, str]] = None
        self.phase_log: List[dict] = []
        self.decision_log: List[dict] = []
        self._seq = 0

    # observation -----------------------------------------------------------

    @property
    def is_darp(self) -> bool:
        return self.kind == ProblemKind.DARP

    def request(self, rid: int) -> AnyRequest:
        return self.instance.requests[rid]

    def released_requests(self) -> List[Tuple[int, AnyRequest]]:
        return [(rid, self.instance.requests[rid]) for rid in self.released]

    def unserved(self) -> List[Tuple[int, AnyRequest]]:
        """Released requests that are neither served nor on board."""
        return [(rid, req) for rid, req in self.released_requests()
                if rid not in self.served and rid != self.carrying]

    def is_idle(self) -> bool:
        return not self.plan

    def at_origin(self) -> bool:
        return self.position.dist_to(self.origin) <= POSITION_TOL

    def dist_to(self, point: int) -> float:
        return self.position.dist_to(point)

    def planning_origin(self) -> Tuple[np.ndarray, float]:
        """Where and when a fresh plan can start: after the ride on board, if any."""
        if self.carrying is not None and self.plan and self.plan[0].action == "dropoff":
            head = self.plan[0]
            done = self.leg.arrival if self.leg is not None else self.time + self.position.dist_to(head.point)
            return self.space.row(head.point), done
        return self.position.row, self.time

    def tour_problem(self, requests: Sequence[AnyRequest]) -> TourProblem:
        row, t = self.planning_origin()
        return TourProblem(self.space, row, t, tuple(requests), self.origin)

    def plan_completion(self, steps: Sequence[Step]) -> float:
        """Time at which ``steps`` would be finished if adopted now."""
        row, t = self.planning_origin()
        coord = self.position.coord
        if row is not self.position.row and self.space.is_line:
            coord = self.space.coord(self.plan[0].point)
        for step in steps:
            if step.point is not None:
                t = max(t + float(row[step.point]), step.ready_at)
                row = self.space.row(step.point)
                coord = self.space.coord(step.point) if self.space.is_line else None
            else:
                t = max(t + abs(coord - step.coord), step.ready_at)
                row = self.space.row_at_coord(step.coord)
                coord = step.coord
        return t

    # control ---------------------------------------------------------------

    def set_plan(self, steps: Sequence[Step]) -> None:
        """Replace the plan; a pending dropoff stays at its head."""
        steps = list(steps)
        if self.carrying is not None and self.plan and self.plan[0].action == "dropoff":
            head = self.plan[0]
            self.plan = deque([head] + steps)
        else:
            self.plan = deque(steps)
            self.leg = None

    def clear_plan(self) -> None:
        self.set_plan([])

    def set_timer(self, when: float, tag: str) -> None:
        self._seq += 1
        heapq.heappush(self.timers, (max(when, self.time), self._seq, tag))

    def cancel_timers(self, tag: Optional[str] = None) -> None:
        self.timers = [t for t in self.timers if tag is not None and t[2] != tag]
        heapq.heapify(self.timers)

    def has_timer(self, tag: str) -> bool:
        return any(t[2] == tag for t in self.timers)

    def watch_budget(self, budget: float, tag: str) -> None:
        """Fire ``on_budget`` at the last moment with t + d(p(t), o) <= budget."""
        self.watch = (budget, tag)

    def clear_watch(self) -> None:
        self.watch = None

    def log_phase(self, phase: str, **info: Any) -> None:
        entry = {"t": self.time, "phase": phase}
        entry.update(info)
        self.phase_log.append(entry)
        logger.debug("t=%.6f phase %s %s", self.time, phase, info)

    def log_decision(self, kind: str, **info: Any) -> None:
        entry = {"t": self.time, "kind": kind}
        entry.update(info)
        self.decision_log.append(entry)
        logger.debug("t=%.6f decision %s %s", self.time, kind, info)


def steps_for_tour(requests: Sequence[AnyRequest], order: Sequence[int], origin: int,
                   tags: Optional[Sequence[Tuple[str, int]]] = None) -> List[Step]:
    """Plan that follows a tour order and then heads home."""
    steps: List[Step] = []
    for idx in order:
        req = requests[idx]
        tag = tags[idx] if tags is not None else None
        if isinstance(req, RideRequest):
            steps.append(Step(point=req.pickup, ready_at=req.release, action="pickup", requests=(req,), tag=tag))
            steps.append(Step(point=req.dropoff, action="dropoff", requests=(req,), tag=tag))
        else:
            steps.append(Step(point=req.loc, ready_at=req.release, action="visit", requests=(req,), tag=tag))
    steps.append(Step(point=origin, action="move", tag=("home", 0)))
    return steps


class _Episode:
    """Event loop for one policy on one instance."""

    def __init__(self, instance: Instance, policy: OnlinePolicy):
        self.instance = instance
        self.policy = policy
        self.ctx = SimulationContext(instance)
        self.pending = sorted(range(len(instance.requests)), key=lambda i: (instance.requests[i].release, i))
        self.segments: List[Segment] = []

    # time ------------------------------------------------------------------

    def _advance(self, t_new: float) -> None:
        ctx = self.ctx
        if t_new <= ctx.time:
            return
        leg = ctx.leg
        if leg is not None:
            move_end = min(t_new, leg.arrival)
            if move_end > ctx.time:
                s0 = ctx.time - leg.start_time
                s1 = move_end - leg.start_time
                end = leg.position_at(s1)
                self.segments.append(Segment(ctx.time, move_end, ctx.position, end, min(s1, leg.length) - s0))
                ctx.position = end
                ctx.time = move_end
        if t_new > ctx.time:
            self.segments.append(Segment(ctx.time, t_new, ctx.position, ctx.position, 0.0))
        ctx.time = t_new

    def _ensure_leg(self) -> None:
        ctx = self.ctx
        if ctx.plan and ctx.leg is None:
            ctx.leg = _Leg(ctx.space, ctx.position, ctx.time, ctx.plan[0])

    def _budget_time(self) -> float:
        ctx = self.ctx
        budget, _ = ctx.watch
        tol = 1e-12 * max(1.0, abs(budget))
        origin = ctx.origin
        leg = ctx.leg
        if leg is None:
            return max(ctx.time, budget - ctx.position.dist_to(origin))
        s_now = ctx.time - leg.start_time
        for lo, hi, slope in leg.pieces(origin):
            if hi <= s_now:
                continue
            lo = max(lo, s_now)
            f_lo = leg.start_time + lo + leg.dist_at(origin, lo)
            f_hi = leg.start_time + hi + leg.dist_at(origin, hi)
            if f_hi <= budget + tol:
                continue
            rate = 1.0 + slope
            if f_lo > budget or rate == 0:
                return leg.start_time + lo
            return leg.start_time + lo + (budget - f_lo) / rate
        # waiting at the waypoint until the step completes
        t_star = max(leg.arrival, budget - leg.end_position().dist_to(origin))
        return t_star if t_star < leg.completion else math.inf

    def _done(self) -> bool:
        ctx = self.ctx
        return (not self.pending and ctx.carrying is None
                and len(ctx.served) == len(self.instance.requests))

    def _end_time(self) -> float:
        ctx = self.ctx
        if not self._done():
            return math.inf
        if ctx.at_origin():
            return ctx.time
        leg = ctx.leg
        if leg is None:
            return math.inf
        contact = leg.origin_contact(ctx.origin)
        if contact is not None and leg.start_time + contact >= ctx.time:
            return leg.start_time + contact
        if leg.end_position().dist_to(ctx.origin) <= POSITION_TOL:
            return leg.arrival
        return math.inf

    def _next_event(self) -> Tuple[float, EventKind]:
        ctx = self.ctx
        options = []
        if self.pending:
            options.append((self.instance.requests[self.pending[0]].release, EventKind.RELEASE))
        if ctx.timers:
            options.append((ctx.timers[0][0], EventKind.TIMER))
        if ctx.watch is not None:
            options.append((self._budget_time(), EventKind.TIMER))
        if ctx.leg is not None:
            options.append((ctx.leg.completion, EventKind.ARRIVAL))
        options.append((self._end_time(), EventKind.END))
        return min(options)

    # handlers --------------------------------------------------------------

    def _release(self) -> None:
        ctx = self.ctx
        t = self.instance.requests[self.pending[0]].release
        batch = []
        while self.pending and self.instance.requests[self.pending[0]].release == t:
            rid = self.pending.pop(0)
            ctx.released.append(rid)
            batch.append((rid, self.instance.requests[rid]))
        self.policy.on_release(ctx, batch)

    def _timer(self, when: float) -> None:
        ctx = self.ctx
        if ctx.timers and ctx.timers[0][0] <= when:
            _, _, tag = heapq.heappop(ctx.timers)
            self.policy.on_timer(ctx, tag)
            return
        _, tag = ctx.watch
        ctx.watch = None
        self.policy.on_budget(ctx, tag)

    def _match_unserved(self, req: AnyRequest) -> Optional[int]:
        ctx = self.ctx
        for rid in ctx.released:
            if rid not in ctx.served and rid != ctx.carrying and self.instance.requests[rid] == req:
                return rid
        return None

    def _arrival(self) -> None:
        ctx = self.ctx
        leg = ctx.leg
        ctx.position = leg.end_position()
        ctx.leg = None
        step = ctx.plan.popleft()
        if step.action == "visit":
            for req in step.requests:
                rid = self._match_unserved(req)
                if rid is not None:
                    ctx.served[rid] = ctx.time
        elif step.action == "pickup":
            ride = step.requests[0]
            rid = self._match_unserved(ride)
            if rid is not None and ctx.carrying is None:
                if not self.policy.allow_pickup(ctx, ride):
                    ctx.log_decision("pickup_declined", request=rid)
                    ctx.clear_plan()
                    self.policy.on_pickup_declined(ctx, ride)
                    return
                ctx.carrying = rid
                ctx.log_decision("pickup", request=rid)
            elif ctx.plan and ctx.plan[0].action == "dropoff" and ctx.plan[0].requests == step.requests:
                # nothing to carry: skip the ride leg
                ctx.plan.popleft()
        elif step.action == "dropoff":
            if ctx.carrying is not None and self.instance.requests[ctx.carrying] == step.requests[0]:
                ctx.served[ctx.carrying] = ctx.time
                ctx.log_decision("dropoff", request=ctx.carrying)
                ctx.carrying = None
        self.policy.on_step(ctx, step)
        if not ctx.plan:
            self.policy.on_idle(ctx)

    # main loop -------------------------------------------------------------

    def run(self) -> Trace:
        ctx = self.ctx
        self.policy.start(ctx)
        limit = config.SIMULATION_MAX_EVENTS
        for _ in range(limit):
            self._ensure_leg()
            when, kind = self._next_event()
            if math.isinf(when):
                raise RuntimeError(
                    f"Policy {self.policy.name} stalled at t={ctx.time} with "
                    f"{len(self.instance.requests) - len(ctx.served)} requests unserved"
                )
            self._advance(when)
            if kind == EventKind.RELEASE:
                self._release()
            elif kind == EventKind.TIMER:
                self._timer(when)
            elif kind == EventKind.ARRIVAL:
                self._arrival()
            else:
                if not ctx.at_origin():
                    ctx.position = Position.at_point(ctx.space, ctx.origin)
                    if self.segments:
                        last = self.segments[-1]
                        self.segments[-1] = Segment(last.t_start, last.t_end, last.start, ctx.position, last.length)
                return self._trace()
        raise RuntimeError(f"Simulation exceeded {limit} events")

    def _trace(self) -> Trace:
        ctx = self.ctx
        return Trace(
            policy=self.policy.name,
            origin=ctx.origin,
            segments=self.segments,
            services=dict(ctx.served),
            makespan=ctx.time,
            phase_log=ctx.phase_log,
            decision_log=ctx.decision_log,
        )


def run(instance: Instance, policy: OnlinePolicy, prediction: Optional[PredictionSet] = None) -> Trace:
    """Simulate ``policy`` on ``instance`` and return the verified trace."""
    if prediction is not None:
        prediction.validate_for(instance)
    trace = _Episode(instance, policy).run()
    trace.verify(instance)
    logger.debug("%s finished with makespan %.6f", policy.name, trace.makespan)
    return trace


def empirical_cr(trace: Trace, instance: Instance, opt_mode: str = "exact") -> float:
    """Makespan over the optimum (exact) or its approximation."""
    opt = optimal_makespan(instance, opt_mode)
    if opt <= 0:
        return 1.0 if trace.makespan <= 0 else math.inf
    ratio = trace.makespan / opt
    if opt_mode == "approx" and ratio < 1:
        logger.warning("Approximate optimum overestimates: ratio %.6f below 1 for %s", ratio, trace.policy)
    return ratio
