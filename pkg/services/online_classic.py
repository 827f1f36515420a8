"""
Classic Online Policies
Prediction-free baselines, also used as the phase (i) subroutine of the
trust framework: Replan, Ignore, SmartStart and MRIN (half-line).
"""

from __future__ import annotations

import math
from collections import OrderedDict
from typing import List, Optional, Sequence, Tuple

from services.instance_model import AnyRequest
from services.simulator import OnlinePolicy, SimulationContext, Step, steps_for_tour
from services.tour_oracle import Tour, TourSolver


def home_step(ctx: SimulationContext) -> Step:
    return Step(point=ctx.origin, action="move", tag=("home", 0))


class TourPolicy(OnlinePolicy):
    """Base for policies that follow tours computed by a TourSolver."""

    def __init__(self, solver: Optional[TourSolver] = None):
        self.solver = solver or TourSolver()

    def tour_steps(self, ctx: SimulationContext, requests: Sequence[AnyRequest],
                   tags: Optional[Sequence[Tuple[str, int]]] = None) -> Tuple[List[Step], Tour]:
        tour = self.solver.solve(ctx.tour_problem(requests))
        return steps_for_tour(requests, tour.order, ctx.origin, tags), tour

    def go_home(self, ctx: SimulationContext) -> None:
        if not ctx.at_origin():
            ctx.set_plan([home_step(ctx)])


class Replan(TourPolicy):
    """Recompute a fastest tour through everything unserved at every release."""

    name = "replan"

    def __init__(self, solver: Optional[TourSolver] = None):
        super().__init__(solver)
        self.rho = 2.5 if self.solver.is_exact else 1.5 + self.solver.nu

    def replan(self, ctx: SimulationContext) -> None:
        pending = ctx.unserved()
        if not pending:
            self.go_home(ctx)
            return
        steps, tour = self.tour_steps(ctx, [req for _, req in pending], [("act", rid) for rid, _ in pending])
        ctx.set_plan(steps)
        ctx.log_decision("replan", requests=len(pending), completion=tour.completion)

    def on_release(self, ctx, released):
        self.replan(ctx)

    def on_idle(self, ctx):
        self.replan(ctx)


class Ignore(TourPolicy):
    """Commit to a tour from the origin and ignore releases until back home."""

    name = "ignore"

    def __init__(self, solver: Optional[TourSolver] = None):
        super().__init__(solver)
        self.rho = 2.5 if self.solver.is_exact else None

    def _maybe_start(self, ctx: SimulationContext) -> None:
        if not ctx.is_idle():
            return
        if not ctx.at_origin():
            self.go_home(ctx)
            return
        pending = ctx.unserved()
        if pending:
            steps, tour = self.tour_steps(ctx, [req for _, req in pending], [("act", rid) for rid, _ in pending])
            ctx.set_plan(steps)
            ctx.log_decision("tour", requests=len(pending), completion=tour.completion)

    def on_release(self, ctx, released):
        self._maybe_start(ctx)

    def on_idle(self, ctx):
        self._maybe_start(ctx)


class SmartStart(TourPolicy):
    """Leave the origin only when the tour is no longer than the current time."""

    name = "smartstart"

    def __init__(self, solver: Optional[TourSolver] = None):
        super().__init__(solver)
        nu = self.solver.nu
        self.rho = 2.0 if self.solver.is_exact else (4 * nu + 1 + math.sqrt(1 + 8 * nu)) / 4
        self.following = False

    def decide(self, ctx: SimulationContext):
        """Return ("idle"|"sleep"|"depart", steps, tour length) at the origin."""
        pending = ctx.unserved()
        if not pending:
            return "idle", None, 0.0
        steps, tour = self.tour_steps(ctx, [req for _, req in pending], [("act", rid) for rid, _ in pending])
        length = tour.completion - ctx.time
        if length <= ctx.time + 1e-9 * max(1.0, ctx.time):
            return "depart", steps, length
        return "sleep", None, length

    def follow(self, ctx: SimulationContext, steps: List[Step], length: float) -> None:
        ctx.cancel_timers("wake")
        ctx.set_plan(steps)
        self.following = True
        ctx.log_decision("depart", tour_length=length)

    def sleep(self, ctx: SimulationContext, length: float) -> None:
        ctx.cancel_timers("wake")
        ctx.set_timer(length, "wake")
        ctx.log_decision("sleep", until=length)

    def act(self, ctx: SimulationContext) -> None:
        if self.following or not ctx.at_origin():
            return
        action, steps, length = self.decide(ctx)
        if action == "depart":
            self.follow(ctx, steps, length)
        elif action == "sleep":
            self.sleep(ctx, length)

    def on_release(self, ctx, released):
        self.act(ctx)

    def on_timer(self, ctx, tag):
        if tag == "wake":
            self.act(ctx)

    def on_idle(self, ctx):
        self.following = False
        if not ctx.at_origin():
            self.go_home(ctx)
            return
        self.act(ctx)


class MRIN(OnlinePolicy):
    """Move right while a released unserved request lies to the right, else head home.

    Direction only changes at releases, so replanning there is exact.
    """

    name = "mrin"
    rho = 1.5

    def start(self, ctx):
        if not ctx.space.half_line:
            raise ValueError("MRIN is defined on the half-line only")

    def replan(self, ctx: SimulationContext) -> None:
        here = ctx.position.coord
        stops = OrderedDict()
        for rid, req in sorted(ctx.unserved(), key=lambda item: (ctx.space.coord(item[1].loc), item[0])):
            stops.setdefault(req.loc, []).append(req)
        if not stops:
            if not ctx.at_origin():
                ctx.set_plan([home_step(ctx)])
            return

        def stop(loc):
            return Step(point=loc, action="visit", requests=tuple(stops[loc]))

        coord = ctx.space.coord
        tol = 1e-12
        current = [loc for loc in stops if abs(coord(loc) - here) <= tol]
        right = [loc for loc in stops if coord(loc) > here + tol]
        left = [loc for loc in stops if coord(loc) < here - tol]
        plan = [stop(loc) for loc in current]
        plan += [stop(loc) for loc in right]
        plan += [stop(loc) for loc in reversed(left)]
        plan.append(home_step(ctx))
        ctx.set_plan(plan)
        ctx.log_decision("mrin", direction="right" if right else "left")

    def on_release(self, ctx, released):
        self.replan(ctx)

    def on_idle(self, ctx):
        if ctx.unserved() or not ctx.at_origin():
            self.replan(ctx)


def replan(solver: Optional[TourSolver] = None) -> Replan:
    return Replan(solver)


def ignore(solver: Optional[TourSolver] = None) -> Ignore:
    return Ignore(solver)


def smartstart(solver: Optional[TourSolver] = None) -> SmartStart:
    return SmartStart(solver)


def mrin() -> MRIN:
    return MRIN()
