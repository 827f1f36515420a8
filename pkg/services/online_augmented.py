"""
Learning-Augmented Policies
PredictReplan, the trust framework that delays it (DelayTrust), SmartTrust,
the polynomial-time PredictReplan, the half-line ALGOHL and the
Dial-a-Ride adaptations of the request-set policies.

All phase changes are written to the trace phase log; replans, excursions,
declined pickups and deferred replans go to the decision log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from services.instance_model import AnyRequest, PredictionSet, RideRequest, match_predictions
from services.online_classic import MRIN, SmartStart, TourPolicy, home_step
from services.simulator import OnlinePolicy, SimulationContext, Step
from services.tour_oracle import Tour, TourProblem, TourSolver, gamma_tsp
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class TrustParam:
    alpha: float
    half_line: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"Trust parameter alpha must be positive, got {self.alpha}")
        if self.half_line and self.alpha > 0.5:
            raise ValueError(f"Half-line trust parameter must lie in (0, 1/2], got {self.alpha}")


@dataclass(frozen=True)
class PredictedTour:
    tour: Tour
    makespan: float
    exact: bool


class PredictionTracker:
    """Bookkeeping of which predicted requests still need a visit.

    A predicted request is consumed once its identical actual request is
    served or on board, once its stop was visited, or (practical mode)
    once its release date has passed without an identical actual request.
    """

    def __init__(self, predicted: List[AnyRequest], practical: bool = True):
        self.predicted = list(predicted)
        self.practical = practical
        self.visited = set()

    def matching(self, ctx: SimulationContext) -> Dict[int, int]:
        released = ctx.released_requests()
        slots = match_predictions([req for _, req in released], self.predicted)
        return {rid: idx for (rid, _), idx in zip(released, slots) if idx is not None}

    def pending_predicted(self, ctx: SimulationContext, matching: Optional[Dict[int, int]] = None) -> List[int]:
        matching = self.matching(ctx) if matching is None else matching
        owner = {idx: rid for rid, idx in matching.items()}
        out = []
        for idx, req in enumerate(self.predicted):
            rid = owner.get(idx)
            if rid is not None:
                if rid not in ctx.served and rid != ctx.carrying:
                    out.append(idx)
                continue
            if idx in self.visited:
                continue
            if self.practical and req.release < ctx.time:
                continue
            out.append(idx)
        return out

    def unexpected_unserved(self, ctx: SimulationContext, matching: Optional[Dict[int, int]] = None):
        matching = self.matching(ctx) if matching is None else matching
        return [(rid, req) for rid, req in ctx.unserved() if rid not in matching]

    def mark(self, step: Step) -> None:
        if step.tag is not None and step.tag[0] == "pred":
            self.visited.add(step.tag[1])


class PredictReplan(TourPolicy):
    """Follow the predicted tour; on an unexpected release, replan through
    the unserved predicted and unexpected requests."""

    name = "predict-replan"

    def __init__(self, prediction: PredictionSet, solver: Optional[TourSolver] = None,
                 practical: bool = True):
        """Init.

        Args:
            prediction: Request-set prediction.
            solver: Tour solver for the predicted tour and every replan.
            practical: Drop predicted requests known to be absent.
        """
        super().__init__(solver)
        if prediction.is_scalar:
            raise ValueError("PredictReplan needs a request-set prediction; use algohl for a scalar one")
        self.prediction = prediction
        self.tracker = PredictionTracker(prediction.as_list(), practical)
        self.engaged = False
        self.deferred = False
        self._predicted_tour: Optional[PredictedTour] = None

    def predicted_tour(self, ctx: SimulationContext) -> PredictedTour:
        """Tour over all predicted requests from the origin at time 0."""
        if self._predicted_tour is None:
            problem = TourProblem(ctx.space, ctx.origin, 0.0, tuple(self.tracker.predicted), ctx.origin)
            tour = self.solver.solve(problem)
            self._predicted_tour = PredictedTour(tour, tour.completion, tour.exact)
        return self._predicted_tour

    def start(self, ctx):
        if self.prediction.requests and ctx.is_darp != isinstance(self.prediction.requests[0], RideRequest):
            raise ValueError("Prediction request type does not match the instance kind")
        ctx.log_phase("iii", chat=self.predicted_tour(ctx).makespan)
        self.engage(ctx)

    def engage(self, ctx: SimulationContext) -> None:
        self.engaged = True
        self.replan(ctx, reason="engage")

    def replan(self, ctx: SimulationContext, reason: str = "unexpected") -> None:
        matching = self.tracker.matching(ctx)
        pending = self.tracker.pending_predicted(ctx, matching)
        unexpected = self.tracker.unexpected_unserved(ctx, matching)
        requests = [self.tracker.predicted[idx] for idx in pending] + [req for _, req in unexpected]
        tags = [("pred", idx) for idx in pending] + [("act", rid) for rid, _ in unexpected]
        if not requests:
            if not ctx.at_origin():
                ctx.set_plan([home_step(ctx)])
            else:
                ctx.clear_plan()
            return
        steps, tour = self.tour_steps(ctx, requests, tags)
        ctx.set_plan(steps)
        ctx.log_decision("replan", reason=reason, predicted=len(pending), unexpected=len(unexpected),
                         completion=tour.completion)

    def _unexpected_in(self, ctx: SimulationContext, released) -> List[Tuple[int, AnyRequest]]:
        matching = self.tracker.matching(ctx)
        return [(rid, req) for rid, req in released if rid not in matching]

    def on_release(self, ctx, released):
        if not self.engaged:
            return
        unexpected = self._unexpected_in(ctx, released)
        if not unexpected:
            return
        if ctx.is_darp and ctx.carrying is not None:
            self.deferred = True
            ctx.log_decision("replan_deferred", carrying=ctx.carrying, requests=[rid for rid, _ in unexpected])
            return
        self.handle_unexpected(ctx, unexpected)

    def handle_unexpected(self, ctx: SimulationContext, unexpected) -> None:
        self.replan(ctx)

    def on_step(self, ctx, step):
        self.tracker.mark(step)
        if self.deferred and step.action == "dropoff" and ctx.carrying is None:
            self.deferred = False
            self.replan(ctx, reason="deferred")

    def on_idle(self, ctx):
        if self.engaged:
            self.replan(ctx, reason="idle")


class PolyPredictReplan(PredictReplan):
    """PredictReplan on approximate tours that only accepts a fresh tour when
    it beats inserting an excursion into the current plan."""

    name = "poly-pr"

    def __init__(self, prediction: PredictionSet, nu: float = 2.0, practical: bool = True):
        super().__init__(prediction, TourSolver("approx", nu=nu), practical)

    def start(self, ctx):
        if ctx.is_darp:
            raise ValueError("The polynomial-time PredictReplan is defined for the TSP only")
        super().start(ctx)

    def _anchor(self, ctx: SimulationContext, req: AnyRequest) -> Tuple[Optional[int], float]:
        best_idx, best_cost = None, math.inf
        for idx, pred in enumerate(self.tracker.predicted):
            cost = gamma_tsp(ctx.space, [req], pred)
            if cost < best_cost:
                best_idx, best_cost = idx, cost
        return best_idx, best_cost

    def handle_unexpected(self, ctx: SimulationContext, unexpected) -> None:
        for rid, req in unexpected:
            self._insert(ctx, rid, req)

    def _insert(self, ctx: SimulationContext, rid: int, req: AnyRequest) -> None:
        current = list(ctx.plan)
        before = ctx.plan_completion(current) if current else ctx.time + ctx.dist_to(ctx.origin)
        if not current:
            current = [home_step(ctx)]
        anchor, gamma = self._anchor(ctx, req)
        new_stop = Step(point=req.loc, ready_at=req.release, action="visit", requests=(req,), tag=("act", rid))

        slot = None
        if anchor is not None:
            for pos, step in enumerate(current):
                if step.tag == ("pred", anchor):
                    slot = pos + 1
                    break
        on_plan = slot is not None
        t1 = current[:slot] + [new_stop] + current[slot:] if on_plan else [new_stop] + current
        t1_done = ctx.plan_completion(t1)

        matching = self.tracker.matching(ctx)
        pending = self.tracker.pending_predicted(ctx, matching)
        others = self.tracker.unexpected_unserved(ctx, matching)
        requests = [self.tracker.predicted[idx] for idx in pending] + [r for _, r in others]
        tags = [("pred", idx) for idx in pending] + [("act", i) for i, _ in others]
        t2, tour = self.tour_steps(ctx, requests, tags)
        t2_done = tour.completion

        branch = "excursion" if t1_done <= t2_done else "fresh"
        ctx.set_plan(t1 if branch == "excursion" else t2)

        visited = anchor is not None and (
            anchor in self.tracker.visited
            or any(idx == anchor and (i in ctx.served) for i, idx in matching.items())
        )
        added = t1_done - before
        entry = dict(request=rid, anchor=anchor, gamma=gamma, branch=branch,
                     excursion_completion=t1_done, fresh_completion=t2_done,
                     anchor_on_plan=on_plan, added=added)
        if visited:
            entry["within_bound"] = added <= 3 * gamma + 1e-9 * max(1.0, abs(gamma))
            if not entry["within_bound"]:
                logger.warning("Excursion for request %s added %.6f > 3*gamma %.6f", rid, added, 3 * gamma)
        ctx.log_decision("excursion", **entry)


class DelayTrust(OnlinePolicy):
    """Run a prediction-free subroutine while t + d(p(t), o) <= alpha * C_hat,
    return to the origin, then follow PredictReplan."""

    name = "delay-trust"

    def __init__(self, prediction: PredictionSet, alpha: float, sub: OnlinePolicy,
                 solver: Optional[TourSolver] = None, practical: bool = True,
                 replanner: Optional[PredictReplan] = None):
        self.trust = TrustParam(alpha)
        self.sub = sub
        self.pr = replanner or PredictReplan(prediction, solver, practical)
        self.phase = "i"
        self.budget = 0.0
        sub_rho = getattr(sub, "rho", None)
        self.rho = None if sub_rho is None else 1 + sub_rho + sub_rho / alpha

    def start(self, ctx):
        chat = self.pr.predicted_tour(ctx).makespan
        self.budget = self.trust.alpha * chat
        ctx.log_phase("i", chat=chat, budget=self.budget, subroutine=self.sub.name)
        ctx.watch_budget(self.budget, "phase-i")
        self.sub.start(ctx)

    def _enter_ii(self, ctx: SimulationContext, reason: str) -> None:
        self.phase = "ii"
        ctx.clear_watch()
        ctx.cancel_timers()
        ctx.log_phase("ii", t_abort=ctx.time, reason=reason, position=ctx.position.to_dict(ctx.origin))
        if ctx.at_origin() and ctx.carrying is None:
            self._enter_iii(ctx)
        else:
            ctx.set_plan([home_step(ctx)])

    def _enter_iii(self, ctx: SimulationContext) -> None:
        self.phase = "iii"
        ctx.clear_watch()
        ctx.cancel_timers()
        ctx.log_phase("iii")
        self.pr.engage(ctx)

    def on_release(self, ctx, released):
        if self.phase == "i":
            self.sub.on_release(ctx, released)
        elif self.phase == "iii":
            self.pr.on_release(ctx, released)

    def on_timer(self, ctx, tag):
        if self.phase == "i":
            self.sub.on_timer(ctx, tag)

    def on_budget(self, ctx, tag):
        if self.phase == "i":
            self._enter_ii(ctx, "budget")

    def on_step(self, ctx, step):
        if self.phase == "i":
            self.sub.on_step(ctx, step)
        elif self.phase == "iii":
            self.pr.on_step(ctx, step)

    def on_idle(self, ctx):
        if self.phase == "i":
            self.sub.on_idle(ctx)
        elif self.phase == "ii":
            if ctx.at_origin():
                self._enter_iii(ctx)
            else:
                ctx.set_plan([home_step(ctx)])
        else:
            self.pr.on_idle(ctx)

    def allow_pickup(self, ctx, ride):
        if self.phase != "i":
            return True
        finish = ctx.time + ctx.space.d(ride.pickup, ride.dropoff) + ctx.space.d(ride.dropoff, ctx.origin)
        return finish <= self.budget + 1e-12 * max(1.0, self.budget)

    def on_pickup_declined(self, ctx, ride):
        if self.phase == "i":
            self._enter_ii(ctx, "pickup_declined")
        else:
            self.on_idle(ctx)


class SmartTrust(OnlinePolicy):
    """SmartStart until it would overrun alpha * C_hat or sits idle at that
    time, then (after waiting for alpha * C_hat / 2) PredictReplan."""

    name = "smart-trust"

    def __init__(self, prediction: PredictionSet, alpha: float, solver: Optional[TourSolver] = None,
                 practical: bool = True, replanner: Optional[PredictReplan] = None):
        self.trust = TrustParam(alpha)
        self.sub = SmartStart(solver)
        self.pr = replanner or PredictReplan(prediction, solver, practical)
        self.phase = "i"
        self.budget = 0.0
        self.rho = 2 + 2 / alpha

    def start(self, ctx):
        chat = self.pr.predicted_tour(ctx).makespan
        self.budget = self.trust.alpha * chat
        ctx.log_phase("i", chat=chat, budget=self.budget)
        ctx.set_timer(self.budget, "trust")
        self._step_i(ctx)

    def _overdue(self, ctx: SimulationContext) -> bool:
        return ctx.time >= self.budget - 1e-12 * max(1.0, self.budget)

    def _step_i(self, ctx: SimulationContext) -> None:
        sub = self.sub
        if sub.following or not ctx.at_origin():
            return
        action, steps, length = sub.decide(ctx)
        if action == "depart":
            if ctx.time + length > self.budget + 1e-12 * max(1.0, self.budget):
                self._enter_ii(ctx, length)
                return
            sub.follow(ctx, steps, length)
            return
        if self._overdue(ctx):
            self._enter_iii(ctx, "sleep" if action == "sleep" else "idle")
            return
        if action == "sleep":
            sub.sleep(ctx, length)

    def _enter_ii(self, ctx: SimulationContext, length: float) -> None:
        self.phase = "ii"
        ctx.cancel_timers()
        wait_until = self.budget / 2.0
        ctx.log_phase("ii", t_abort=ctx.time, tour_length=length, wait_until=max(ctx.time, wait_until))
        if ctx.time >= wait_until:
            self._enter_iii(ctx, "overrun")
        else:
            ctx.set_timer(wait_until, "phase-ii")

    def _enter_iii(self, ctx: SimulationContext, reason: str) -> None:
        self.phase = "iii"
        ctx.cancel_timers()
        ctx.log_phase("iii", reason=reason)
        self.pr.engage(ctx)

    def on_release(self, ctx, released):
        if self.phase == "i":
            self._step_i(ctx)
        elif self.phase == "iii":
            self.pr.on_release(ctx, released)

    def on_timer(self, ctx, tag):
        if self.phase == "i":
            if tag == "wake":
                self._step_i(ctx)
            elif tag == "trust" and not self.sub.following:
                self._enter_iii(ctx, "budget")
        elif self.phase == "ii" and tag == "phase-ii":
            self._enter_iii(ctx, "waited")

    def on_step(self, ctx, step):
        if self.phase == "iii":
            self.pr.on_step(ctx, step)

    def on_idle(self, ctx):
        if self.phase == "i":
            self.sub.following = False
            if not ctx.at_origin():
                self.sub.go_home(ctx)
                return
            self._step_i(ctx)
        elif self.phase == "iii":
            self.pr.on_idle(ctx)

    def allow_pickup(self, ctx, ride):
        if self.phase != "i":
            return True
        finish = ctx.time + ctx.space.d(ride.pickup, ride.dropoff) + ctx.space.d(ride.dropoff, ctx.origin)
        return finish <= self.budget + 1e-12 * max(1.0, self.budget)

    def on_pickup_declined(self, ctx, ride):
        if self.phase == "i":
            self.sub.following = False
            self._enter_ii(ctx, 0.0)
        else:
            self.on_idle(ctx)


class AlgoHL(OnlinePolicy):
    """Half-line policy with a scalar makespan prediction.

    MRIN until alpha * C_hat, then a move to ((1 - alpha) * C_hat + p) / 2,
    then MRIN again.
    """

    name = "algohl"

    def __init__(self, chat: float, alpha: float):
        self.trust = TrustParam(alpha, half_line=True)
        if chat < 0:
            raise ValueError("Predicted makespan must be non-negative")
        self.chat = float(chat)
        self.mrin = MRIN()
        self.phase = "i"
        self.rho = 1.5 / alpha

    def start(self, ctx):
        self.mrin.start(ctx)
        budget = self.trust.alpha * self.chat
        ctx.log_phase("i", chat=self.chat, budget=budget)
        ctx.set_timer(budget, "phase-ii")

    def on_release(self, ctx, released):
        if self.phase != "ii":
            self.mrin.on_release(ctx, released)

    def on_timer(self, ctx, tag):
        if tag != "phase-ii" or self.phase != "i":
            return
        self.phase = "ii"
        here = ctx.position.coord
        target = 0.5 * ((1 - self.trust.alpha) * self.chat + here)
        ctx.log_phase("ii", p_ii=here, p_iii=target)
        ctx.set_plan([Step(coord=target, action="move")])

    def on_idle(self, ctx):
        if self.phase == "ii":
            self.phase = "iii"
            ctx.log_phase("iii", position=ctx.position.coord)
            self.mrin.replan(ctx)
        else:
            self.mrin.on_idle(ctx)


def predict_replan(pred: PredictionSet, solver: Optional[TourSolver] = None, practical: bool = True) -> PredictReplan:
    return PredictReplan(pred, solver, practical)


def delay_trust(pred: PredictionSet, alpha: float, sub: OnlinePolicy,
                solver: Optional[TourSolver] = None, practical: bool = True) -> DelayTrust:
    return DelayTrust(pred, alpha, sub, solver, practical)


def smart_trust(pred: PredictionSet, alpha: float, solver: Optional[TourSolver] = None,
                practical: bool = True) -> SmartTrust:
    return SmartTrust(pred, alpha, solver, practical)


def poly_predict_replan(pred: PredictionSet, nu: float = 2.0, practical: bool = True) -> PolyPredictReplan:
    return PolyPredictReplan(pred, nu, practical)


def poly_delay_trust(pred: PredictionSet, alpha: float, sub: OnlinePolicy, nu: float = 2.0,
                     practical: bool = True) -> DelayTrust:
    """DelayTrust whose phase (iii) and C_hat use approximate tours."""
    policy = DelayTrust(pred, alpha, sub, replanner=PolyPredictReplan(pred, nu, practical))
    policy.name = "poly-delay-trust"
    sub_rho = getattr(sub, "rho", None)
    policy.rho = None if sub_rho is None else sub_rho + (1 + nu) * (1 + sub_rho / alpha)
    return policy


def algohl(chat: float, alpha: float) -> AlgoHL:
    return AlgoHL(chat, alpha)


def darp_variant(kind: str, pred: PredictionSet, alpha: Optional[float] = None,
                 sub: Optional[OnlinePolicy] = None, solver: Optional[TourSolver] = None,
                 practical: bool = True) -> OnlinePolicy:
    """Dial-a-Ride versions of predict-replan, delay-trust and smart-trust.

    The pickup guard and the replan deferral switch on from the instance kind.
    """
    if pred.is_scalar or any(not isinstance(r, RideRequest) for r in pred.requests):
        raise ValueError("Dial-a-Ride policies need a ride prediction")
    if kind == "predict-replan":
        return PredictReplan(pred, solver, practical)
    if alpha is None:
        raise ValueError(f"{kind} needs a trust parameter")
    if kind == "delay-trust":
        return DelayTrust(pred, alpha, sub or SmartStart(solver), solver, practical)
    if kind == "smart-trust":
        return SmartTrust(pred, alpha, solver, practical)
    raise ValueError(f"No Dial-a-Ride variant for {kind}")
