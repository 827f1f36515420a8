"""
Policy Factory
Builds online policies by name for the CLI and the experiment matrix.
"""

from __future__ import annotations

from typing import Optional

from services.instance_model import PredictionSet
from services.online_augmented import (
    algohl,
    delay_trust,
    poly_delay_trust,
    poly_predict_replan,
    predict_replan,
    smart_trust,
)
from services.online_classic import ignore, mrin, replan, smartstart
from services.simulator import OnlinePolicy
from services.tour_oracle import TourSolver
from utils.config import config

CLASSIC_POLICIES = ("replan", "ignore", "smartstart", "mrin")
AUGMENTED_POLICIES = ("predict-replan", "delay-trust", "smart-trust", "poly-pr", "poly-delay-trust", "algohl")
POLICY_NAMES = CLASSIC_POLICIES + AUGMENTED_POLICIES
TRUSTING_POLICIES = ("delay-trust", "smart-trust", "poly-delay-trust", "algohl")


def build_subroutine(name: str, solver: TourSolver) -> OnlinePolicy:
    if name == "replan":
        return replan(solver)
    if name == "ignore":
        return ignore(solver)
    if name == "smartstart":
        return smartstart(solver)
    if name == "mrin":
        return mrin()
    raise ValueError(f"Unknown subroutine: {name} (choose from {', '.join(CLASSIC_POLICIES)})")


def build_policy(name: str, prediction: Optional[PredictionSet] = None, alpha: Optional[float] = None,
                 sub: str = "smartstart", nu: Optional[float] = None, practical: bool = True,
                 approx: bool = False) -> OnlinePolicy:
    """Return a fresh policy object.

    Args:
        name: One of POLICY_NAMES.
        prediction: Request-set prediction, or a scalar one for algohl.
        alpha: Trust parameter; config.DEFAULT_ALPHA when omitted.
        sub: Phase (i) subroutine of delay-trust.
        nu: Approximation factor for approximate tours.
        practical: Let PredictReplan drop predicted requests known to be absent.
        approx: Use approximate instead of exact tours.
    """
    nu = config.DEFAULT_NU if nu is None else nu
    solver = TourSolver("approx" if approx else "exact", nu=nu)
    alpha = config.DEFAULT_ALPHA if alpha is None else alpha

    if name in CLASSIC_POLICIES:
        return build_subroutine(name, solver)
    if name not in AUGMENTED_POLICIES:
        raise ValueError(f"Unknown policy: {name} (choose from {', '.join(POLICY_NAMES)})")
    if prediction is None:
        raise ValueError(f"{name} needs a prediction")

    if name == "algohl":
        if not prediction.is_scalar:
            raise ValueError("algohl needs a scalar makespan prediction")
        return algohl(prediction.makespan_prediction, alpha)
    if name == "predict-replan":
        return predict_replan(prediction, solver, practical)
    if name == "delay-trust":
        return delay_trust(prediction, alpha, build_subroutine(sub, solver), solver, practical)
    if name == "smart-trust":
        return smart_trust(prediction, alpha, solver, practical)
    if name == "poly-pr":
        return poly_predict_replan(prediction, nu, practical)
    sub_solver = TourSolver("approx", nu=nu)
    return poly_delay_trust(prediction, alpha, build_subroutine(sub, sub_solver), nu, practical)
