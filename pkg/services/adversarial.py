"""
Adversarial Instances
Lower-bound constructions with their predictions: the consistency and
robustness tradeoff pair, the SmartTrust robustness witness, and the
ALGOHL robustness witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from services.instance_model import Instance, PredictionSet, ProblemKind, Request
from services.metric_space import half_line_space, line_space

ADVERSARIAL_KINDS = ("tradeoff", "tradeoff-robust", "smarttrust", "algohl")


@dataclass(frozen=True)
class AdversarialCase:
    """Instance, prediction and the ratio the construction forces."""

    kind: str
    instance: Instance
    prediction: PredictionSet
    alpha: float
    eps: float
    policy: str
    target_ratio: Optional[float]

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "eps": self.eps,
            "policy": self.policy,
            "target_ratio": self.target_ratio,
            "requests": [req.to_dict() for req in self.instance.requests],
        }


def _check_tradeoff(alpha: float, eps: float) -> None:
    if not 0 < alpha < 0.5:
        raise ValueError(f"tradeoff needs alpha in (0, 1/2), got {alpha}")
    if not 0 < eps <= 1 - 2 * alpha:
        raise ValueError(f"tradeoff needs 0 < eps <= 1 - 2*alpha, got {eps}")


def tradeoff(alpha: float, eps: float) -> AdversarialCase:
    """Two requests (0, 2a+e) and (1, 1) with a perfect prediction.

    A (1+alpha)-consistent algorithm must head for 1 before time 2a+e.
    """
    _check_tradeoff(alpha, eps)
    space = half_line_space([0.0, 1.0])
    reqs = (Request(0, 2 * alpha + eps), Request(1, 1.0))
    return AdversarialCase("tradeoff", Instance(space, ProblemKind.TSP, reqs),
                           PredictionSet(requests=reqs), alpha, eps, "smart-trust", 1 + alpha)


def tradeoff_robust(alpha: float, eps: float) -> AdversarialCase:
    """Only (0, 2a+e) arrives while the prediction still announces (1, 1)."""
    first = tradeoff(alpha, eps)
    reqs = (Request(0, 2 * alpha + eps),)
    return AdversarialCase("tradeoff-robust", Instance(first.instance.space, ProblemKind.TSP, reqs),
                           first.prediction, alpha, eps, "smart-trust", 1 / alpha - 1)


def smarttrust_witness(alpha: float, eps: float) -> AdversarialCase:
    """Actual (a/4 + e, a/4) on the real line; predicted (-1/2, 1/2), so C_hat = 1."""
    if not alpha > 0 or not eps > 0:
        raise ValueError("smarttrust needs alpha > 0 and eps > 0")
    space = line_space([alpha / 4 + eps, -0.5], origin_coord=0.0)
    actual = (Request(0, alpha / 4),)
    predicted = (Request(1, 0.5),)
    return AdversarialCase("smarttrust", Instance(space, ProblemKind.TSP, actual),
                           PredictionSet(requests=predicted), alpha, eps, "smart-trust", 2 + 2 / alpha)


def algohl_witness(alpha: float, eps: float) -> AdversarialCase:
    """Single half-line request (a/3, a/3 + e) with C_hat = 1."""
    if not 0 < alpha <= 0.5:
        raise ValueError(f"algohl needs alpha in (0, 1/2], got {alpha}")
    if not eps > 0:
        raise ValueError("algohl needs eps > 0")
    space = half_line_space([alpha / 3])
    actual = (Request(0, alpha / 3 + eps),)
    return AdversarialCase("algohl", Instance(space, ProblemKind.TSP, actual),
                           PredictionSet(makespan_prediction=1.0), alpha, eps, "algohl", 3 / (2 * alpha))


def adversarial(kind: str, alpha: float, eps: float) -> AdversarialCase:
    if kind == "tradeoff":
        return tradeoff(alpha, eps)
    if kind == "tradeoff-robust":
        return tradeoff_robust(alpha, eps)
    if kind == "smarttrust":
        return smarttrust_witness(alpha, eps)
    if kind == "algohl":
        return algohl_witness(alpha, eps)
    raise ValueError(f"Unknown adversarial kind: {kind} (choose from {', '.join(ADVERSARIAL_KINDS)})")
