"""
Instance Model
Actual and predicted request sets for the online TSP and Dial-a-Ride,
including the half-line scalar makespan prediction.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

from services.metric_space import MetricSpace


class ProblemKind(str, Enum):
    TSP = "tsp"
    DARP = "darp"


@dataclass(frozen=True, order=True)
class Request:
    """A point to visit, revealed at its release date."""

    loc: int
    release: float

    def __post_init__(self):
        if self.release < 0:
            raise ValueError(f"Release date must be non-negative, got {self.release}")

    @property
    def entry(self) -> int:
        return self.loc

    @property
    def exit(self) -> int:
        return self.loc

    def to_dict(self) -> dict:
        return {"loc": self.loc, "release": self.release}


@dataclass(frozen=True, order=True)
class RideRequest:
    """A unit-capacity ride from pickup to dropoff."""

    pickup: int
    dropoff: int
    release: float

    def __post_init__(self):
        if self.release < 0:
            raise ValueError(f"Release date must be non-negative, got {self.release}")

    @property
    def entry(self) -> int:
        return self.pickup

    @property
    def exit(self) -> int:
        return self.dropoff

    def to_dict(self) -> dict:
        return {"pickup": self.pickup, "dropoff": self.dropoff, "release": self.release}


AnyRequest = Union[Request, RideRequest]


def same_request(a: AnyRequest, b: AnyRequest) -> bool:
    """Identity: same kind, same location(s), bit-identical release."""
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class Instance:
    space: MetricSpace
    kind: ProblemKind
    requests: Tuple[AnyRequest, ...]

    def __post_init__(self):
        expected = Request if self.kind == ProblemKind.TSP else RideRequest
        for req in self.requests:
            if not isinstance(req, expected):
                raise ValueError(f"{self.kind.value} instance cannot hold {type(req).__name__}")
            for point in _points(req):
                if not self.space.contains(point):
                    raise ValueError(f"Request {req} references unknown PointId {point}")

    @property
    def origin(self) -> int:
        return self.space.origin

    def __len__(self) -> int:
        return len(self.requests)


@dataclass(frozen=True)
class PredictionSet:
    """Either predicted requests or a scalar makespan prediction (half-line)."""

    requests: Optional[Tuple[AnyRequest, ...]] = None
    makespan_prediction: Optional[float] = None

    def __post_init__(self):
        if (self.requests is None) == (self.makespan_prediction is None):
            raise ValueError("Prediction must carry exactly one of requests or makespan_prediction")
        if self.makespan_prediction is not None and self.makespan_prediction < 0:
            raise ValueError("Predicted makespan must be non-negative")

    @property
    def is_scalar(self) -> bool:
        return self.makespan_prediction is not None

    def validate_for(self, instance: Instance) -> None:
        if self.is_scalar:
            if not instance.space.half_line:
                raise ValueError("Scalar makespan predictions are only legal on the half-line")
            return
        Instance(instance.space, instance.kind, self.requests)

    def as_list(self) -> List[AnyRequest]:
        if self.is_scalar:
            raise ValueError("Scalar prediction has no request set; use the half-line error path")
        return list(self.requests)


def _points(req: AnyRequest) -> Tuple[int, ...]:
    if isinstance(req, RideRequest):
        return (req.pickup, req.dropoff)
    return (req.loc,)


def split_requests(actual: Sequence[AnyRequest], predicted: Sequence[AnyRequest]):
    """Multiset split into (unexpected, absent, correct), duplicates matched one-to-one.

    Both inputs keep their relative order in the outputs.
    """
    pool = defaultdict(list)
    for idx, req in enumerate(predicted):
        pool[req].append(idx)
    matched_pred = set()
    unexpected: List[AnyRequest] = []
    correct: List[AnyRequest] = []
    for req in actual:
        slots = pool.get(req)
        if slots:
            matched_pred.add(slots.pop(0))
            correct.append(req)
        else:
            unexpected.append(req)
    absent = [req for idx, req in enumerate(predicted) if idx not in matched_pred]
    return unexpected, absent, correct


def split_errors(actual: Instance, predicted: PredictionSet):
    """Unexpected actual, absent predicted, and correctly predicted requests."""
    return split_requests(actual.requests, predicted.as_list())


def match_predictions(actual: Sequence[AnyRequest], predicted: Sequence[AnyRequest]) -> List[Optional[int]]:
    """For each actual request, the predicted index it is matched to (lowest first) or None."""
    pool = defaultdict(list)
    for idx, req in enumerate(predicted):
        pool[req].append(idx)
    out: List[Optional[int]] = []
    for req in actual:
        slots = pool.get(req)
        out.append(slots.pop(0) if slots else None)
    return out


def max_transport_distance(space: MetricSpace, actual: Sequence[RideRequest],
                           predicted: Sequence[RideRequest]) -> float:
    """Longest ride in the correctly predicted part; 0 when nothing was predicted right."""
    _, _, correct = split_requests(actual, predicted)
    return max((space.d(r.pickup, r.dropoff) for r in correct), default=0.0)
