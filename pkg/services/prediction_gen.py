"""
Prediction Generator
Seeded synthetic instances and predictions for the experiment settings:
(i) release and location noise, (ii) location noise only, (iii) partial
predictions.

Gaussian draws are inverse-CDF transforms (scipy.stats.norm.ppf) of
uniforms from numpy's PCG64 generator seeded with the 64-bit seed. Each
request consumes its release draw first, then one location draw per
endpoint, in request order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.stats import norm

from services.instance_model import AnyRequest, Instance, PredictionSet, ProblemKind, Request, RideRequest
from services.metric_space import MetricSpace
from services.tour_oracle import optimal_makespan
from utils.logger import get_logger

logger = get_logger(__name__)

NOISE_SETTINGS = ("release+location", "location", "partial")


@dataclass(frozen=True)
class NoiseSpec:
    sigma_release: float = 0.0
    sigma_location: float = 0.0
    fraction: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.sigma_release < 0 or self.sigma_location < 0:
            raise ValueError("Noise standard deviations must be non-negative")
        if self.fraction is not None and not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"Prediction fraction must lie in [0, 1], got {self.fraction}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("Seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "sigma_release": self.sigma_release,
            "sigma_location": self.sigma_location,
            "fraction": self.fraction,
            "seed": self.seed,
        }


def noise_preset(setting: str, value: float, seed: int) -> NoiseSpec:
    """NoiseSpec for one sweep value of a named experiment setting."""
    if setting == "release+location":
        return NoiseSpec(sigma_release=value, sigma_location=value, seed=seed)
    if setting == "location":
        return NoiseSpec(sigma_location=value, seed=seed)
    if setting == "partial":
        return NoiseSpec(fraction=value, seed=seed)
    raise ValueError(f"Unknown noise setting: {setting} (choose from {', '.join(NOISE_SETTINGS)})")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def gaussian(rng: np.random.Generator, sigma: float) -> float:
    """One N(0, sigma^2) draw; always consumes a uniform so streams stay aligned."""
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    return float(sigma * norm.ppf(u)) if sigma > 0 else 0.0


def displace(space: MetricSpace, point: int, draw: float) -> int:
    """Point whose distance from ``point`` is closest to ``|draw|``; lowest id on ties."""
    if draw == 0:
        return int(point)
    gap = np.abs(space.row(point) - abs(draw))
    return int(np.argmin(gap))


def perturb(actual: Instance, spec: NoiseSpec) -> PredictionSet:
    """Noisy copy of every actual request."""
    rng = make_rng(spec.seed)
    space = actual.space
    out: List[AnyRequest] = []
    for req in actual.requests:
        release = max(0.0, req.release + gaussian(rng, spec.sigma_release))
        if isinstance(req, RideRequest):
            pickup = displace(space, req.pickup, gaussian(rng, spec.sigma_location))
            dropoff = displace(space, req.dropoff, gaussian(rng, spec.sigma_location))
            out.append(RideRequest(pickup, dropoff, release))
        else:
            out.append(Request(displace(space, req.loc, gaussian(rng, spec.sigma_location)), release))
    return PredictionSet(requests=tuple(out))


def partial(actual: Instance, fraction: float, seed: int) -> PredictionSet:
    """Uniform subset of ceil(fraction * |R|) actual requests, in instance order."""
    NoiseSpec(fraction=fraction, seed=seed)
    n = len(actual.requests)
    size = min(n, math.ceil(fraction * n - 1e-9))
    if size <= 0:
        return PredictionSet(requests=())
    picked = sorted(make_rng(seed).choice(n, size=size, replace=False).tolist())
    return PredictionSet(requests=tuple(actual.requests[i] for i in picked))


def predict(actual: Instance, spec: NoiseSpec) -> PredictionSet:
    """Partial prediction when ``spec.fraction`` is set, noisy copy otherwise."""
    if spec.fraction is not None:
        return partial(actual, spec.fraction, spec.seed)
    return perturb(actual, spec)


def scalar_prediction(actual: Instance, delta: float) -> PredictionSet:
    """Half-line makespan prediction C* + delta, clipped at zero."""
    if not actual.space.half_line:
        raise ValueError("Scalar makespan predictions are only legal on the half-line")
    return PredictionSet(makespan_prediction=max(0.0, optimal_makespan(actual) + delta))


def _check_shape(count: int, per_instance: int, release_horizon: float) -> None:
    if count < 0 or per_instance < 0:
        raise ValueError("Instance count and size must be non-negative")
    if release_horizon < 0:
        raise ValueError("Release horizon must be non-negative")


def synth_instances(space: MetricSpace, count: int, per_instance: int, release_horizon: float,
                    seed: int) -> List[Instance]:
    """Uniform locations over all points and uniform releases in [0, horizon]."""
    _check_shape(count, per_instance, release_horizon)
    rng = make_rng(seed)
    instances = []
    for _ in range(count):
        locs = rng.integers(0, space.n, size=per_instance)
        releases = rng.uniform(0.0, release_horizon, size=per_instance) if release_horizon > 0 \
            else np.zeros(per_instance)
        reqs = tuple(Request(int(x), float(r)) for x, r in zip(locs, releases))
        instances.append(Instance(space, ProblemKind.TSP, reqs))
    logger.debug("Generated %s TSP instances of %s requests seed=%s", count, per_instance, seed)
    return instances


def synth_rides(space: MetricSpace, count: int, per_instance: int, release_horizon: float,
                seed: int) -> List[Instance]:
    """Rides with distinct uniform pickup and dropoff points."""
    _check_shape(count, per_instance, release_horizon)
    if space.n < 2:
        raise ValueError("Rides need at least two points")
    rng = make_rng(seed)
    instances = []
    for _ in range(count):
        reqs = []
        for _ in range(per_instance):
            pickup = int(rng.integers(0, space.n))
            dropoff = int(rng.integers(0, space.n - 1))
            if dropoff >= pickup:
                dropoff += 1
            release = float(rng.uniform(0.0, release_horizon)) if release_horizon > 0 else 0.0
            reqs.append(RideRequest(pickup, dropoff, release))
        instances.append(Instance(space, ProblemKind.DARP, tuple(reqs)))
    logger.debug("Generated %s ride instances of %s rides seed=%s", count, per_instance, seed)
    return instances


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed for one (instance, sweep point) cell of an experiment."""
    entropy = [int(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])
