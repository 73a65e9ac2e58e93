"""Convergence-rate measurement: error sequences and (K, kappa) fits.

The model is ||x_{k+1} - x*|| <= kappa ||x_k - x*||^K. A log-log least-squares
fit over consecutive error pairs recovers K as the slope and kappa as
exp(intercept); kappa's value depends on the distance convention (ambient
chordal / Grassmann projector here), K does not.
"""

from dataclasses import dataclass
from math import exp, log, sqrt

import numpy as np

from .errors import InsufficientData, ManifoldMismatch
from .manifolds import Point, distance

DEFAULT_FLOOR = 1e-12
DEFAULT_CEIL = 1e-1


@dataclass(frozen=True)
class RateEstimate:
    K: float
    kappa: float
    window: tuple  # (first, last) error indices spanned by the fit
    fit_residual: float  # RMS of log-space regression residuals
    n_points: int  # number of consecutive pairs in the fit


def error_sequence(trace, truth) -> list:
    """Distances of trace points to the truth.

    With truth = None the final trace point stands in for the truth and the
    last two entries are dropped: the final error is an exact zero and the
    penultimate one is biased low, so both would contaminate a fit.
    """
    points = list(trace.points) if hasattr(trace, "points") else list(trace)
    if not points:
        raise ValueError("empty trace")
    if truth is None:
        truth = points[-1]
        points = points[:-2]
    elif isinstance(truth, Point) and truth.manifold != points[0].manifold:
        raise ManifoldMismatch("truth lives on a different manifold")
    return [distance(p, truth) for p in points]


def estimate_rate(errors, floor: float = DEFAULT_FLOOR,
                  ceil: float = DEFAULT_CEIL) -> RateEstimate:
    """Fit log e_{k+1} = K log e_k + log kappa over usable pairs.

    A pair is usable when both errors lie strictly inside (floor, ceil):
    below the floor 64-bit rounding has destroyed the power law, above the
    ceiling the behaviour is pre-asymptotic. Fewer than 3 usable pairs — or
    a fitted K below 0.5, which no convergent power law produces — raises
    InsufficientData.
    """
    errors = [float(e) for e in errors]
    if len(errors) < 4:
        raise InsufficientData("need at least 4 errors, got %d" % len(errors))
    if not (0 <= floor < ceil):
        raise ValueError("need 0 <= floor < ceil")
    xs, ys, idx = [], [], []
    for k, (a, b) in enumerate(zip(errors, errors[1:])):
        if floor < a < ceil and floor < b < ceil:
            xs.append(log(a))
            ys.append(log(b))
            idx.append(k)
    if len(xs) < 3:
        raise InsufficientData("only %d usable pairs in (%g, %g)"
                               % (len(xs), floor, ceil))
    xs = np.array(xs)
    ys = np.array(ys)
    dx = xs - xs.mean()
    K = float((dx * (ys - ys.mean())).sum() / (dx * dx).sum())
    c = float(ys.mean() - K * xs.mean())
    resid = ys - (K * xs + c)
    if K < 0.5:
        raise InsufficientData("fitted K=%.3f below 0.5; sequence is not a "
                               "convergent power law" % K)
    return RateEstimate(K=K, kappa=exp(c), window=(idx[0], idx[-1] + 1),
                        fit_residual=float(sqrt(float(np.mean(resid * resid)))),
                        n_points=len(xs))
