"""One-dimensional comparator-adaptive scale learner.

Coin betting with an online-Newton-step betting fraction: the learner keeps a
wealth (initially 1), bets a fraction of it each round, and translates wealth
growth into regret that scales with the magnitude of the best fixed bet.  Fed
scalar gradients g with |g| <= lipschitz_bound, it guarantees (empirically
checked) regret against any v in its segment of order
1 + |v| * lipschitz_bound * sqrt(T) up to log factors, without knowing v.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ._accel import maybe_njit

# ONS step constant for the log-loss -ln(1 - beta * g), beta in [-1/2, 1/2].
ONS_RATE = 2.0 / (2.0 - math.log(3.0))


@dataclass(frozen=True)
class Segment:
    """A closed interval of allowed plays; endpoints may be infinite."""

    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("segment must satisfy low < high")

    @classmethod
    def reals(cls):
        return cls(-math.inf, math.inf)

    @classmethod
    def nonneg(cls, floor: float = 0.0):
        return cls(floor, math.inf)

    @classmethod
    def closed(cls, low: float, high: float):
        return cls(low, high)

    def clip(self, v: float) -> float:
        return min(max(v, self.low), self.high)


@maybe_njit
def _scale_step(wealth, wealth_comp, fraction, grad_sq, v_unclipped,
                g, lipschitz_bound, low, high):
    """One coin-betting update; returns the new (wealth, comp, fraction, grad_sq, clipped).

    Kahan-compensated wealth accumulation; the betting-fraction bound
    |beta| <= 1/2 together with |g|/L <= 1 keeps wealth strictly positive.
    """
    clipped = 0
    if g > lipschitz_bound:
        g = lipschitz_bound
        clipped = 1
    elif g < -lipschitz_bound:
        g = -lipschitz_bound
        clipped = 1
    # Constrained-domain correction: a gradient pointing further out of the
    # segment at a clipped boundary is replaced by zero.
    if v_unclipped < low and g > 0.0:
        g = 0.0
    elif v_unclipped > high and g < 0.0:
        g = 0.0
    ghat = g / lipschitz_bound
    # wealth <- wealth - v_unclipped * ghat, compensated
    y = -v_unclipped * ghat - wealth_comp
    t = wealth + y
    wealth_comp = (t - wealth) - y
    wealth = t
    z = ghat / (1.0 - fraction * ghat)
    grad_sq = grad_sq + z * z
    fraction = fraction - ONS_RATE * z / grad_sq
    if fraction > 0.5:
        fraction = 0.5
    elif fraction < -0.5:
        fraction = -0.5
    return wealth, wealth_comp, fraction, grad_sq, clipped


class ScaleLearner:
    """Coin-betting learner of the comparator's scale over a segment.

    Call :meth:`predict` then :meth:`update` once per round, strictly
    alternating.  Gradients larger than the declared bound are clipped and
    counted in ``lipschitz_violations``; a nonzero count at the end of a run
    voids the regret guarantee and the harness fails such runs.
    """

    def __init__(self, lipschitz_bound: float, segment: Segment):
        if not lipschitz_bound > 0:
            raise ValueError("lipschitz_bound must be positive")
        self.lipschitz_bound = float(lipschitz_bound)
        self.segment = segment
        self.wealth = 1.0
        self._wealth_comp = 0.0
        self.fraction = 0.0
        self._grad_sq = 1.0
        self.round = 0
        self.lipschitz_violations = 0
        self._pending = None  # (v_unclipped, v_played)

    def predict(self) -> float:
        if self._pending is not None:
            raise RuntimeError("predict called twice without update")
        v_unclipped = self.fraction * self.wealth
        v_played = self.segment.clip(v_unclipped)
        self._pending = (v_unclipped, v_played)
        return v_played

    def update(self, g: float) -> None:
        if self._pending is None:
            raise RuntimeError("update called before predict")
        v_unclipped, _ = self._pending
        self._pending = None
        (self.wealth, self._wealth_comp, self.fraction,
         self._grad_sq, clipped) = _scale_step(
            self.wealth, self._wealth_comp, self.fraction, self._grad_sq,
            v_unclipped, float(g), self.lipschitz_bound,
            self.segment.low, self.segment.high)
        self.lipschitz_violations += clipped
        self.round += 1


def scale_regret(trace, comparator: float) -> float:
    """sum_t (v_t - comparator) * g_t with compensated summation."""
    return math.fsum((v - comparator) * g for v, g in trace)
