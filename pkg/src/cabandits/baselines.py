"""Reference baselines: worst-case-tuned one-point bandit gradient descent and
full-information projected OGD with oracle gradients.

Both consume the identical loss schedules as the policies under test (same
seed streams), so regret comparisons are coupled.
"""
from __future__ import annotations

import math

import numpy as np

from . import rng as rng_mod
from .envs import Environment
from .geometry import ConvexBody, project, sample_sphere
from .reductions import RoundRecord


class FlaxmanPolicy:
    """One-point bandit gradient descent over a body, worst-case tuning.

    Exploration radius T^{-1/4} and step size sized for the worst-case
    comparator norm max_{u in W} ||u|| = 1; no comparator adaptivity.
    Plays w = x + delta * inner_radius * s which stays inside the body since
    inner_radius * B is contained in it.
    """

    def __init__(self, d, T, L, body: ConvexBody | None = None, seed: int = 0,
                 keep_trace: bool = True):
        self.d, self.T, self.L = int(d), int(T), float(L)
        self.body = body if body is not None else ConvexBody.ball(d)
        self.delta = min(1.0, self.T ** -0.25)
        self.step = self.delta / (self.d * self.L * math.sqrt(self.T))
        self.x = np.zeros(self.d)
        self._rng = rng_mod.stream(seed, "baseline-exploration")
        self.keep_trace = keep_trace
        self._trace: list[RoundRecord] = []
        self._pending = None
        self.t = 0

    def tuning(self):
        return {"delta": self.delta, "step": self.step}

    def begin_round(self):
        s = sample_sphere(self.d, self._rng)
        w = self.x + self.delta * self.body.inner_radius * s
        self._pending = (s, w)
        return w

    def end_round(self, loss_value):
        s, w = self._pending
        self._pending = None
        ghat = (self.d / (self.delta * self.body.inner_radius)) * float(loss_value) * s
        self.x = project(self.body, 1.0 - self.delta, self.x - self.step * ghat)
        if self.keep_trace:
            self._trace.append(RoundRecord(self.t, 1.0, self.x, w, float(loss_value), s=s,
                                           ghat=ghat))
        self.t += 1

    def trace(self):
        return self._trace

    def violation_counters(self):
        return {"lipschitz": 0, "feasibility": 0}


class FullInfoOgdPolicy:
    """Projected OGD with analytic gradients (the full-information reference).

    Holds an unmetered handle on the environment to read true gradients; the
    scalar loss passed to end_round is ignored.
    """

    def __init__(self, env: Environment, body: ConvexBody | None = None,
                 keep_trace: bool = True):
        self.env = env
        self.d, self.T, self.L = env.d, env.T, env.L
        self.body = body if body is not None else ConvexBody.ball(env.d)
        self.step = 1.0 / (self.L * math.sqrt(self.T))
        self.x = np.zeros(self.d)
        self.keep_trace = keep_trace
        self._trace: list[RoundRecord] = []
        self.t = 0

    def begin_round(self):
        return self.x.copy()

    def end_round(self, loss_value):
        g = self.env.grad(self.t, self.x)
        w = self.x.copy()
        self.x = project(self.body, 1.0, self.x - self.step * g)
        if self.keep_trace:
            self._trace.append(RoundRecord(self.t, 1.0, w, w, float(loss_value)))
        self.t += 1

    def trace(self):
        return self._trace

    def violation_counters(self):
        return {"lipschitz": 0, "feasibility": 0}
