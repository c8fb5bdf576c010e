"""Black-box reductions that learn the comparator's scale and direction separately.

Three constructions share one round-based policy contract
(``begin_round() -> play``, ``end_round(loss_value)``, ``trace()``):

* :func:`full_info_round` -- the full-information reduction, used for the
  regret-decomposition identity and as plumbing for reference baselines.
* :class:`LinearBanditPolicy` -- linear bandits: a coin-betting scale learner
  composed with the Dikin-ellipsoid direction learner.  The scalar bandit
  loss divided by the played scale recovers exact full information for the
  scale learner.
* :class:`ConvexBanditPolicy` -- convex bandits: sphere-perturbed plays, a
  one-point gradient estimate of the smoothed loss, and a regularized
  surrogate loss fed to the scale learner; direction learned by projected
  OGD on gradient estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .direction import BarrierDirectionLearner, OgdDirectionLearner
from .envs import Environment
from .geometry import ConvexBody, membership, sample_sphere
from .scale import ScaleLearner, Segment, scale_regret

GHAT_TOL = 1e-6
SURROGATE_TOL = 1e-6
FEASIBILITY_TOL = 1e-9

CONVEX_MODES = ("lipschitz_unconstrained", "smooth_unconstrained", "lipschitz_constrained")


@dataclass
class RoundRecord:
    """Per-round trace entry."""

    t: int
    v: float
    z: np.ndarray
    w: np.ndarray
    loss_value: float
    s: np.ndarray | None = None
    ghat: np.ndarray | None = None
    surrogate_grad: float | None = None


def full_info_round(scale: ScaleLearner, direction_z, gradient):
    """One round of the full-information reduction.

    Plays w = v * z, feeds <z, g> to the scale learner, and returns
    (w, scale_feedback, gradient); the caller forwards the gradient to its
    direction learner.
    """
    z = np.asarray(direction_z, dtype=float)
    g = np.asarray(gradient, dtype=float)
    v = scale.predict()
    w = v * z
    scale_feedback = float(z @ g)
    scale.update(scale_feedback)
    return w, scale_feedback, g


def decomposition_terms(vs, zs, gs, u):
    """Regret pieces of the scale/direction split for a played sequence.

    Returns (total, scale_part, direction_part) where
    total = sum <v z - u, g>, scale_part = sum (v - ||u||) <z, g>, and
    direction_part = ||u|| * sum <z - u/||u||, g>; total equals their sum
    exactly (the direction part is zero for u = 0).
    """
    u = np.asarray(u, dtype=float)
    norm_u = float(np.linalg.norm(u))
    total = math.fsum(float((v * z - u) @ g) for v, z, g in zip(vs, zs, gs))
    scale_part = math.fsum((v - norm_u) * float(z @ g) for v, z, g in zip(vs, zs, gs))
    if norm_u == 0.0:
        direction_part = 0.0
    else:
        uhat = u / norm_u
        direction_part = norm_u * math.fsum(float((z - uhat) @ g) for z, g in zip(zs, gs))
    return total, scale_part, direction_part


class LinearBanditPolicy:
    """Comparator-adaptive linear bandit (scale x direction reduction).

    Unconstrained (body=None): direction domain is the unit ball and the
    scale segment is the nonnegative half-line.  Constrained: direction
    domain is the body and the scale segment is [floor, 1], which keeps every
    play inside the body.  The played scale is floored at 1/T so the bandit
    loss value can always be divided back into full information.
    """

    def __init__(self, d, T, L, body: ConvexBody | None = None, seed: int = 0,
                 keep_trace: bool = True):
        self.d, self.T, self.L = int(d), int(T), float(L)
        self.constrained = body is not None
        self.body = body if body is not None else ConvexBody.ball(d)
        self.v_floor = 1.0 / max(self.T, 1)
        segment = (Segment.closed(self.v_floor, 1.0) if self.constrained
                   else Segment.nonneg(self.v_floor))
        self.scale = ScaleLearner(self.L, segment)
        self.barrier = BarrierDirectionLearner(self.body, max(self.T, 1), self.L)
        self._rng = rng_mod.stream(seed, "barrier-exploration")
        self.keep_trace = keep_trace
        self._trace: list[RoundRecord] = []
        self._pending = None
        self.t = 0
        self.feasibility_violations = 0

    def begin_round(self):
        if self._pending is not None:
            raise RuntimeError("begin_round called twice without end_round")
        v = self.scale.predict()
        z, token = self.barrier.predict(self._rng)
        w = v * z
        if self.constrained and not membership(self.body, w, FEASIBILITY_TOL):
            raise RuntimeError("constrained linear bandit produced an infeasible play")
        self._pending = (v, z, token, w)
        return w

    def end_round(self, loss_value):
        if self._pending is None:
            raise RuntimeError("end_round called before begin_round")
        v, z, token, w = self._pending
        self._pending = None
        loss_value = float(loss_value)
        if not math.isfinite(loss_value):
            raise RuntimeError("loss oracle returned a non-finite value")
        if v < self.v_floor - 1e-15:
            raise RuntimeError("played scale fell below the configured floor")
        recovered = loss_value / v
        self.scale.update(recovered)
        self.barrier.update(recovered, token)
        if self.keep_trace:
            self._trace.append(RoundRecord(self.t, v, z, w, loss_value))
        self.t += 1

    def trace(self):
        return self._trace

    def violation_counters(self):
        return {"lipschitz": self.scale.lipschitz_violations + self.barrier.lipschitz_violations,
                "feasibility": self.feasibility_violations}


@dataclass(frozen=True)
class ConvexBanditConfig:
    """Parameters of the convex-bandit reduction, with per-mode presets.

    ``delta`` is the exploration radius factor, ``alpha`` the domain
    shrinkage, ``eta`` the direction learner's step size, ``v_floor`` /
    ``v_cap`` the segment bounds handed to the scale learner.
    """

    mode: str
    d: int
    T: int
    L: float
    delta: float
    alpha: float
    eta: float
    v_floor: float
    beta: float | None = None
    body: ConvexBody | None = None
    v_cap: float | None = None

    def __post_init__(self):
        if self.mode not in CONVEX_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if self.mode == "smooth_unconstrained" and self.beta is None:
            raise ValueError("smooth mode requires a smoothness bound")
        if self.mode == "lipschitz_constrained" and self.body is None:
            raise ValueError("constrained mode requires a body")

    @classmethod
    def preset(cls, mode, d, T, L, beta=None, body=None):
        """Paper parameter presets per mode; eta = sqrt(delta^2 / (4 (dL)^2 T))."""
        d, T, L = int(d), int(T), float(L)
        Teff = max(T, 1)
        if mode == "lipschitz_unconstrained":
            delta = min(1.0, math.sqrt(d) * Teff ** -0.25)
            alpha, v_cap, body = 0.0, None, None
        elif mode == "smooth_unconstrained":
            delta = min(1.0, (d * L) ** (1.0 / 3.0) * Teff ** (-1.0 / 6.0))
            alpha, v_cap, body = 0.0, 1.0 / delta**3, None
        elif mode == "lipschitz_constrained":
            delta = min(1.0, math.sqrt(d) * Teff ** -0.25)
            alpha, v_cap = delta, 1.0
        else:
            raise ValueError(f"unknown mode {mode!r}")
        eta = math.sqrt(delta**2 / (4.0 * (d * L) ** 2 * Teff))
        return cls(mode=mode, d=d, T=T, L=L, delta=delta, alpha=alpha, eta=eta,
                   v_floor=1.0 / Teff, beta=beta, body=body, v_cap=v_cap)

    @property
    def direction_body(self) -> ConvexBody:
        return self.body if self.body is not None else ConvexBody.ball(self.d)

    @property
    def segment(self) -> Segment:
        if self.v_cap is None:
            return Segment.nonneg(self.v_floor)
        return Segment.closed(self.v_floor, self.v_cap)

    @property
    def scale_bound(self) -> float:
        """Bound on the surrogate gradients fed to the scale learner."""
        if self.mode == "smooth_unconstrained":
            return self.beta * (self.d * self.L + 2.0) / self.delta
        return 2.0 * self.d * self.L / self.delta + 2.0 * self.delta * self.L

    @property
    def ghat_bound(self) -> float:
        return self.d * self.L * (1.0 - self.alpha + self.delta) / self.delta

    def derived(self):
        return {"delta": self.delta, "alpha": self.alpha, "eta": self.eta,
                "v_floor": self.v_floor, "v_cap": self.v_cap,
                "scale_bound": self.scale_bound, "ghat_bound": self.ghat_bound}


class ConvexBanditPolicy:
    """Comparator-adaptive convex bandit.

    Per round: play w = v (z + delta * s) with s uniform on the sphere, form
    the one-point estimate ghat = (d / (v delta)) * loss * s, feed the
    surrogate subgradient <z, ghat> + regularizer term to the scale learner
    and ghat to the OGD direction learner.  The estimate-norm and
    surrogate-magnitude bounds are asserted every round.
    """

    def __init__(self, config: ConvexBanditConfig, seed: int = 0,
                 keep_trace: bool = True):
        self.config = config
        self.scale = ScaleLearner(config.scale_bound, config.segment)
        self.ogd = OgdDirectionLearner(config.direction_body, config.alpha, config.eta)
        self._rng = rng_mod.stream(seed, "sphere-exploration")
        self.keep_trace = keep_trace
        self._trace: list[RoundRecord] = []
        self._pending = None
        self.t = 0

    def begin_round(self):
        if self._pending is not None:
            raise RuntimeError("begin_round called twice without end_round")
        cfg = self.config
        v = self.scale.predict()
        s = sample_sphere(cfg.d, self._rng)
        z = self.ogd.z
        w = v * (z + cfg.delta * s)
        if cfg.mode == "lipschitz_constrained" and not membership(cfg.body, w, FEASIBILITY_TOL):
            raise RuntimeError("constrained convex bandit produced an infeasible play")
        self._pending = (v, z.copy(), s, w)
        return w

    def end_round(self, loss_value):
        if self._pending is None:
            raise RuntimeError("end_round called before begin_round")
        v, z, s, w = self._pending
        self._pending = None
        cfg = self.config
        loss_value = float(loss_value)
        if not math.isfinite(loss_value):
            raise RuntimeError("loss oracle returned a non-finite value")
        ghat = (cfg.d / (v * cfg.delta)) * loss_value * s
        ghat_norm = float(np.linalg.norm(ghat))
        if ghat_norm > cfg.ghat_bound + GHAT_TOL:
            raise RuntimeError(
                f"gradient estimate norm {ghat_norm:.6g} exceeds bound {cfg.ghat_bound:.6g}")
        inner = float(z @ ghat)
        if cfg.mode == "smooth_unconstrained":
            surrogate = inner + 2.0 * cfg.beta * cfg.delta**2 * v
        else:
            # subgradient of 2*delta*L*|v|; v > 0 always (floored segment),
            # tie-break 0 at v = 0
            surrogate = inner + 2.0 * cfg.delta * cfg.L * (math.copysign(1.0, v) if v != 0 else 0.0)
        if abs(surrogate) > cfg.scale_bound + SURROGATE_TOL:
            raise RuntimeError(
                f"surrogate gradient {surrogate:.6g} exceeds bound {cfg.scale_bound:.6g}")
        self.scale.update(surrogate)
        self.ogd.step(ghat)
        if self.keep_trace:
            self._trace.append(RoundRecord(self.t, v, z, w, loss_value,
                                           s=s, ghat=ghat, surrogate_grad=surrogate))
        self.t += 1

    def trace(self):
        return self._trace

    def violation_counters(self):
        return {"lipschitz": self.scale.lipschitz_violations, "feasibility": 0}


def run_policy(policy, env: Environment, T: int, comparators=None):
    """Drive a policy for T rounds against an environment.

    Returns (trace, ledger) where the ledger holds the learner's cumulative
    loss, per-comparator totals and regrets (compensated summation), and any
    violation counters the policy tracked.  Partial traces survive aborts.
    """
    losses = []
    error = None
    try:
        for t in range(T):
            w = policy.begin_round()
            value = env.eval(t, w)
            policy.end_round(value)
            losses.append(value)
    except Exception as exc:  # persist partial trace before re-raising upstream
        error = exc
    learner_total = math.fsum(losses)
    ledger = {
        "rounds": len(losses),
        "learner_total": learner_total,
        "comparators": [],
        "violations": dict(getattr(policy, "violation_counters", dict)() or {}),
        "error": repr(error) if error is not None else None,
    }
    for u in (comparators or []):
        u = np.asarray(u, dtype=float)
        total_u = env.total_loss(u) if len(losses) == env.T else math.fsum(
            env.loss(t, u) for t in range(len(losses)))
        ledger["comparators"].append({
            "u": [float(x) for x in u],
            "norm": float(np.linalg.norm(u)),
            "total_loss": total_u,
            "regret": learner_total - total_u,
        })
    if error is not None:
        raise RunAborted(ledger, policy.trace()) from error
    return policy.trace(), ledger


class RunAborted(RuntimeError):
    """A run failed mid-way; carries the partial ledger and trace."""

    def __init__(self, ledger, trace):
        super().__init__(ledger.get("error"))
        self.ledger = ledger
        self.partial_trace = trace
