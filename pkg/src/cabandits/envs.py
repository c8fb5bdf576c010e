"""Loss environments (oblivious adversaries) and the offline comparator oracle.

Every loss family is shifted so that the loss of the origin is exactly zero,
and every schedule is fully determined by (kind, seed) before play begins.
Policies query each round's loss exactly once through the metered handle;
post-hoc analysis (comparator totals, audits) uses unmetered evaluation.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .geometry import ConvexBody, project, sample_sphere

FAMILIES = ("linear", "abs_linear", "hinge", "logistic", "quadratic")
SCHEDULES = ("fixed", "rotating", "stochastic", "adaptive_sign")


class ProtocolViolation(RuntimeError):
    """A policy evaluated a round's loss more than once."""


def _unit(v):
    return v / np.linalg.norm(v)


def _rotation_apply(P, angle):
    """Rotate rows of P in the (0, 1) coordinate plane by t*angle per row t."""
    T = P.shape[0]
    t = np.arange(T)
    c, s = np.cos(t * angle), np.sin(t * angle)
    out = P.copy()
    if P.shape[1] >= 2:
        out[:, 0] = c * P[:, 0] - s * P[:, 1]
        out[:, 1] = s * P[:, 0] + c * P[:, 1]
    else:
        out[:, 0] = np.where(np.cos(t * angle) >= 0, P[:, 0], -P[:, 0])
    return out


class Environment:
    """A T-round oblivious adversary over one loss family.

    Parameters come from a config mapping ``{family, schedule, d, T, L?,
    beta?, seed, ...}``; see :meth:`from_spec`.  ``L`` is the declared
    Lipschitz bound on the play region (radius ``play_radius`` for the
    quadratic family) and is what the reductions use to size their presets.
    """

    def __init__(self, family, schedule_kind, d, T, seed, L=None, period=64,
                 m_norm=0.5, play_radius=4.0):
        if family not in FAMILIES:
            raise ValueError(f"unknown loss family {family!r}")
        if schedule_kind not in SCHEDULES:
            raise ValueError(f"unknown schedule kind {schedule_kind!r}")
        if schedule_kind == "adaptive_sign" and family not in ("linear", "abs_linear"):
            raise ValueError("adaptive_sign schedules require a linear-type family")
        self.family = family
        self.schedule_kind = schedule_kind
        self.d = int(d)
        self.T = int(T)
        self.seed = int(seed)
        self.period = int(period)
        self.m_norm = float(m_norm)
        self.play_radius = float(play_radius)
        gen = rng_mod.stream(seed, "environment")
        self._build_schedule(gen, L)
        self._queries = np.zeros(self.T, dtype=np.int64)

    # -- schedule construction -------------------------------------------------

    def _build_schedule(self, gen, L):
        d, T = self.d, self.T
        if self.family in ("linear", "abs_linear"):
            gnorm = 1.0 if L is None else float(L)
            if self.schedule_kind == "fixed":
                g = gnorm * _unit(gen.standard_normal(d))
                self.G = np.tile(g, (T, 1))
            elif self.schedule_kind == "rotating":
                g = gnorm * _unit(gen.standard_normal(d))
                self.G = _rotation_apply(np.tile(g, (T, 1)), 2 * np.pi / self.period)
            elif self.schedule_kind == "stochastic":
                V = gen.standard_normal((T, d))
                self.G = gnorm * V / np.linalg.norm(V, axis=1, keepdims=True)
            else:
                self.G = self._adaptive_sign_schedule(gen, gnorm)
            self.L = max(1.0, float(np.max(np.linalg.norm(self.G, axis=1), initial=0.0)))
            self.beta = None
        elif self.family in ("hinge", "logistic"):
            xnorm = 1.0 if L is None else float(L)
            if self.schedule_kind == "fixed":
                x = xnorm * _unit(gen.standard_normal(d))
                self.X = np.tile(x, (T, 1))
                self.y = np.ones(T)
            elif self.schedule_kind == "rotating":
                x = xnorm * _unit(gen.standard_normal(d))
                self.X = _rotation_apply(np.tile(x, (T, 1)), 2 * np.pi / self.period)
                self.y = np.ones(T)
            else:
                V = gen.standard_normal((T, d))
                self.X = xnorm * V / np.linalg.norm(V, axis=1, keepdims=True)
                self.y = np.where(gen.integers(2, size=T) == 1, 1.0, -1.0)
            self.L = max(1.0, float(np.max(np.linalg.norm(self.X, axis=1), initial=0.0)))
            self.beta = None
        else:  # quadratic
            if self.schedule_kind == "fixed":
                m = self.m_norm * _unit(gen.standard_normal(d))
                self.M = np.tile(m, (T, 1))
            elif self.schedule_kind == "rotating":
                m = self.m_norm * _unit(gen.standard_normal(d))
                self.M = _rotation_apply(np.tile(m, (T, 1)), 2 * np.pi / self.period)
            else:
                V = gen.standard_normal((T, d))
                self.M = self.m_norm * V / np.linalg.norm(V, axis=1, keepdims=True)
            m_max = float(np.max(np.linalg.norm(self.M, axis=1), initial=0.0))
            self.L = max(1.0, 2.0 * (self.play_radius + m_max))
            self.beta = 2.0

    def _adaptive_sign_schedule(self, gen, gnorm):
        """Loss vectors aimed at the running mean play of a pre-committed OGD
        baseline simulation (never at the policy under test), so the schedule
        stays oblivious."""
        d, T = self.d, self.T
        G = np.empty((T, d))
        x = np.zeros(d)
        mean_play = np.zeros(d)
        eta = 1.0 / (gnorm * math.sqrt(max(T, 1)))
        for t in range(T):
            mean_play = (t * mean_play + x) / (t + 1)
            n = np.linalg.norm(mean_play)
            direction = mean_play / n if n > 1e-12 else sample_sphere(d, gen)
            G[t] = gnorm * direction
            x = x - eta * G[t]
            nx = np.linalg.norm(x)
            if nx > 1.0:
                x = x / nx
        return G

    # -- evaluation ------------------------------------------------------------

    def _values(self, t_idx, W):
        """Per-round loss values; t_idx slices the schedule, W is (n, d)."""
        if self.family == "linear":
            return np.einsum("ij,ij->i", self.G[t_idx], W)
        if self.family == "abs_linear":
            return np.abs(np.einsum("ij,ij->i", self.G[t_idx], W))
        if self.family == "hinge":
            marg = self.y[t_idx] * np.einsum("ij,ij->i", self.X[t_idx], W)
            return np.maximum(0.0, 1.0 - marg) - 1.0
        if self.family == "logistic":
            marg = self.y[t_idx] * np.einsum("ij,ij->i", self.X[t_idx], W)
            return np.logaddexp(0.0, -marg) - math.log(2.0)
        diff = W - self.M[t_idx]
        return np.einsum("ij,ij->i", diff, diff) - np.einsum(
            "ij,ij->i", self.M[t_idx], self.M[t_idx])

    def loss(self, t, w):
        """Unmetered pointwise evaluation (analysis only)."""
        w = np.asarray(w, dtype=float)
        return float(self._values(np.array([t]), w[None, :])[0])

    def eval(self, t, w):
        """Metered evaluation: at most one call per round per run."""
        if self._queries[t] >= 1:
            raise ProtocolViolation(f"round {t} loss queried more than once")
        self._queries[t] += 1
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("query point must be finite")
        return self.loss(t, w)

    def query_counts(self):
        return self._queries.copy()

    def grad(self, t, w):
        """Analytic (sub)gradient at w; audits and full-information baselines
        only, never visible to bandit policies."""
        w = np.asarray(w, dtype=float)
        if self.family == "linear":
            return self.G[t].copy()
        if self.family == "abs_linear":
            return math.copysign(1.0, float(self.G[t] @ w)) * self.G[t]
        if self.family == "hinge":
            marg = self.y[t] * float(self.X[t] @ w)
            return -self.y[t] * self.X[t] if marg < 1.0 else np.zeros(self.d)
        if self.family == "logistic":
            marg = self.y[t] * float(self.X[t] @ w)
            sig = 1.0 / (1.0 + math.exp(min(marg, 700.0)))
            return -self.y[t] * sig * self.X[t]
        return 2.0 * (w - self.M[t])

    def total_loss(self, u):
        """sum_t loss_t(u), compensated."""
        u = np.asarray(u, dtype=float)
        vals = self._values(np.arange(self.T), np.broadcast_to(u, (self.T, self.d)))
        return math.fsum(vals.tolist())

    def mean_subgrad(self, u):
        """Subgradient of (1/T) sum_t loss_t at u, vectorized over rounds."""
        u = np.asarray(u, dtype=float)
        if self.family == "linear":
            return self.G.mean(axis=0)
        if self.family == "abs_linear":
            s = np.sign(self.G @ u)
            return (s[:, None] * self.G).mean(axis=0)
        if self.family == "hinge":
            marg = self.y * (self.X @ u)
            active = (marg < 1.0).astype(float)
            return (-(active * self.y)[:, None] * self.X).mean(axis=0)
        if self.family == "logistic":
            marg = self.y * (self.X @ u)
            sig = 1.0 / (1.0 + np.exp(np.minimum(marg, 700.0)))
            return (-(sig * self.y)[:, None] * self.X).mean(axis=0)
        return 2.0 * (u - self.M.mean(axis=0))

    # -- persistence -----------------------------------------------------------

    def _param_matrix(self):
        if self.family in ("linear", "abs_linear"):
            return self.G
        if self.family in ("hinge", "logistic"):
            return np.hstack([self.X, self.y[:, None]])
        return self.M

    @property
    def schedule_hash(self):
        h = hashlib.sha256()
        h.update(self.family.encode())
        h.update(np.ascontiguousarray(self._param_matrix()).tobytes())
        return h.hexdigest()

    def export_schedule(self, path):
        """Write the realized schedule as one CSV row per round."""
        P = self._param_matrix()
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t"] + [f"p{j}" for j in range(P.shape[1])])
            for t in range(self.T):
                writer.writerow([t] + [repr(float(v)) for v in P[t]])

    @classmethod
    def from_spec(cls, spec):
        sched = spec.get("schedule", "stochastic")
        if isinstance(sched, dict):
            kind = sched["kind"]
            period = sched.get("period", 64)
        else:
            kind, period = sched, 64
        return cls(spec["family"], kind, spec["d"], spec["T"], spec.get("seed", 0),
                   L=spec.get("L"), period=period, m_norm=spec.get("m_norm", 0.5),
                   play_radius=spec.get("play_radius", 4.0))

    def spec(self):
        return {"family": self.family,
                "schedule": {"kind": self.schedule_kind, "period": self.period},
                "d": self.d, "T": self.T, "seed": self.seed,
                "m_norm": self.m_norm, "play_radius": self.play_radius}


@dataclass
class ComparatorResult:
    point: np.ndarray
    total_loss: float
    agreed: bool


def _feasible_project(u, body, norm_target):
    for _ in range(8):
        if body is not None:
            u = project(body, 1.0, u)
        if norm_target is not None:
            n = np.linalg.norm(u)
            if n > norm_target:
                u = u * (norm_target / n) if n > 0 else u
    return u


def best_comparator(env: Environment, body: ConvexBody | None = None,
                    norm_target: float | None = None, restarts: int = 10,
                    iters: int = 10_000, seed: int = 0) -> ComparatorResult:
    """Minimize sum_t loss_t(u) over {||u|| <= norm_target} intersect body.

    Projected subgradient descent with random restarts and a 1/sqrt(k) step
    schedule on the per-round mean loss, followed by a short line-searched
    polish.  The objective is convex, so restarts are expected to agree;
    disagreement beyond 1e-6 relative flags the result.
    """
    if body is None and norm_target is None:
        raise ValueError("need a body or a norm target (unbounded problems diverge)")
    if env.T == 0 or (norm_target is not None and norm_target == 0.0):
        return ComparatorResult(np.zeros(env.d), 0.0, True)
    gen = rng_mod.stream(seed, "comparator-oracle")
    radius = norm_target if norm_target is not None else 1.0
    step_scale = radius / env.L
    results = []
    for _ in range(restarts):
        u = _feasible_project(radius * gen.standard_normal(env.d) / math.sqrt(env.d),
                              body, norm_target)
        avg = np.zeros(env.d)
        for k in range(1, iters + 1):
            g = env.mean_subgrad(u)
            u = _feasible_project(u - (step_scale / math.sqrt(k)) * g, body, norm_target)
            avg += (u - avg) / k
        candidate = min((u, avg), key=env.total_loss)
        candidate = _polish(env, candidate, body, norm_target, step_scale)
        results.append((env.total_loss(candidate), candidate))
    results.sort(key=lambda r: r[0])
    best_val, best_u = results[0]
    worst_val = results[-1][0]
    agreed = abs(worst_val - best_val) <= 1e-6 * max(1.0, abs(best_val))
    return ComparatorResult(best_u, best_val, agreed)


def _polish(env, u, body, norm_target, step_scale, rounds=60):
    """Backtracking projected-gradient refinement from a PSGD iterate."""
    val = env.total_loss(u)
    step = step_scale
    for _ in range(rounds):
        g = env.mean_subgrad(u)
        improved = False
        s = step
        for _ in range(30):
            cand = _feasible_project(u - s * g, body, norm_target)
            cval = env.total_loss(cand)
            if cval < val - 1e-15:
                u, val, step, improved = cand, cval, s, True
                break
            s *= 0.5
        if not improved:
            break
    return u
