"""Direction learners.

Two learners of the comparator's direction:

* :class:`BarrierDirectionLearner` -- a bandit linear optimizer over a convex
  body.  It runs follow-the-regularized-leader with a self-concordant barrier
  regularizer, explores on the boundary of the Dikin ellipsoid (a uniformly
  chosen signed Hessian eigendirection), and builds an unbiased one-point
  estimate of the loss vector from the observed scalar loss.
* :class:`OgdDirectionLearner` -- full-information projected online gradient
  descent over a shrunk body, driven by gradient estimates.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_njit
from .geometry import BALL, BOX, ConvexBody, barrier_arrays, project

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 200
MAX_HALVINGS = 100


@maybe_njit
def _barrier_value(kind, pvec, pmat, x):
    if kind == BALL:
        s = pvec[0] * pvec[0] - x @ x
        if s <= 0.0:
            return np.inf
        return -np.log(s)
    if kind == BOX:
        tot = 0.0
        for i in range(x.shape[0]):
            a = pvec[i] - x[i]
            b = pvec[i] + x[i]
            if a <= 0.0 or b <= 0.0:
                return np.inf
            tot -= np.log(a) + np.log(b)
        return tot
    s = 1.0 - x @ pmat @ x
    if s <= 0.0:
        return np.inf
    return -np.log(s)


@maybe_njit
def _barrier_grad(kind, pvec, pmat, x):
    if kind == BALL:
        s = pvec[0] * pvec[0] - x @ x
        return (2.0 / s) * x
    if kind == BOX:
        g = np.empty_like(x)
        for i in range(x.shape[0]):
            g[i] = 1.0 / (pvec[i] - x[i]) - 1.0 / (pvec[i] + x[i])
        return g
    Ax = pmat @ x
    s = 1.0 - x @ Ax
    return (2.0 / s) * Ax


@maybe_njit
def _barrier_hess(kind, pvec, pmat, x):
    d = x.shape[0]
    if kind == BALL:
        s = pvec[0] * pvec[0] - x @ x
        H = (4.0 / (s * s)) * np.outer(x, x)
        for i in range(d):
            H[i, i] += 2.0 / s
        return H
    if kind == BOX:
        H = np.zeros((d, d))
        for i in range(d):
            a = pvec[i] - x[i]
            b = pvec[i] + x[i]
            H[i, i] = 1.0 / (a * a) + 1.0 / (b * b)
        return H
    Ax = pmat @ x
    s = 1.0 - x @ Ax
    return (2.0 / s) * pmat + (4.0 / (s * s)) * np.outer(Ax, Ax)


@maybe_njit
def _ftrl_newton(kind, pvec, pmat, x0, glin, tol, max_iter):
    """argmin <glin, x> + barrier(x) by damped Newton from the warm start x0.

    Backtracks until the barrier is finite; the objective is self-concordant
    so the 1/(1+lambda) damping guarantees progress.
    """
    x = x0.copy()
    for _ in range(max_iter):
        grad = glin + _barrier_grad(kind, pvec, pmat, x)
        if np.sqrt(grad @ grad) <= tol:
            return x, True
        H = _barrier_hess(kind, pvec, pmat, x)
        dx = np.linalg.solve(H, -grad)
        lam = np.sqrt(max(-(grad @ dx), 0.0))
        step = 1.0 if lam <= 0.25 else 1.0 / (1.0 + lam)
        moved = False
        for _h in range(MAX_HALVINGS):
            xn = x + step * dx
            if np.isfinite(_barrier_value(kind, pvec, pmat, xn)):
                moved = True
                break
            step *= 0.5
        if not moved:
            return x, False
        x = xn
    grad = glin + _barrier_grad(kind, pvec, pmat, x)
    return x, np.sqrt(grad @ grad) <= tol


def barrier_parameter(body: ConvexBody) -> float:
    """Self-concordance parameter of the body's barrier."""
    if body.kind == BOX:
        return 2.0 * body.dim
    return 1.0


class BarrierDirectionLearner:
    """Bandit linear optimization over a convex body via a Dikin-ellipsoid barrier.

    Per round: :meth:`predict` samples a play on the Dikin ellipsoid boundary
    around the interior iterate and returns it with a perturbation token;
    :meth:`update` consumes the observed scalar loss and that token, forms the
    one-point loss estimate, and re-centers by a damped-Newton FTRL step.
    """

    def __init__(self, body: ConvexBody, horizon: int, lipschitz_bound: float,
                 learning_rate: float | None = None):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.body = body
        self.horizon = int(horizon)
        self.lipschitz_bound = float(lipschitz_bound)
        nu = barrier_parameter(body)
        if learning_rate is None:
            learning_rate = math.sqrt(nu * math.log(max(horizon, 2)) / horizon) / (
                body.dim * self.lipschitz_bound)
        self.learning_rate = float(learning_rate)
        self.nu = nu
        self._kind, self._pvec, self._pmat = barrier_arrays(body)
        self.x = np.zeros(body.dim)
        self.estimate_sum = np.zeros(body.dim)
        self.round = 0
        self.lipschitz_violations = 0

    def predict(self, rng: np.random.Generator):
        """Sample z = x +/- lam_i^{-1/2} v_i; returns (play, token)."""
        H = _barrier_hess(self._kind, self._pvec, self._pmat, self.x)
        evals, evecs = np.linalg.eigh(H)
        if not (np.all(np.isfinite(evals)) and np.all(np.isfinite(evecs))):
            raise RuntimeError("barrier Hessian eigendecomposition produced non-finite values")
        # Deterministic eigenvector signs for reproducibility.
        for j in range(evecs.shape[1]):
            k = int(np.argmax(np.abs(evecs[:, j])))
            if evecs[k, j] < 0:
                evecs[:, j] = -evecs[:, j]
        i = int(rng.integers(self.body.dim))
        eps = 1.0 if int(rng.integers(2)) == 1 else -1.0
        vec = evecs[:, i].copy()
        z = self.x + eps * vec / math.sqrt(evals[i])
        return z, (i, eps, float(evals[i]), vec)

    def update(self, loss_value: float, token) -> None:
        _, eps, lam, vec = token
        loss_value = float(loss_value)
        if abs(loss_value) > self.lipschitz_bound:
            loss_value = math.copysign(self.lipschitz_bound, loss_value)
            self.lipschitz_violations += 1
        estimate = self.body.dim * loss_value * eps * math.sqrt(lam) * vec
        self.estimate_sum = self.estimate_sum + estimate
        glin = self.learning_rate * self.estimate_sum
        x_new, ok = _ftrl_newton(self._kind, self._pvec, self._pmat,
                                 self.x, glin, NEWTON_TOL, NEWTON_MAX_ITER)
        if not ok:
            raise RuntimeError("barrier FTRL Newton step failed to converge")
        self.x = x_new
        self.round += 1


class OgdDirectionLearner:
    """Projected online gradient descent on (1 - alpha) * body, started at 0."""

    def __init__(self, body: ConvexBody, alpha: float, learning_rate: float):
        if not (0.0 <= alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if not learning_rate > 0:
            raise ValueError("learning rate must be positive")
        self.body = body
        self.alpha = float(alpha)
        self.learning_rate = float(learning_rate)
        self.z = np.zeros(body.dim)

    def step(self, estimate) -> None:
        g = np.asarray(estimate, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient estimate must be finite")
        self.z = project(self.body, 1.0 - self.alpha, self.z - self.learning_rate * g)
