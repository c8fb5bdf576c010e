"""Convex decision bodies, projections, and uniform sphere sampling.

Supported bodies are a Euclidean ball, an axis-aligned box, and an ellipsoid
``{x : x' A x <= 1}``.  Every body contains the origin strictly in its
interior and fits inside the Euclidean unit ball, so the sandwich
``inner_radius * B  subset  body  subset  B`` holds with an exactly known
inner radius.
"""
from __future__ import annotations

import numpy as np

from ._accel import maybe_njit

BALL = 0
BOX = 1
ELLIPSOID = 2

_KIND_NAMES = {BALL: "ball", BOX: "box", ELLIPSOID: "ellipsoid"}


class ConvexBody:
    """A convex, origin-centered decision set inside the unit ball.

    Use the :meth:`ball`, :meth:`box`, or :meth:`ellipsoid` factories.
    """

    def __init__(self, kind, dim, radius=None, half_widths=None, quad_form=None):
        self.kind = kind
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        self.radius = radius
        self.half_widths = half_widths
        self.quad_form = quad_form
        self._eigvals = None
        self._eigvecs = None
        if kind == BALL:
            if not (0.0 < radius <= 1.0):
                raise ValueError("ball radius must be in (0, 1]")
            self.inner_radius = float(radius)
        elif kind == BOX:
            h = np.asarray(half_widths, dtype=float)
            if h.shape != (self.dim,) or np.any(h <= 0):
                raise ValueError("box half-widths must be positive, one per axis")
            if np.linalg.norm(h) > 1.0 + 1e-12:
                raise ValueError("box must fit inside the unit ball (||h||_2 <= 1)")
            self.half_widths = h
            self.inner_radius = float(np.min(h))
        elif kind == ELLIPSOID:
            A = np.asarray(quad_form, dtype=float)
            if A.shape != (self.dim, self.dim) or not np.allclose(A, A.T, atol=1e-12):
                raise ValueError("quadratic form must be a symmetric d x d matrix")
            evals, evecs = np.linalg.eigh(A)
            if evals[0] <= 0:
                raise ValueError("quadratic form must be positive definite")
            if evals[0] < 1.0 - 1e-12:
                raise ValueError("ellipsoid must fit inside the unit ball (min eig >= 1)")
            self.quad_form = A
            self._eigvals = evals
            self._eigvecs = evecs
            self.inner_radius = float(1.0 / np.sqrt(evals[-1]))
        else:
            raise ValueError(f"unknown body kind {kind!r}")

    @classmethod
    def ball(cls, dim, radius=1.0):
        return cls(BALL, dim, radius=float(radius))

    @classmethod
    def box(cls, half_widths):
        h = np.asarray(half_widths, dtype=float)
        return cls(BOX, h.shape[0], half_widths=h)

    @classmethod
    def ellipsoid(cls, quad_form):
        A = np.asarray(quad_form, dtype=float)
        return cls(ELLIPSOID, A.shape[0], quad_form=A)

    @classmethod
    def from_spec(cls, spec):
        """Build from a ``{kind, dim, params}`` config mapping."""
        kind = spec["kind"]
        params = spec.get("params", {})
        if kind == "ball":
            return cls.ball(spec["dim"], params.get("radius", 1.0))
        if kind == "box":
            return cls.box(params["half_widths"])
        if kind == "ellipsoid":
            return cls.ellipsoid(params["quad_form"])
        raise ValueError(f"unknown body kind {kind!r}")

    @property
    def kind_name(self):
        return _KIND_NAMES[self.kind]

    def __repr__(self):
        return f"ConvexBody({self.kind_name}, dim={self.dim})"


def sample_sphere(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the Euclidean unit sphere in d dimensions.

    Normalizes a standard Gaussian vector; redraws on an all-zero draw.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    while True:
        v = rng.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 0.0:
            return v / n


def sample_sphere_batch(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, d) array of independent uniform sphere points."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    v = rng.standard_normal((n, d))
    norms = np.linalg.norm(v, axis=1)
    bad = norms == 0.0
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1)
        bad = norms == 0.0
    return v / norms[:, None]


@maybe_njit
def _ellipsoid_mu(lam, p2, tol, max_iter):
    """Newton solve for the Lagrange multiplier of an ellipsoid projection.

    Root of phi(mu) = sum_i lam_i p2_i / (1 + mu lam_i)^2 - 1 over mu >= 0,
    with phi(0) > 0 (point outside).  phi is decreasing and convex so Newton
    from 0 converges monotonically.
    """
    mu = 0.0
    for _ in range(max_iter):
        denom = 1.0 + mu * lam
        phi = np.sum(lam * p2 / denom**2) - 1.0
        if abs(phi) <= tol:
            return mu, True
        dphi = -2.0 * np.sum(lam * lam * p2 / denom**3)
        mu = mu - phi / dphi
    return mu, False


def project(body: ConvexBody, shrink: float, point) -> np.ndarray:
    """Euclidean projection of point onto shrink * body, shrink in [0, 1]."""
    if not (0.0 <= shrink <= 1.0):
        raise ValueError("shrink must lie in [0, 1]")
    p = np.asarray(point, dtype=float)
    if shrink == 0.0:
        return np.zeros(body.dim)
    if body.kind == BALL:
        r = shrink * body.radius
        n = np.linalg.norm(p)
        if n <= r:
            return p.copy()
        return p * (r / n)
    if body.kind == BOX:
        h = shrink * body.half_widths
        return np.clip(p, -h, h)
    # Ellipsoid: shrink*body = {x : x' A x <= shrink^2}.  Work in the
    # eigenbasis of A and solve a 1-D problem for the multiplier.
    A = body.quad_form
    if float(p @ A @ p) <= shrink**2:
        return p.copy()
    lam = body._eigvals / shrink**2
    p_rot = body._eigvecs.T @ p
    mu, ok = _ellipsoid_mu(lam, p_rot**2, 1e-10, 100)
    if not ok:
        raise RuntimeError("ellipsoid projection failed to converge (ill-conditioned form)")
    x_rot = p_rot / (1.0 + mu * lam)
    return body._eigvecs @ x_rot


def radial_scale(body: ConvexBody, direction) -> float:
    """Largest r with r * direction/||direction|| inside the body."""
    u = np.asarray(direction, dtype=float)
    n = np.linalg.norm(u)
    if n == 0.0:
        raise ValueError("direction must be nonzero")
    u = u / n
    if body.kind == BALL:
        return float(body.radius)
    if body.kind == BOX:
        nz = np.abs(u) > 0.0
        return float(np.min(body.half_widths[nz] / np.abs(u[nz])))
    return float(1.0 / np.sqrt(u @ body.quad_form @ u))


def membership(body: ConvexBody, point, tolerance: float = 0.0) -> bool:
    """True iff point lies within Euclidean distance `tolerance` of the body."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    p = np.asarray(point, dtype=float)
    q = project(body, 1.0, p)
    return float(np.linalg.norm(p - q)) <= tolerance


def barrier_arrays(body: ConvexBody):
    """(kind, pvec, pmat) encoding consumed by the barrier/newton kernels."""
    if body.kind == BALL:
        return BALL, np.array([body.radius]), np.zeros((1, 1))
    if body.kind == BOX:
        return BOX, body.half_widths.copy(), np.zeros((1, 1))
    return ELLIPSOID, np.zeros(1), body.quad_form.copy()
