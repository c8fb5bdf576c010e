"""Loss environments, schedules, query discipline, comparator oracle."""
import math

import numpy as np
import pytest

from cabandits import rng as rng_mod
from cabandits.envs import (FAMILIES, Environment, ProtocolViolation,
                            best_comparator)
from cabandits.geometry import ConvexBody


def make_env(family, schedule="stochastic", d=3, T=64, seed=0, **kw):
    return Environment(family, schedule, d, T, seed, **kw)


class TestShift:
    def test_loss_at_origin_is_zero_everywhere(self):
        for family in FAMILIES:
            for seed in range(25):
                env = make_env(family, seed=seed)
                for t in (0, env.T // 2, env.T - 1):
                    assert env.loss(t, np.zeros(env.d)) == 0.0

    def test_linear_inner_product(self):
        env = make_env("linear", schedule="fixed", d=2, T=4, seed=0)
        env.G[:] = np.array([1.0, 2.0])
        assert env.loss(0, [3.0, 1.0]) == 5.0

    def test_logistic_shift(self):
        env = make_env("logistic", schedule="fixed", d=2, T=4, seed=0)
        assert env.loss(0, [0.0, 0.0]) == 0.0


class TestQueryMeter:
    def test_single_query_allowed(self):
        env = make_env("hinge")
        env.eval(3, np.zeros(env.d))
        with pytest.raises(ProtocolViolation):
            env.eval(3, np.zeros(env.d))

    def test_unmetered_loss_does_not_count(self):
        env = make_env("hinge")
        env.loss(3, np.zeros(env.d))
        env.eval(3, np.zeros(env.d))  # no violation

    def test_nonfinite_query_rejected(self):
        env = make_env("linear")
        with pytest.raises(ValueError):
            env.eval(0, [np.nan] * env.d)


class TestAudits:
    def test_lipschitz_audit(self):
        gen = rng_mod.stream(0, "test-envs")
        for family in FAMILIES:
            env = make_env(family, T=32, seed=1)
            radius = 1.0 if family != "quadratic" else env.play_radius
            for _ in range(10**4 // 32):
                t = int(gen.integers(env.T))
                w1 = radius * gen.uniform(-1, 1, env.d) / math.sqrt(env.d)
                w2 = radius * gen.uniform(-1, 1, env.d) / math.sqrt(env.d)
                gap = abs(env.loss(t, w1) - env.loss(t, w2))
                assert gap <= env.L * np.linalg.norm(w1 - w2) + 1e-9

    def test_smoothness_audit_quadratic(self):
        gen = rng_mod.stream(1, "test-envs")
        env = make_env("quadratic", T=32, seed=2)
        for _ in range(10**4 // 32):
            t = int(gen.integers(env.T))
            x = gen.uniform(-2, 2, env.d)
            y = gen.uniform(-2, 2, env.d)
            lhs = env.loss(t, y)
            rhs = (env.loss(t, x) + float(env.grad(t, x) @ (y - x))
                   + (env.beta / 2.0) * float(np.sum((y - x) ** 2)))
            assert lhs <= rhs + 1e-9

    def test_gradients_match_finite_differences(self):
        gen = rng_mod.stream(2, "test-envs")
        for family in FAMILIES:
            env = make_env(family, T=16, seed=3)
            for t in range(4):
                w = 0.3 * gen.standard_normal(env.d)
                g = env.grad(t, w)
                h = 1e-6
                for j in range(env.d):
                    e = np.zeros(env.d)
                    e[j] = h
                    fd = (env.loss(t, w + e) - env.loss(t, w - e)) / (2 * h)
                    assert abs(fd - g[j]) < 1e-4


class TestSchedules:
    def test_fixed_repeats_one_parameter(self):
        env = make_env("linear", schedule="fixed", T=100)
        assert np.all(env.G == env.G[0])

    def test_rotating_returns_after_full_period(self):
        env = make_env("linear", schedule="rotating", d=2, T=129, period=64)
        assert np.allclose(env.G[64], env.G[0], atol=1e-9)
        assert not np.allclose(env.G[16], env.G[0])

    def test_stochastic_gradients_have_declared_norm(self):
        env = make_env("linear", schedule="stochastic", T=200, L=2.0)
        assert np.allclose(np.linalg.norm(env.G, axis=1), 2.0)

    def test_adaptive_sign_is_precommitted(self):
        a = make_env("linear", schedule="adaptive_sign", T=100, seed=5)
        b = make_env("linear", schedule="adaptive_sign", T=100, seed=5)
        assert np.array_equal(a.G, b.G)
        with pytest.raises(ValueError):
            make_env("hinge", schedule="adaptive_sign")

    def test_schedule_hash_distinguishes_seeds(self):
        h0 = make_env("hinge", seed=0).schedule_hash
        h1 = make_env("hinge", seed=1).schedule_hash
        assert h0 != h1
        assert h0 == make_env("hinge", seed=0).schedule_hash

    def test_spec_round_trip(self):
        env = make_env("quadratic", schedule="rotating", d=4, T=50, seed=9)
        clone = Environment.from_spec(env.spec())
        assert clone.schedule_hash == env.schedule_hash

    def test_export_schedule(self, tmp_path):
        env = make_env("linear", T=10)
        path = tmp_path / "schedule.csv"
        env.export_schedule(path)
        rows = path.read_text().strip().splitlines()
        assert len(rows) == 11  # header + T

    def test_unknown_family_and_schedule(self):
        with pytest.raises(ValueError):
            make_env("cubic")
        with pytest.raises(ValueError):
            make_env("linear", schedule="clairvoyant")


class TestBestComparator:
    def test_fixed_linear_hits_boundary(self):
        env = make_env("linear", schedule="fixed", d=2, T=50, seed=4)
        res = best_comparator(env, body=ConvexBody.ball(2), seed=0,
                              restarts=3, iters=800)
        g = env.G[0]
        assert np.allclose(res.point, -g / np.linalg.norm(g), atol=1e-4)
        assert abs(res.total_loss - (-50.0 * np.linalg.norm(g))) < 1e-3

    def test_norm_target_zero(self):
        env = make_env("hinge", T=50)
        res = best_comparator(env, norm_target=0.0)
        assert np.all(res.point == 0.0)
        assert res.total_loss == 0.0
        assert res.agreed

    def test_fixed_quadratic_recovers_center(self):
        env = make_env("quadratic", schedule="fixed", d=2, T=40, seed=6)
        res = best_comparator(env, norm_target=1.0, seed=0, restarts=3, iters=2000)
        m = env.M[0]
        assert np.allclose(res.point, m, atol=1e-3)
        assert abs(res.total_loss - (-40.0 * float(m @ m))) < 1e-4
        assert res.agreed

    def test_matches_grid_search(self):
        env = make_env("quadratic", schedule="stochastic", d=2, T=30, seed=7)
        res = best_comparator(env, norm_target=0.6, seed=0, restarts=3, iters=2000)
        grid = np.linspace(-0.6, 0.6, 121)
        best = min(env.total_loss(np.array([a, b]))
                   for a in grid for b in grid
                   if a * a + b * b <= 0.36)
        assert res.total_loss <= best + 1e-4

    def test_requires_some_constraint(self):
        env = make_env("linear", T=10)
        with pytest.raises(ValueError):
            best_comparator(env)
