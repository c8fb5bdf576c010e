"""Bodies, projections, and sphere sampling."""
import numpy as np
import pytest

from cabandits.geometry import (ConvexBody, membership, project, radial_scale,
                                sample_sphere, sample_sphere_batch)
from cabandits import rng as rng_mod


def bodies_under_test():
    A = np.array([[2.0, 0.3], [0.3, 1.5]])
    return [
        ConvexBody.ball(2),
        ConvexBody.ball(3, radius=0.7),
        ConvexBody.box([0.5, 0.5]),
        ConvexBody.box([0.3, 0.4, 0.5]),
        ConvexBody.ellipsoid(A),
    ]


class TestConstruction:
    def test_ball_radius_validation(self):
        with pytest.raises(ValueError):
            ConvexBody.ball(2, radius=1.5)
        with pytest.raises(ValueError):
            ConvexBody.ball(2, radius=0.0)

    def test_box_must_fit_in_unit_ball(self):
        with pytest.raises(ValueError):
            ConvexBody.box([0.9, 0.9])

    def test_ellipsoid_must_fit_in_unit_ball(self):
        with pytest.raises(ValueError):
            ConvexBody.ellipsoid(np.array([[0.5, 0.0], [0.0, 2.0]]))

    def test_ellipsoid_must_be_positive_definite(self):
        with pytest.raises(ValueError):
            ConvexBody.ellipsoid(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_inner_radius_exact(self):
        assert ConvexBody.ball(4, radius=0.8).inner_radius == 0.8
        assert ConvexBody.box([0.3, 0.5]).inner_radius == 0.3
        # largest inscribed ball of {x' A x <= 1} has radius 1/sqrt(max eig)
        body = ConvexBody.ellipsoid(np.diag([1.0, 4.0]))
        assert np.isclose(body.inner_radius, 0.5)

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            ConvexBody.ball(0)

    def test_from_spec_round_trip(self):
        body = ConvexBody.from_spec(
            {"kind": "box", "dim": 2, "params": {"half_widths": [0.5, 0.5]}})
        assert body.kind_name == "box"
        assert np.allclose(body.half_widths, [0.5, 0.5])


class TestSampleSphere:
    def test_d1_signs_balanced(self):
        gen = rng_mod.stream(0, "test-sphere")
        draws = np.array([sample_sphere(1, gen)[0] for _ in range(10**5)])
        assert set(np.unique(draws)) == {-1.0, 1.0}
        assert abs(np.mean(draws > 0) - 0.5) < 0.01

    def test_unit_norm(self):
        gen = rng_mod.stream(1, "test-sphere")
        for d in (1, 2, 5, 17):
            s = sample_sphere(d, gen)
            assert abs(np.linalg.norm(s) - 1.0) <= 1e-12

    def test_second_moment_is_identity_over_d(self):
        # E[s s'] = I/3 for the uniform sphere in R^3
        gen = rng_mod.stream(2, "test-sphere")
        S = sample_sphere_batch(3, 10**6, gen)
        M = S.T @ S / len(S)
        assert np.max(np.abs(M - np.eye(3) / 3.0)) < 0.01

    def test_mean_near_zero(self):
        gen = rng_mod.stream(3, "test-sphere")
        S = sample_sphere_batch(4, 10**6, gen)
        assert np.max(np.abs(S.mean(axis=0))) < 4.0 / np.sqrt(len(S))

    def test_invalid_dimension(self):
        gen = rng_mod.stream(0, "test-sphere")
        with pytest.raises(ValueError):
            sample_sphere(0, gen)


class TestProject:
    def test_ball_radial_clip(self):
        out = project(ConvexBody.ball(2), 1.0, [3.0, 4.0])
        assert np.allclose(out, [0.6, 0.8])

    def test_already_inside_untouched(self):
        out = project(ConvexBody.ball(2), 0.5, [0.1, 0.1])
        assert np.allclose(out, [0.1, 0.1])

    def test_box_per_axis_clip(self):
        out = project(ConvexBody.box([0.5, 0.5]), 1.0, [0.7, -0.2])
        assert np.allclose(out, [0.5, -0.2])

    def test_shrink_zero_gives_origin(self):
        out = project(ConvexBody.ball(3), 0.0, [1.0, 2.0, 3.0])
        assert np.allclose(out, 0.0)

    def test_feasibility_and_idempotence(self):
        gen = rng_mod.stream(4, "test-project")
        for body in bodies_under_test():
            for shrink in (1.0, 0.5, 0.25):
                for _ in range(200):
                    p = 3.0 * gen.standard_normal(body.dim)
                    q = project(body, shrink, p)
                    # q in shrink*body: scaling back up by 1/shrink must be in body
                    assert membership(body, q / shrink, 1e-9)
                    q2 = project(body, shrink, q)
                    assert np.linalg.norm(q - q2) <= 1e-9

    def test_optimality_against_random_interior_points(self):
        gen = rng_mod.stream(5, "test-project")
        for body in bodies_under_test():
            if body.dim > 3:
                continue
            p = 2.0 * gen.standard_normal(body.dim)
            q = project(body, 1.0, p)
            best = np.linalg.norm(p - q)
            for _ in range(10**4):
                cand = gen.uniform(-1, 1, body.dim)
                if membership(body, cand, 0.0):
                    assert best <= np.linalg.norm(p - cand) + 1e-8

    def test_invalid_shrink(self):
        with pytest.raises(ValueError):
            project(ConvexBody.ball(2), 1.5, [0.0, 0.0])


class TestRadialScale:
    def test_ball_any_direction(self):
        assert radial_scale(ConvexBody.ball(2), [0.3, -0.4]) == 1.0

    def test_box_face(self):
        assert radial_scale(ConvexBody.box([0.5, 0.5]), [1.0, 0.0]) == 0.5

    def test_box_diagonal(self):
        r = radial_scale(ConvexBody.box([0.5, 0.5]), [1.0, 1.0])
        assert np.isclose(r, 0.5 * np.sqrt(2.0))

    def test_boundary_point_lands_in_body(self):
        gen = rng_mod.stream(6, "test-radial")
        for body in bodies_under_test():
            for _ in range(100):
                u = sample_sphere(body.dim, gen)
                r = radial_scale(body, u)
                assert membership(body, r * u, 1e-9)
                assert not membership(body, (r + 1e-6) * u, 1e-9)

    def test_zero_direction(self):
        with pytest.raises(ValueError):
            radial_scale(ConvexBody.ball(2), [0.0, 0.0])


class TestMembership:
    def test_origin(self):
        assert membership(ConvexBody.ball(3), np.zeros(3), 0.0)

    def test_outside_by_more_than_tolerance(self):
        assert not membership(ConvexBody.ball(2), [1.0 + 1e-6, 0.0], 1e-9)

    def test_within_tolerance_band(self):
        assert membership(ConvexBody.ball(2), [1.0 + 1e-6, 0.0], 1e-3)

    def test_inner_ball_contained(self):
        gen = rng_mod.stream(7, "test-membership")
        for body in bodies_under_test():
            for _ in range(10**4 // len(bodies_under_test())):
                u = sample_sphere(body.dim, gen)
                assert membership(body, body.inner_radius * u, 1e-9)
