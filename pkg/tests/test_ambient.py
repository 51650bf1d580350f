import numpy as np
import pytest

from capillary import AmbientDomain, project_and_frame
from capillary.errors import AmbiguousProjection


def test_halfspace_frame(halfspace):
    fr = project_and_frame(halfspace, [0.3, -1.0, 0.7], max_distance=1.0)
    assert np.allclose(fr.footpoint, [0.3, -1.0, 0.0])
    assert np.allclose(fr.eta_bar, [0.0, 0.0, -1.0])
    assert np.allclose(fr.second_fundamental, 0.0)


def test_ball_frame(ball):
    fr = project_and_frame(ball, [0.0, 0.0, 0.5])
    assert np.allclose(fr.footpoint, [0.0, 0.0, 1.0])
    assert np.allclose(fr.eta_bar, [0.0, 0.0, 1.0])
    assert np.allclose(fr.second_fundamental, np.eye(2))
    assert fr.wall_mean_curvature == pytest.approx(2.0)


def test_ball_center_ambiguous(ball):
    with pytest.raises(AmbiguousProjection):
        project_and_frame(ball, [0.0, 0.0, 0.0], max_distance=2.0)


def test_slab_midplane_ambiguous(slab):
    with pytest.raises(AmbiguousProjection):
        project_and_frame(slab, [0.2, 0.1, 0.5])
    fr = project_and_frame(slab, [0.2, 0.1, 0.9])
    assert np.allclose(fr.footpoint, [0.2, 0.1, 1.0])
    assert np.allclose(fr.eta_bar, [0.0, 0.0, 1.0])


def test_frame_orthonormality(halfspace, ball, slab):
    rng = np.random.default_rng(3)
    for domain in (halfspace, ball, slab):
        for _ in range(25):
            p = rng.uniform(-0.4, 0.4, 3)
            if domain.kind == "halfspace":
                p[2] = abs(p[2]) * 0.4
            elif domain.kind == "ball":
                p = 0.85 * p / np.linalg.norm(p)
            else:
                p[2] = 0.2 * abs(p[2])
            try:
                fr = project_and_frame(domain, p)
            except AmbiguousProjection:
                continue
            assert abs(np.linalg.norm(fr.eta_bar) - 1) < 1e-12
            assert np.allclose(fr.tangent_basis @ fr.eta_bar, 0.0, atol=1e-12)
            assert np.allclose(fr.tangent_basis @ fr.tangent_basis.T, np.eye(2), atol=1e-12)
            assert np.allclose(fr.second_fundamental, fr.second_fundamental.T)


def test_signed_distance_matches_projection(halfspace, ball, slab):
    rng = np.random.default_rng(11)
    for domain in (halfspace, ball, slab):
        pts = rng.uniform(-0.45, 0.45, size=(1000, 3))
        if domain.kind == "halfspace":
            pts[:, 2] = np.abs(pts[:, 2])
        elif domain.kind == "ball":
            r = rng.uniform(0.6, 0.999, 1000)
            pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * r[:, None]
        else:
            pts[:, 2] = np.abs(pts[:, 2]) * 0.9
        sd = domain.signed_distance(pts)
        feet = domain.project_to_wall(pts)
        assert np.max(np.abs(np.abs(sd) - np.linalg.norm(pts - feet, axis=1))) < 1e-12


def test_wall_normal_is_distance_gradient(halfspace, ball):
    rng = np.random.default_rng(5)
    eps = 1e-6
    for domain in (halfspace, ball):
        for _ in range(50):
            p = rng.uniform(-0.4, 0.4, 3)
            if domain.kind == "halfspace":
                p[2] = 0.2 + abs(p[2])
            else:
                p = 0.8 * p / np.linalg.norm(p)
            grad = np.array([
                (domain.signed_distance(p + eps * e) - domain.signed_distance(p - eps * e))
                / (2 * eps)
                for e in np.eye(3)
            ])
            eta = domain.wall_normal(domain.project_to_wall(p))
            assert np.linalg.norm(eta + grad) < 1e-9


def test_lipschitz_signed_distance(ball):
    rng = np.random.default_rng(9)
    p = rng.uniform(-0.9, 0.9, size=(300, 3)) * 0.5
    q = p + rng.uniform(-0.1, 0.1, size=(300, 3))
    dp = ball.signed_distance(p)
    dq = ball.signed_distance(q)
    assert np.all(np.abs(dp - dq) <= np.linalg.norm(p - q, axis=1) + 1e-12)
