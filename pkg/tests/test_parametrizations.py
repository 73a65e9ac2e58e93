import numpy as np
import pytest

from gnewton.manifolds import (Point, TangentVector, euclidean, grassmann,
                               random_point, sphere, stiefel, tangent_basis)
from gnewton.parametrizations import (Custom1D, ExampleBeta,
                                      ParametrizationPair, Projection, QR,
                                      Recentred, SphereGeodesic, apply_phi,
                                      apply_psi, audit_conditions, kind_name,
                                      kind_valid_on, pair_label,
                                      recentring_rotation, second_order_term)
from gnewton.rng import SplitMix64


def _pair(kind):
    return ParametrizationPair(kind, kind)


def _cases():
    """(kind, manifold) combinations each kind is valid on"""
    out = []
    for m in (euclidean(3), sphere(4), stiefel(4, 2), grassmann(4, 2)):
        out.append((Projection(), m))
    out.append((SphereGeodesic(), sphere(4)))
    for m in (sphere(4), stiefel(4, 2), grassmann(4, 2)):
        out.append((QR(), m))
    out.append((Custom1D((0.0, -1.0)), euclidean(1)))
    out.append((ExampleBeta(1.0), euclidean(1)))
    out.append((Recentred(Projection(), 3), sphere(4)))
    out.append((Recentred(SphereGeodesic(), 3), sphere(4)))
    return out


def test_kind_validity_table():
    assert kind_valid_on(Projection(), grassmann(5, 2))
    assert not kind_valid_on(SphereGeodesic(), euclidean(2))
    assert not kind_valid_on(Custom1D((1.0,)), euclidean(2))  # 1-D only
    assert not kind_valid_on(Recentred(Projection(), 0), stiefel(3, 2))
    assert not kind_valid_on(QR(), euclidean(3))


def test_labels():
    p = ParametrizationPair(Projection(), SphereGeodesic())
    assert pair_label(p) == "%s+%s" % (kind_name(Projection()),
                                       kind_name(SphereGeodesic()))


def test_anchor_at_zero_is_exact():
    """phi_p(0) = p bitwise, every kind, 100 random points"""
    for kind, m in _cases():
        for seed in range(100):
            p = random_point(m, seed)
            q = apply_phi(_pair(kind), TangentVector(p, np.zeros(m.ambient_dim)))
            assert np.array_equal(q.ambient, p.ambient), (kind_name(kind), m.kind, seed)


def test_sphere_projection_example():
    p = Point(sphere(2), np.array([1.0, 0.0]))
    v = TangentVector(p, np.array([0.0, 0.5]))
    q = apply_phi(_pair(Projection()), v)
    assert np.allclose(q.ambient, np.array([1.0, 0.5]) / np.sqrt(1.25), atol=1e-15)


def test_sphere_geodesic_quarter_turn():
    # unit-speed geodesic from e1 towards e2 for time pi/2 lands at e2
    p = Point(sphere(2), np.array([1.0, 0.0]))
    v = TangentVector(p, np.array([0.0, np.pi / 2.0]))
    q = apply_phi(_pair(SphereGeodesic()), v)
    assert np.allclose(q.ambient, [0.0, 1.0], atol=1e-15)


def test_example_beta_map_value():
    # psi_1(-1/3) with beta = 1: 1 - 1/3 + 1/9 = 7/9
    p = Point(euclidean(1), np.array([1.0]))
    v = TangentVector(p, np.array([-1.0 / 3.0]))
    q = apply_psi(_pair(ExampleBeta(1.0)), v)
    assert abs(q.ambient[0] - 7.0 / 9.0) <= 1e-15


def test_example_beta_identity_at_origin():
    p = Point(euclidean(1), np.array([0.0]))
    v = TangentVector(p, np.array([0.7]))
    q = apply_phi(_pair(ExampleBeta(2.0)), v)
    assert q.ambient[0] == 0.7


def test_custom1d_polynomial():
    # coeffs (0, -1): phi_x(t) = x + t - t^2
    p = Point(euclidean(1), np.array([0.25]))
    v = TangentVector(p, np.array([0.5]))
    q = apply_phi(_pair(Custom1D((0.0, -1.0))), v)
    assert abs(q.ambient[0] - (0.25 + 0.5 - 0.25)) <= 1e-16


def test_qr_on_sphere_matches_projection():
    # 1-column QR with the positive-diagonal convention is normalisation
    m = sphere(5)
    rng = SplitMix64(8)
    for seed in range(20):
        p = random_point(m, seed)
        B = tangent_basis(p)
        v = TangentVector(p, 0.3 * (B.columns @ rng.gaussians(4)))
        a = apply_phi(_pair(QR()), v)
        b = apply_phi(_pair(Projection()), v)
        assert np.linalg.norm(a.ambient - b.ambient) <= 1e-14


def test_qr_deterministic():
    m = stiefel(4, 2)
    p = random_point(m, 1)
    B = tangent_basis(p)
    v = TangentVector(p, 0.4 * B.columns[:, 0] + 0.2 * B.columns[:, 2])
    a = apply_phi(_pair(QR()), v)
    b = apply_phi(_pair(QR()), v)
    assert np.array_equal(a.ambient, b.ambient)


def test_recentred_projection_equals_projection():
    """re-centring the projection pair reproduces it (rotation equivariance)"""
    m = sphere(4)
    kind = Recentred(Projection(), 17)
    rng = SplitMix64(31)
    for seed in range(50):
        p = random_point(m, seed)
        B = tangent_basis(p)
        v = TangentVector(p, 0.2 * (B.columns @ rng.gaussians(3)))
        a = apply_phi(_pair(kind), v)
        b = apply_phi(_pair(Projection()), v)
        assert np.linalg.norm(a.ambient - b.ambient) <= 1e-12


def test_recentring_rotation_properties():
    kind = Recentred(Projection(), 5)
    m = sphere(5)
    for seed in range(20):
        p = random_point(m, seed)
        R = recentring_rotation(kind, p)
        assert np.linalg.norm(R.T @ R - np.eye(5)) <= 1e-12
        assert np.linalg.norm(R[:, 0] - p.ambient) <= 1e-15  # first column is p


def test_second_order_sphere_example():
    p = Point(sphere(3), np.eye(3)[:, 0])
    v = TangentVector(p, np.eye(3)[:, 1])
    S = second_order_term(_pair(Projection()), v)
    assert np.allclose(S, -np.eye(3)[:, 0], atol=1e-12)
    S = second_order_term(_pair(SphereGeodesic()), v)
    assert np.allclose(S, -np.eye(3)[:, 0], atol=1e-12)


def test_second_order_zero_vector():
    for kind, m in _cases():
        p = random_point(m, 0)
        S = second_order_term(_pair(kind), TangentVector(p, np.zeros(m.ambient_dim)))
        assert np.array_equal(S, np.zeros(m.ambient_dim))


def test_second_order_stiefel_block():
    X = np.eye(3)[:, :2]
    p = Point(stiefel(3, 2), X.flatten(order="F"))
    V = np.zeros((3, 2))
    V[2, 0] = 1.0  # V^T V = diag(1, 0), X^T V = 0 (skew)
    v = TangentVector(p, V.flatten(order="F"))
    S = second_order_term(_pair(Projection()), v).reshape(3, 2, order="F")
    want = np.zeros((3, 2))
    want[0, 0] = -1.0  # -X (V^T V)
    assert np.allclose(S, want, atol=1e-12)


def test_second_order_custom1d_coefficient():
    p = Point(euclidean(1), np.array([2.0]))
    v = TangentVector(p, np.array([3.0]))
    S = second_order_term(_pair(Custom1D((0.0, -1.0))), v)
    assert abs(S[0] - 2.0 * (-1.0) * 9.0) <= 1e-12  # 2 c2 t^2


def test_second_order_matches_finite_differences():
    """analytic vs central-difference curvature, 100 random unit tangents"""
    h = np.finfo(float).eps ** 0.25
    rng = SplitMix64(444)
    for kind, m in _cases():
        for trial in range(100 // 10):
            p = random_point(m, trial + 1)
            B = tangent_basis(p)
            for _ in range(10):
                d = B.columns @ rng.gaussians(m.intrinsic_dim)
                d = d / np.linalg.norm(d)
                v = TangentVector(p, d)
                S = second_order_term(_pair(kind), v)
                fp = apply_phi(_pair(kind), TangentVector(p, h * d)).ambient
                fm = apply_phi(_pair(kind), TangentVector(p, -h * d)).ambient
                fd = (fp - 2.0 * p.ambient + fm) / (h * h)
                scale = max(1.0, float(np.linalg.norm(fd)))
                assert np.linalg.norm(S - fd) <= 1e-6 * scale, (kind_name(kind), m.kind)


def test_audit_sphere_projection():
    rep = audit_conditions(_pair(Projection()), sphere(6), 20,
                           [1e-1, 1e-2, 1e-3], 42)
    assert 0.4 <= rep.beta_hat <= 0.6
    assert 1.9 <= rep.fitted_slope <= 2.1
    assert rep.identity_residual <= 1e-10
    assert rep.dphi_residual <= 1e-6
    assert rep.all_pass


def test_audit_euclidean_identity_pair():
    # psi(y) = p + y exactly: residuals vanish, slope degenerates to +inf
    rep = audit_conditions(_pair(Projection()), euclidean(3), 10,
                           [1e-1, 1e-2, 1e-3], 1)
    assert rep.beta_hat == 0.0
    assert rep.fitted_slope == np.inf
    assert rep.all_pass


def test_audit_example_beta_curvature():
    # psi_x(y) = x + y + y^2/x: residual y^2/|x|, base points keep |x| in
    # [1/2, 1] so beta_hat lands in [1, 2]
    rep = audit_conditions(_pair(ExampleBeta(1.0)), euclidean(1), 20,
                           [1e-1, 1e-2, 1e-3], 7)
    assert 1.0 <= rep.beta_hat <= 2.0
    assert abs(rep.fitted_slope - 2.0) <= 0.1
    assert rep.all_pass


def test_audit_flags_broken_pair():
    # coeffs (0.1,): phi_x(t) = x + 1.1 t, so Dphi(0) = 1.1 violates the
    # identity-derivative condition by exactly 0.1
    rep = audit_conditions(_pair(Custom1D((0.1,))), euclidean(1), 20,
                           [1e-1, 1e-2, 1e-3], 42)
    assert abs(rep.dphi_residual - 0.1) <= 1e-6
    assert not rep.pass_flags["dphi"]
    assert not rep.all_pass


def test_audit_validates_radii():
    with pytest.raises(ValueError):
        audit_conditions(_pair(Projection()), sphere(3), 5, [1e-3, 1e-2], 0)
    with pytest.raises(ValueError):
        audit_conditions(_pair(Projection()), sphere(3), 5, [1e-1, 1e-8], 0)
    with pytest.raises(ValueError):
        audit_conditions(_pair(Projection()), sphere(3), 0, [1e-1], 0)


def test_audit_deterministic():
    a = audit_conditions(_pair(Projection()), stiefel(4, 2), 10,
                         [1e-1, 1e-2, 1e-3], 11)
    b = audit_conditions(_pair(Projection()), stiefel(4, 2), 10,
                         [1e-1, 1e-2, 1e-3], 11)
    assert a.beta_hat == b.beta_hat and a.fitted_slope == b.fitted_slope


def test_h3_slope_all_builtin_pairs():
    """every valid (kind, manifold) shows quadratic-or-better psi residuals"""
    for kind, m in _cases():
        rep = audit_conditions(_pair(kind), m, 10, [1e-1, 1e-2, 1e-3], 3)
        assert rep.fitted_slope >= 1.9, (kind_name(kind), m.kind, rep.fitted_slope)
