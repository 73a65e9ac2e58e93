import numpy as np
import pytest

from gnewton.costs import (AbsPower, Quadratic, ShiftedCubic, value)
from gnewton.errors import (ChartDomainViolation, SingularHessian)
from gnewton.linalg import symmetric_solve
from gnewton.manifolds import (Point, distance, euclidean, random_point,
                               sphere, tangent_basis)
from gnewton.newton import (DampedNewton, Fixed, Identity, Newton,
                            PathDependent, Random, RoundRobin,
                            SphereStereographic, chart_lift_step,
                            euclidean_newton_step, generalized_newton_step,
                            pullback_jet, run_iteration)
from gnewton.parametrizations import (Custom1D, ExampleBeta,
                                      ParametrizationPair, Projection,
                                      SphereGeodesic)
from gnewton.rates import estimate_rate
from gnewton.rng import SplitMix64

PP = ParametrizationPair(Projection(), Projection())


def _pair(kind):
    return ParametrizationPair(kind, kind)


# --- steps ----------------------------------------------------------------------

def test_euclidean_step_on_square():
    # f(x) = x^2: gradient 2, hessian 2 at x = 1, step -1
    j = pullback_jet(Quadratic(np.array([[2.0]])), PP,
                     Point(euclidean(1), np.array([1.0])))
    assert j.gradient[0] == 2.0 and j.hessian[0, 0] == 2.0
    assert euclidean_newton_step(j)[0] == -1.0


def test_zero_gradient_zero_step():
    j = pullback_jet(Quadratic(np.array([[2.0]])), PP,
                     Point(euclidean(1), np.array([0.0])))
    assert euclidean_newton_step(j)[0] == 0.0


def test_abs_power_newton_map():
    # next = 5 x sqrt(x) / (8 + 15 sqrt(x)); at 0.25 that is 0.625/15.5
    for x in (0.5, 0.25, 0.1):
        res = generalized_newton_step(AbsPower(), PP,
                                      Point(euclidean(1), np.array([x])))
        want = 5.0 * x * np.sqrt(x) / (8.0 + 15.0 * np.sqrt(x))
        assert abs(res.next.ambient[0] - want) <= 1e-12
    res = generalized_newton_step(AbsPower(), PP,
                                  Point(euclidean(1), np.array([0.25])))
    assert abs(res.next.ambient[0] - 0.625 / 15.5) <= 1e-15


def test_pullback_jet_euclidean_identity_pair_is_ambient_jet():
    A = np.array([[3.0, 1.0], [1.0, 4.0]])
    b = np.array([0.5, -1.0])
    p = Point(euclidean(2), np.array([2.0, -1.0]))
    j = pullback_jet(Quadratic(A, b), PP, p)
    assert np.allclose(j.gradient, A @ p.ambient + b, atol=1e-14)
    assert np.allclose(j.hessian, A, atol=1e-12)


def test_pullback_jet_sphere_rayleigh_by_hand():
    # restrict 1/2 x^T diag(1,3) x to the circle at e1: second derivative 2
    j = pullback_jet(Quadratic(np.diag([1.0, 3.0])), PP,
                     Point(sphere(2), np.array([1.0, 0.0])))
    assert abs(j.gradient[0]) <= 1e-15
    assert abs(j.hessian[0, 0] - 2.0) <= 1e-12


def test_pullback_jet_example_beta_hessian():
    for beta in (1.0, -0.25, 2.0):
        j = pullback_jet(Quadratic(np.array([[2.0]])), _pair(ExampleBeta(beta)),
                         Point(euclidean(1), np.array([1.0])))
        assert abs(j.hessian[0, 0] - (2.0 + 4.0 * beta)) <= 1e-12


def test_pullback_hessian_symmetric():
    rng = SplitMix64(3)
    m = sphere(5)
    M = rng.gaussians(25).reshape(5, 5)
    c = Quadratic(0.5 * (M + M.T))
    for seed in range(30):
        j = pullback_jet(c, _pair(SphereGeodesic()), random_point(m, seed))
        assert np.array_equal(j.hessian, j.hessian.T)


def test_generalized_step_example_beta_closed_form():
    c = Quadratic(np.array([[2.0]]))  # f(x) = x^2
    for beta in (1.0, -0.25, 2.0):
        res = generalized_newton_step(c, _pair(ExampleBeta(beta)),
                                      Point(euclidean(1), np.array([1.0])))
        want = beta * (3.0 + 4.0 * beta) / (1.0 + 2.0 * beta) ** 2
        assert abs(res.next.ambient[0] - want) <= 1e-10


def test_generalized_step_beta_half_singular():
    c = Quadratic(np.array([[2.0]]))
    with pytest.raises(SingularHessian):
        generalized_newton_step(c, _pair(ExampleBeta(-0.5)),
                                Point(euclidean(1), np.array([1.0])))


def test_fixed_point_property():
    """at a critical point the step is zero and psi anchors: next = p"""
    c = Quadratic(np.diag([1.0, 2.0, 5.0]))
    p = Point(sphere(3), np.eye(3)[:, 0])
    for kind in (Projection(), SphereGeodesic()):
        res = generalized_newton_step(c, _pair(kind), p)
        assert distance(res.next, p) <= 1e-12
        assert res.step_norm <= 1e-14
    ce = Quadratic(np.diag([2.0, 4.0]), np.array([-2.0, -4.0]))
    pe = Point(euclidean(2), np.array([1.0, 1.0]))  # gradient zero here
    res = generalized_newton_step(ce, PP, pe)
    assert distance(res.next, pe) <= 1e-12


def test_example14_one_step_magnitude():
    # custom pair turns the cubic into an 8 x^3 map
    c = ShiftedCubic(0.0)
    res = generalized_newton_step(c, _pair(Custom1D((0.0, -1.0))),
                                  Point(euclidean(1), np.array([0.01])))
    assert abs(abs(res.next.ambient[0]) - 8e-6) <= 0.1 * 8e-6


def test_step_result_reports_condition():
    res = generalized_newton_step(Quadratic(np.diag([1.0, 10.0])), PP,
                                  Point(euclidean(2), np.array([1.0, 1.0])))
    assert abs(res.hessian_condition - 10.0) <= 1e-9
    assert res.pair_used is PP


def test_affine_invariance():
    """Newton steps commute with invertible linear reparametrisation"""
    rng = SplitMix64(62)
    for _ in range(25):
        M = rng.gaussians(9).reshape(3, 3)
        A = M @ M.T + np.eye(3)
        b = rng.gaussians(3)
        T = rng.gaussians(9).reshape(3, 3) + 3.0 * np.eye(3)
        x = rng.gaussians(3)
        # step of f at x
        jx = pullback_jet(Quadratic(A, b), PP, Point(euclidean(3), x))
        sx = euclidean_newton_step(jx)
        # step of f o T at T^{-1} x
        At = T.T @ A @ T
        bt = T.T @ b
        y = np.linalg.solve(T, x)
        jy = pullback_jet(Quadratic(0.5 * (At + At.T), bt), PP,
                          Point(euclidean(3), y))
        sy = euclidean_newton_step(jy)
        assert np.linalg.norm(sy - np.linalg.solve(T, sx)) <= 1e-10 * max(
            1.0, np.linalg.norm(sx))


def test_hessian_deviation_ratio_bounded():
    # ||(H(x) - H(x*)) (x - x*)|| / ||x - x*||^2 == 12 for the cubic family
    c = ShiftedCubic(0.0)
    m = euclidean(1)
    for r in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
        p = Point(m, np.array([r]))
        j = pullback_jet(c, PP, p)
        j0 = pullback_jet(c, PP, Point(m, np.zeros(1)))
        ratio = abs((j.hessian[0, 0] - j0.hessian[0, 0]) * r) / r ** 2
        assert abs(ratio - 12.0) <= 1e-6


# --- run_iteration ----------------------------------------------------------------

def test_quadratic_converges_in_one_step():
    # Newton exactness: single step lands on the minimiser
    c = Quadratic(np.diag([2.0, 4.0]), np.array([-2.0, -4.0]))  # min at (1,1)
    p0 = Point(euclidean(2), np.array([0.0, 0.0]))
    tr = run_iteration(c, Fixed(PP), p0, 10, 2.0)
    assert tr.termination == "Converged"
    assert len(tr.step_norms) == 1
    assert np.allclose(tr.points[-1].ambient, [1.0, 1.0], atol=1e-14)
    # with a tight tolerance the confirming zero step is needed as well
    tr = run_iteration(c, Fixed(PP), p0, 10, 1e-12)
    assert tr.termination == "Converged"
    assert len(tr.step_norms) == 2
    assert tr.step_norms[1] <= 1e-12


def test_trace_shapes_and_costs():
    c = Quadratic(np.diag([1.0, 2.0, 3.0]))
    p0 = random_point(sphere(3), 4)
    tr = run_iteration(c, Fixed(PP), p0, 20, 1e-12)
    k = len(tr.step_norms)
    assert len(tr.points) == k + 1
    assert len(tr.cost_values) == k + 1
    assert len(tr.pairs_used) == k
    assert tr.points[0] is p0
    assert tr.cost_values[0] == value(c, p0)


def test_max_iterations_termination():
    tr = run_iteration(AbsPower(), Fixed(PP),
                       Point(euclidean(1), np.array([0.5])), 3, 1e-30)
    assert tr.termination == "MaxIterations"
    assert len(tr.step_norms) == 3


def test_singular_hessian_termination():
    c = Quadratic(np.array([[2.0]]))
    tr = run_iteration(c, Fixed(_pair(ExampleBeta(-0.5))),
                       Point(euclidean(1), np.array([1.0])), 5, 1e-12)
    assert tr.termination == "SingularHessian"
    assert len(tr.points) == 1  # nothing after p0


def test_left_validity_region_termination():
    # AbsPower jets do not exist at the kink
    tr = run_iteration(AbsPower(), Fixed(PP),
                       Point(euclidean(1), np.array([0.0])), 5, 1e-12)
    assert tr.termination == "LeftValidityRegion"


def test_validates_arguments():
    c = Quadratic(np.eye(2))
    p = Point(euclidean(2), np.zeros(2))
    with pytest.raises(ValueError):
        run_iteration(c, Fixed(PP), p, 0, 1e-12)
    with pytest.raises(ValueError):
        run_iteration(c, Fixed(PP), p, 5, 0.0)


# --- selectors ---------------------------------------------------------------------

def test_round_robin_cycles():
    pairs = (PP, _pair(SphereGeodesic()))
    c = Quadratic(np.diag([1.0, 2.0, 3.0, 4.0]))
    p0 = random_point(sphere(4), 2)
    tr = run_iteration(c, RoundRobin(pairs), p0, 6, 1e-30)
    labels = tr.pairs_used
    assert labels[0] != labels[1]
    assert labels[0] == labels[2] and labels[1] == labels[3]


def test_random_selector_reproducible():
    pairs = (PP, _pair(SphereGeodesic()))
    c = Quadratic(np.diag([1.0, 2.0, 3.0, 4.0]))
    p0 = random_point(sphere(4), 2)
    a = run_iteration(c, Random(pairs, 9), p0, 8, 1e-30)
    b = run_iteration(c, Random(pairs, 9), p0, 8, 1e-30)
    assert a.pairs_used == b.pairs_used
    assert np.array_equal(a.points[-1].ambient, b.points[-1].ambient)
    c2 = run_iteration(c, Random(pairs, 10), p0, 8, 1e-30)
    assert a.pairs_used != c2.pairs_used  # different seed, different draw


def test_path_dependent_distance_keyed():
    pairs = (PP, _pair(SphereGeodesic()), _pair(Projection()))
    c = Quadratic(np.diag([1.0, 2.0, 3.0, 4.0]))
    p0 = random_point(sphere(4), 8)
    tr = run_iteration(c, PathDependent("distance-keyed", pairs), p0, 12, 1e-13)
    assert tr.termination == "Converged"
    # far from the start it uses pairs[0]; close to convergence pairs[2]
    assert tr.pairs_used[0] == "projection+projection"
    assert tr.pairs_used[-1] == "projection+projection"


def test_path_dependent_alternate_on_repeat():
    pairs = (PP, _pair(SphereGeodesic()))
    c = Quadratic(np.diag([1.0, 3.0, 5.0]))
    p0 = random_point(sphere(3), 6)
    tr = run_iteration(c, PathDependent("alternate-on-repeat", pairs), p0, 15, 1e-13)
    assert tr.termination == "Converged"


def test_selector_constructor_validation():
    with pytest.raises(ValueError):
        RoundRobin(())
    with pytest.raises(ValueError):
        PathDependent("no-such-rule", (PP,))


# --- chart lift ---------------------------------------------------------------------

def test_identity_chart_matches_euclidean_step():
    A = np.array([[3.0, 1.0], [1.0, 4.0]])
    c = Quadratic(A, np.array([1.0, -0.5]))
    p = Point(euclidean(2), np.array([0.7, -0.2]))
    j = pullback_jet(c, PP, p)
    s = euclidean_newton_step(j)
    q = chart_lift_step(Newton(), Identity(), c, p)
    assert np.array_equal(q.ambient, p.ambient + s)  # bitwise identical


def test_damped_newton_zero_damping_reduces():
    c = Quadratic(np.diag([1.0, 2.0, 3.0]))
    p = random_point(sphere(3), 7)
    pole = -np.eye(3)[:, 0]
    a = chart_lift_step(Newton(), SphereStereographic(pole), c, p)
    b = chart_lift_step(DampedNewton(0.0), SphereStereographic(pole), c, p)
    assert np.linalg.norm(a.ambient - b.ambient) <= 1e-14


def test_damped_newton_changes_step():
    c = Quadratic(np.diag([1.0, 2.0, 3.0]))
    p = random_point(sphere(3), 7)
    pole = -np.eye(3)[:, 0]
    a = chart_lift_step(Newton(), SphereStereographic(pole), c, p)
    b = chart_lift_step(DampedNewton(0.5), SphereStereographic(pole), c, p)
    assert np.linalg.norm(a.ambient - b.ambient) > 1e-8


def test_stereographic_chart_rejects_pole():
    pole = np.eye(3)[:, 0]
    c = Quadratic(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(ChartDomainViolation):
        chart_lift_step(Newton(), SphereStereographic(pole), c,
                        Point(sphere(3), pole))


def test_identity_chart_requires_euclidean():
    c = Quadratic(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(ChartDomainViolation):
        chart_lift_step(Newton(), Identity(), c, random_point(sphere(3), 0))


def test_stereographic_newton_rate():
    """five fixed steps from a frozen start fit a superquadratic rate"""
    from gnewton.config import compute_truth, match_truth_signs, near_truth_start
    m = sphere(6)
    c = Quadratic(np.diag([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]))
    truth = compute_truth(m, c)
    chart = SphereStereographic(-np.eye(6)[:, 0])
    p = near_truth_start(m, truth, 0.3, 3)
    pts = [p]
    for _ in range(5):
        p = chart_lift_step(Newton(), chart, c, p)
        pts.append(p)
    t = match_truth_signs(truth, pts[-1])
    errs = [distance(q, t) for q in pts]
    est = estimate_rate(errs, floor=1e-10, ceil=0.7)
    assert est.K >= 1.8
