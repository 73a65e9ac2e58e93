"""Parametrisation pairs (phi, psi) and numerical audits of their conditions.

A pair defines one generalised Newton method: phi pulls the cost back to the
tangent space at the current point, psi maps the Euclidean Newton increment
back to the manifold. Every kind anchors the identity phi_p(0) = p and
D phi_p(0) = I; the audit measures how well those and the quadratic
remainder bound ||psi_p(y) - p - y|| <= beta ||y||^2 hold on samples.
"""

from dataclasses import dataclass, field
from math import cos, log, sin, sqrt

import numpy as np

from .errors import (ManifoldMismatch, OutsideValidityRadius,
                     ProjectionUndefined, RankDeficient)
from .manifolds import (ManifoldDescriptor, Point, TangentVector,
                        tangent_basis, _complete_orthonormal)
from .linalg import polar_factor
from .rng import SplitMix64

_EPS = np.finfo(float).eps

# smallest singular value of p + v below this aborts a projection step
PROJECTION_GUARD = 0.1


@dataclass(frozen=True)
class Projection:
    """Closest-point projection of p + v back onto the manifold."""


@dataclass(frozen=True)
class SphereGeodesic:
    """Great-circle map cos(|v|) p + sin(|v|) v/|v| (sphere only)."""


@dataclass(frozen=True)
class QR:
    """Orthonormal factor of p + v with positive-diagonal R."""


@dataclass(frozen=True)
class Custom1D:
    """One-dimensional map y -> x + t + sum_k c_k t^k with t the tangent
    displacement; coeffs[k-1] multiplies t^k, so a nonzero first entry
    deliberately breaks D phi(0) = I (used to exercise the audit)."""
    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))


@dataclass(frozen=True)
class ExampleBeta:
    """One-dimensional family x + t + (beta/x) t^2, the identity at x = 0."""
    beta: float


@dataclass(frozen=True)
class Recentred:
    """Sphere pair obtained by rotating a base pair anchored at e1: the map
    at p is g . base_{e1}(g^T v) for a seeded rotation g with g e1 = p."""
    base: object
    rotation_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.base, (Projection, SphereGeodesic)):
            raise ValueError("recentred base must be projection or geodesic")


ParametrizationKind = (Projection, SphereGeodesic, QR, Custom1D, ExampleBeta,
                       Recentred)


@dataclass(frozen=True)
class ParametrizationPair:
    phi: object
    psi: object


def kind_name(kind) -> str:
    return {
        Projection: "projection",
        SphereGeodesic: "sphere_geodesic",
        QR: "qr",
        Custom1D: "custom1d",
        ExampleBeta: "example_beta",
        Recentred: "recentred",
    }[type(kind)]


def pair_label(pair: ParametrizationPair) -> str:
    return "%s+%s" % (kind_name(pair.phi), kind_name(pair.psi))


def kind_valid_on(kind, m: ManifoldDescriptor) -> bool:
    if isinstance(kind, Projection):
        return True
    if isinstance(kind, SphereGeodesic):
        return m.kind == "sphere"
    if isinstance(kind, QR):
        return m.kind in ("sphere", "stiefel", "grassmann")
    if isinstance(kind, (Custom1D, ExampleBeta)):
        return m.kind == "euclidean" and m.n == 1
    if isinstance(kind, Recentred):
        return m.kind == "sphere"
    return False


def recentring_rotation(kind: Recentred, p: Point) -> np.ndarray:
    """Orthogonal g with g e1 = p, deterministic in (p, rotation_seed).

    The stabiliser of e1 leaves g underdetermined; the seed picks a fixed
    rotation of the completion columns."""
    n = p.manifold.n
    cols = _complete_orthonormal([p.ambient], n, n - 1)
    if n > 1:
        rng = SplitMix64(kind.rotation_seed)
        G = rng.gaussians((n - 1) * (n - 1)).reshape(n - 1, n - 1, order="F")
        R = polar_factor(G)
        C = np.column_stack(cols) @ R
        return np.column_stack([p.ambient, C])
    return p.ambient.reshape(1, 1).copy()


def _project_matrix(M: np.ndarray) -> np.ndarray:
    # same expression as linalg.polar_factor, with the validity guard on
    # the smallest singular value checked first
    s, Q = np.linalg.eigh(M.T @ M)
    smin = sqrt(max(float(s[0]), 0.0))
    if smin <= PROJECTION_GUARD:
        raise OutsideValidityRadius(
            "smallest singular value %.3e of p + v under guard %g"
            % (smin, PROJECTION_GUARD))
    return M @ (Q * (1.0 / np.sqrt(s))) @ Q.T


def _apply_kind(kind, v: TangentVector) -> Point:
    p = v.base
    m = p.manifold
    if not kind_valid_on(kind, m):
        raise ManifoldMismatch("%s is not valid on %s" % (kind_name(kind), m.kind))
    if float(np.linalg.norm(v.ambient)) == 0.0:
        return p  # phi_p(0) = p exactly, every kind

    if isinstance(kind, Projection):
        if m.kind == "euclidean":
            return Point(m, p.ambient + v.ambient)
        if m.kind == "sphere":
            w = p.ambient + v.ambient
            nw = np.linalg.norm(w)
            if nw <= PROJECTION_GUARD:
                raise OutsideValidityRadius("norm of p + v under guard")
            return Point(m, w / nw)
        M = (p.ambient + v.ambient).reshape(m.n, m.p, order="F")
        return Point(m, _project_matrix(M).flatten(order="F"))

    if isinstance(kind, SphereGeodesic):
        w = v.ambient
        nw = float(np.linalg.norm(w))
        return Point(m, cos(nw) * p.ambient + sin(nw) * (w / nw))

    if isinstance(kind, QR):
        if m.kind == "sphere":
            M = (p.ambient + v.ambient).reshape(m.n, 1)
        else:
            M = (p.ambient + v.ambient).reshape(m.n, m.p, order="F")
        Q, R = np.linalg.qr(M)
        d = np.diag(R)
        if np.any(d == 0.0):
            raise ProjectionUndefined("rank-deficient QR factor")
        Q = Q * np.sign(d)
        return Point(m, Q.flatten(order="F"))

    if isinstance(kind, Custom1D):
        x = p.ambient[0]
        t = v.ambient[0]
        result = x + t
        tp = t
        for c in kind.coeffs:
            result += c * tp
            tp = tp * t
        return Point(m, np.array([result]))

    if isinstance(kind, ExampleBeta):
        x = p.ambient[0]
        t = v.ambient[0]
        if x == 0.0:
            return Point(m, np.array([x + t]))
        return Point(m, np.array([x + t + (kind.beta / x) * t * t]))

    if isinstance(kind, Recentred):
        g = recentring_rotation(kind, p)
        e1 = np.zeros(m.n)
        e1[0] = 1.0
        w = g.T @ v.ambient
        w[0] = 0.0  # exact tangency at e1; rotation rounding otherwise leaks in
        q = _apply_kind(kind.base, TangentVector(Point(m, e1), w))
        return Point(m, g @ q.ambient)

    raise TypeError("unknown parametrization kind %r" % (kind,))


def apply_phi(pair: ParametrizationPair, v: TangentVector) -> Point:
    return _apply_kind(pair.phi, v)


def apply_psi(pair: ParametrizationPair, v: TangentVector) -> Point:
    return _apply_kind(pair.psi, v)


def _second_order_kind(kind, v: TangentVector) -> np.ndarray:
    """Quadratic Taylor coefficient D^2 phi_p(0)(v, v) in ambient coordinates."""
    p = v.base
    m = p.manifold
    nv = float(np.linalg.norm(v.ambient))
    if nv == 0.0:
        return np.zeros(m.ambient_dim)

    if isinstance(kind, (SphereGeodesic, Recentred)):
        return -(nv * nv) * p.ambient
    if isinstance(kind, Projection):
        if m.kind == "euclidean":
            return np.zeros(m.ambient_dim)
        if m.kind == "sphere":
            return -(nv * nv) * p.ambient
        X = p.as_matrix()
        V = v.as_matrix()
        return (-X @ (V.T @ V)).flatten(order="F")
    if isinstance(kind, Custom1D):
        c2 = kind.coeffs[1] if len(kind.coeffs) >= 2 else 0.0
        t = v.ambient[0]
        return np.array([2.0 * c2 * t * t])
    if isinstance(kind, ExampleBeta):
        x = p.ambient[0]
        if x == 0.0:
            return np.zeros(1)
        t = v.ambient[0]
        return np.array([2.0 * (kind.beta / x) * t * t])

    # central finite differences on the unit direction, rescaled
    u = TangentVector(p, v.ambient / nv)
    h = _EPS ** 0.25 / max(1.0, nv)
    plus = _apply_kind(kind, TangentVector(p, h * u.ambient)).ambient
    minus = _apply_kind(kind, TangentVector(p, -h * u.ambient)).ambient
    return ((plus - 2.0 * p.ambient + minus) / (h * h)) * (nv * nv)


def second_order_term(pair: ParametrizationPair, v: TangentVector) -> np.ndarray:
    return _second_order_kind(pair.phi, v)


@dataclass(frozen=True)
class AuditReport:
    alpha_hat: float
    beta_hat: float
    fitted_slope: float
    identity_residual: float
    dphi_residual: float
    pass_flags: dict = field(compare=False)
    samples_dropped: int = 0
    radii: tuple = ()

    @property
    def all_pass(self) -> bool:
        return all(self.pass_flags.values())


def _sample_base_point(m: ManifoldDescriptor, rng: SplitMix64) -> Point:
    if m.kind == "euclidean":
        # away from 0: the 1-d example kinds have a pole there
        return Point(m, np.array([0.5 + 0.5 * rng.uniform() for _ in range(m.n)]))
    if m.kind == "sphere":
        while True:
            g = rng.gaussians(m.n)
            ng = np.linalg.norm(g)
            if ng > 1e-8:
                return Point(m, g / ng)
    while True:
        G = rng.gaussians(m.n * m.p).reshape(m.n, m.p, order="F")
        try:
            return Point(m, polar_factor(G).flatten(order="F"))
        except RankDeficient:
            continue


def _ls_slope(xs, ys) -> float:
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    dx = xs - xs.mean()
    return float((dx * (ys - ys.mean())).sum() / (dx * dx).sum())


def audit_conditions(pair: ParametrizationPair, m: ManifoldDescriptor,
                     sample_points: int, sample_radii, seed: int) -> AuditReport:
    """Finite-sample audit of the pair's defining conditions.

    Per sampled base point and tangent direction: checks phi_p(0) = p,
    estimates ||D phi_p(0) - I|| by central differences, bounds the
    second-order term, and measures ||psi_p(y) - p - y|| against ||y||^2
    over the given radii. The result is sampling evidence, not a proof:
    finitely many base points cannot rule out non-uniformity between them.
    """
    radii = tuple(float(r) for r in sample_radii)
    if not radii or any(r <= 0 for r in radii):
        raise ValueError("sample_radii must be positive")
    if list(radii) != sorted(radii, reverse=True):
        raise ValueError("sample_radii must be descending")
    if min(radii) < 1e-6:
        raise ValueError("smallest radius must be >= 1e-6")
    if sample_points < 1:
        raise ValueError("sample_points must be >= 1")

    rng = SplitMix64(seed)
    identity_residual = 0.0
    dphi_residual = 0.0
    alpha_hat = 0.0
    beta_hat = 0.0
    dropped = 0
    log_r, log_resid = [], []
    h = _EPS ** (1.0 / 3.0)

    for _ in range(sample_points):
        p = _sample_base_point(m, rng)
        B = tangent_basis(p)
        while True:
            d = B.columns @ rng.gaussians(m.intrinsic_dim)
            nd = np.linalg.norm(d)
            if nd > 1e-12:
                d = d / nd
                break

        q0 = apply_phi(pair, TangentVector(p, np.zeros(m.ambient_dim)))
        identity_residual = max(identity_residual,
                                float(np.linalg.norm(q0.ambient - p.ambient)))

        plus = apply_phi(pair, TangentVector(p, h * d)).ambient
        minus = apply_phi(pair, TangentVector(p, -h * d)).ambient
        fd = (plus - minus) / (2.0 * h)
        dphi_residual = max(dphi_residual, float(np.linalg.norm(fd - d)))

        alpha_hat = max(alpha_hat, float(np.linalg.norm(
            second_order_term(pair, TangentVector(p, d)))))

        for r in radii:
            try:
                q = apply_psi(pair, TangentVector(p, r * d))
            except OutsideValidityRadius:
                dropped += 1
                continue
            resid = float(np.linalg.norm(q.ambient - p.ambient - r * d))
            # the ambient subtraction leaves ~1e-16 rounding residue even
            # when psi is exact (p + y computed then re-subtracted); below
            # this floor the residual is indistinguishable from zero and
            # must not be fitted, or an exact pair fails its own audit
            if resid <= 1e-14:
                continue
            beta_hat = max(beta_hat, resid / (r * r))
            log_r.append(log(r))
            log_resid.append(log(resid))

    # an exact-to-machine psi leaves nothing to fit; the quadratic bound
    # then holds trivially
    fitted_slope = _ls_slope(log_r, log_resid) if len(log_r) >= 2 else float("inf")

    flags = {
        "identity": identity_residual <= 1e-10,
        "dphi": dphi_residual <= 1e-6,
        "slope": fitted_slope >= 1.9,
    }
    return AuditReport(alpha_hat=alpha_hat, beta_hat=beta_hat,
                       fitted_slope=fitted_slope,
                       identity_residual=identity_residual,
                       dphi_residual=dphi_residual, pass_flags=flags,
                       samples_dropped=dropped, radii=radii)
