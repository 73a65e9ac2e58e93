"""Embedded manifolds: Euclidean space, the sphere, Stiefel and Grassmann.

Points and tangent vectors are stored in ambient coordinates; matrix-valued
points are flattened column-major. Grassmann elements are represented by
Stiefel matrices with horizontal tangent vectors (X^T V = 0), so a Grassmann
step is a Stiefel step restricted to the horizontal subspace.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import ManifoldMismatch, ProjectionUndefined, RankDeficient
from .linalg import polar_factor
from .rng import SplitMix64

FEAS_TOL = 1e-10

_KINDS = ("euclidean", "sphere", "stiefel", "grassmann")


@dataclass(frozen=True)
class ManifoldDescriptor:
    kind: str
    n: int
    p: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError("unknown manifold kind %r" % (self.kind,))
        if not (1 <= self.p <= self.n):
            raise ValueError("need 1 <= p <= n, got n=%d p=%d" % (self.n, self.p))
        if self.kind in ("euclidean", "sphere") and self.p != 1:
            raise ValueError("%s takes no p parameter" % self.kind)

    @property
    def ambient_dim(self) -> int:
        return self.n if self.kind in ("euclidean", "sphere") else self.n * self.p

    @property
    def intrinsic_dim(self) -> int:
        if self.kind == "euclidean":
            return self.n
        if self.kind == "sphere":
            return self.n - 1
        if self.kind == "stiefel":
            return self.n * self.p - self.p * (self.p + 1) // 2
        return self.p * (self.n - self.p)

    @property
    def is_matrix(self) -> bool:
        return self.kind in ("stiefel", "grassmann")


def euclidean(n: int) -> ManifoldDescriptor:
    return ManifoldDescriptor("euclidean", n)


def sphere(n: int) -> ManifoldDescriptor:
    return ManifoldDescriptor("sphere", n)


def stiefel(n: int, p: int) -> ManifoldDescriptor:
    return ManifoldDescriptor("stiefel", n, p)


def grassmann(n: int, p: int) -> ManifoldDescriptor:
    return ManifoldDescriptor("grassmann", n, p)


def _freeze(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _feasibility_residual(m: ManifoldDescriptor, x: np.ndarray) -> float:
    if m.kind == "euclidean":
        return 0.0
    if m.kind == "sphere":
        return abs(np.linalg.norm(x) - 1.0)
    X = x.reshape(m.n, m.p, order="F")
    return float(np.linalg.norm(X.T @ X - np.eye(m.p)))


@dataclass(frozen=True, eq=False)
class Point:
    manifold: ManifoldDescriptor
    ambient: np.ndarray

    def __post_init__(self):
        x = _freeze(self.ambient)
        object.__setattr__(self, "ambient", x)
        if x.shape != (self.manifold.ambient_dim,):
            raise ValueError("ambient length %r, expected %d"
                             % (x.shape, self.manifold.ambient_dim))
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite ambient coordinates")
        resid = _feasibility_residual(self.manifold, x)
        if resid > FEAS_TOL:
            raise ValueError("infeasible point: residual %.3e" % resid)

    def as_matrix(self) -> np.ndarray:
        return self.ambient.reshape(self.manifold.n, self.manifold.p, order="F")


def _tangency_residual(m: ManifoldDescriptor, x: np.ndarray, v: np.ndarray) -> float:
    if m.kind == "euclidean":
        return 0.0
    if m.kind == "sphere":
        return abs(float(x @ v))
    X = x.reshape(m.n, m.p, order="F")
    V = v.reshape(m.n, m.p, order="F")
    if m.kind == "stiefel":
        return float(np.linalg.norm(X.T @ V + V.T @ X))
    return float(np.linalg.norm(X.T @ V))  # horizontal space


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: Point
    ambient: np.ndarray

    def __post_init__(self):
        v = _freeze(self.ambient)
        object.__setattr__(self, "ambient", v)
        m = self.base.manifold
        if v.shape != (m.ambient_dim,):
            raise ValueError("ambient length %r, expected %d" % (v.shape, m.ambient_dim))
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite tangent coordinates")
        resid = _tangency_residual(m, self.base.ambient, v)
        # absolute at unit scale, relative beyond (huge near-singular
        # steps would otherwise fail on pure rounding)
        if resid > FEAS_TOL * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("tangency residual %.3e too large" % resid)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.ambient))

    def as_matrix(self) -> np.ndarray:
        m = self.base.manifold
        return self.ambient.reshape(m.n, m.p, order="F")


@dataclass(frozen=True, eq=False)
class TangentBasis:
    base: Point
    columns: np.ndarray  # ambient_dim x intrinsic_dim, orthonormal

    def __post_init__(self):
        B = _freeze(self.columns)
        object.__setattr__(self, "columns", B)
        m = self.base.manifold
        if B.shape != (m.ambient_dim, m.intrinsic_dim):
            raise ValueError("basis shape %r, expected %r"
                             % (B.shape, (m.ambient_dim, m.intrinsic_dim)))
        if np.linalg.norm(B.T @ B - np.eye(B.shape[1])) > FEAS_TOL:
            raise ValueError("basis columns not orthonormal")


def _complete_orthonormal(cols, n: int, want: int):
    """Extend `cols` (orthonormal ambient vectors) by `want` more columns.

    Candidates are the standard basis vectors; each step picks the one with
    the largest residual and re-orthogonalises twice. Pivoting matters: a
    first-axis-above-threshold sweep cancels catastrophically when the
    existing columns nearly align with coordinate axes, and losses of ~1e-7
    there poison every pullback gradient downstream. Pivot order is a pure
    function of the inputs, so the completion is deterministic.
    """
    kept = list(cols)
    out = []
    resid = [np.eye(n)[i].copy() for i in range(n)]
    for c in resid:
        for u in kept:
            c -= (c @ u) * u
    chosen = set()
    while len(out) < want:
        norms = sorted((-np.linalg.norm(resid[i]), i)
                       for i in range(n) if i not in chosen)
        i = norms[0][1]
        chosen.add(i)
        v = resid[i]
        for _ in range(2):
            for u in kept + out:
                v = v - (v @ u) * u
        v = v / np.linalg.norm(v)
        out.append(v)
        for j in range(n):
            if j not in chosen:
                resid[j] = resid[j] - (resid[j] @ v) * v
    return out


def tangent_basis(p: Point) -> TangentBasis:
    """Deterministic orthonormal basis of the tangent (Grassmann: horizontal)
    space at p, as ambient columns."""
    m = p.manifold
    if m.kind == "euclidean":
        return TangentBasis(p, np.eye(m.n))
    if m.kind == "sphere":
        cols = _complete_orthonormal([p.ambient], m.n, m.n - 1)
        return TangentBasis(p, np.column_stack(cols))
    X = p.as_matrix()
    n, pp = m.n, m.p
    cols = []
    if m.kind == "stiefel":
        for i in range(pp):
            for j in range(i + 1, pp):
                V = np.zeros_like(X)
                V[:, j] = X[:, i] / sqrt(2.0)
                V[:, i] = -X[:, j] / sqrt(2.0)
                cols.append(V)
    perp = _complete_orthonormal([X[:, k] for k in range(pp)], n, n - pp)
    for b in range(pp):
        for a in range(n - pp):
            V = np.zeros_like(X)
            V[:, b] = perp[a]
            cols.append(V)
    flat = np.column_stack([V.flatten(order="F") for V in cols])
    return TangentBasis(p, flat)


def project_to_manifold(m: ManifoldDescriptor, ambient) -> Point:
    """Euclidean-closest feasible point for the given ambient coordinates."""
    x = np.asarray(ambient, dtype=float)
    if m.kind == "euclidean":
        return Point(m, x)
    if m.kind == "sphere":
        nx = np.linalg.norm(x)
        if nx == 0.0:
            raise ProjectionUndefined("cannot project the zero vector")
        return Point(m, x / nx)
    M = x.reshape(m.n, m.p, order="F")
    try:
        U = polar_factor(M)
    except RankDeficient as exc:
        raise ProjectionUndefined(str(exc)) from exc
    return Point(m, U.flatten(order="F"))


def distance(p: Point, q: Point) -> float:
    """Ambient chordal distance; Grassmann uses projector distance
    ||XX^T - YY^T||_F, which is representative-independent."""
    if p.manifold != q.manifold:
        raise ManifoldMismatch("points on different manifolds")
    if p.manifold.kind == "grassmann":
        X, Y = p.as_matrix(), q.as_matrix()
        return float(np.linalg.norm(X @ X.T - Y @ Y.T))
    return float(np.linalg.norm(p.ambient - q.ambient))


def random_point(m: ManifoldDescriptor, seed: int) -> Point:
    """Seed-deterministic point: normalised (sphere) or polar-projected
    (Stiefel/Grassmann) gaussian draw; plain gaussian for Euclidean."""
    rng = SplitMix64(seed)
    if m.kind == "euclidean":
        return Point(m, rng.gaussians(m.n))
    if m.kind == "sphere":
        while True:
            g = rng.gaussians(m.n)
            ng = np.linalg.norm(g)
            if ng > 1e-6:
                return Point(m, g / ng)
    while True:
        G = rng.gaussians(m.n * m.p).reshape(m.n, m.p, order="F")
        try:
            U = polar_factor(G)
        except RankDeficient:
            continue
        return Point(m, U.flatten(order="F"))
