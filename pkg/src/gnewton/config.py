"""Experiment configuration: JSON parsing, cross-validation, assembly.

A config is a single JSON document with a required "version": 1. Every
validation failure raises ConfigError with a message that names the
offending key, so batch runs fail loudly and specifically.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import costs as costs_mod
from . import newton as newton_mod
from . import parametrizations as par_mod
from .errors import ConfigError, SingularHessian
from .linalg import symmetric_eigen, symmetric_solve
from .manifolds import (ManifoldDescriptor, Point, project_to_manifold,
                        random_point, tangent_basis)
from .rng import SplitMix64

_MANIFOLD_KINDS = ("euclidean", "sphere", "stiefel", "grassmann")
_COST_KINDS = ("quadratic", "brockett", "grassmann_trace", "abs_power",
               "shifted_cubic")
_TOP_KEYS = {"version", "manifold", "cost", "pairs", "selector", "x0",
             "max_iter", "tol", "rate_floor", "rate_ceil", "audit"}


@dataclass(frozen=True, eq=False)
class Experiment:
    config: dict
    manifold: ManifoldDescriptor
    cost: object
    pairs: tuple
    selector: object
    x0: Point
    truth: Point  # or None when the cost kind admits no closed-form truth
    max_iter: int
    tol: float
    rate_floor: float
    rate_ceil: float


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    return cfg


def _need(cfg, key, types, where=""):
    name = where + key
    if key not in cfg:
        raise ConfigError("%s: missing" % name)
    v = cfg[key]
    if not isinstance(v, types):
        raise ConfigError("%s: wrong type %s" % (name, type(v).__name__))
    # bools pass isinstance(int) checks; never what a config means here
    if isinstance(v, bool):
        raise ConfigError("%s: wrong type bool" % name)
    return v


def _parse_matrix(spec, key):
    if isinstance(spec, str):
        if not spec.startswith("diag:"):
            raise ConfigError("%s: string form must be \"diag:...\"" % key)
        try:
            d = [float(t) for t in spec[len("diag:"):].split(",")]
        except ValueError as exc:
            raise ConfigError("%s: bad diagonal entry" % key) from exc
        return np.diag(d)
    if isinstance(spec, list):
        try:
            A = np.array(spec, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError("%s: not a numeric matrix" % key) from exc
        if A.ndim != 2:
            raise ConfigError("%s: expected a list of rows" % key)
        return A
    raise ConfigError("%s: expected matrix rows or \"diag:...\"" % key)


def _build_manifold(cfg) -> ManifoldDescriptor:
    spec = _need(cfg, "manifold", dict)
    kind = _need(spec, "kind", str, "manifold.")
    if kind not in _MANIFOLD_KINDS:
        raise ConfigError("manifold.kind: unknown kind %r" % kind)
    n = _need(spec, "n", int, "manifold.")
    if n < 1:
        raise ConfigError("manifold.n: must be >= 1")
    p = 1
    if kind in ("stiefel", "grassmann"):
        p = _need(spec, "p", int, "manifold.")
        if not (1 <= p <= n):
            raise ConfigError("manifold.p: need 1 <= p <= n")
    elif "p" in spec:
        raise ConfigError("manifold.p: not a parameter of %s" % kind)
    return ManifoldDescriptor(kind, n, p)


def _build_cost(cfg, m: ManifoldDescriptor):
    spec = _need(cfg, "cost", dict)
    kind = _need(spec, "kind", str, "cost.")
    if kind not in _COST_KINDS:
        raise ConfigError("cost.kind: unknown kind %r" % kind)
    try:
        if kind == "quadratic":
            A = _parse_matrix(_need(spec, "A", (str, list), "cost."), "cost.A")
            b = None
            if "b" in spec:
                b = np.array(_need(spec, "b", list, "cost."), dtype=float)
            c = costs_mod.Quadratic(A, b)
            if m.kind not in ("euclidean", "sphere") or m.n != A.shape[0]:
                raise ConfigError("cost.kind: quadratic needs euclidean or "
                                  "sphere with n matching A")
        elif kind == "brockett":
            A = _parse_matrix(_need(spec, "A", (str, list), "cost."), "cost.A")
            N = _parse_matrix(_need(spec, "N", (str, list), "cost."), "cost.N")
            c = costs_mod.BrockettTrace(A, N)
            if m.kind != "stiefel" or m.n != A.shape[0] or m.p != N.shape[0]:
                raise ConfigError("cost.kind: brockett needs stiefel with "
                                  "matching n, p")
        elif kind == "grassmann_trace":
            A = _parse_matrix(_need(spec, "A", (str, list), "cost."), "cost.A")
            c = costs_mod.GrassmannTrace(A)
            if m.kind != "grassmann" or m.n != A.shape[0]:
                raise ConfigError("cost.kind: grassmann_trace needs grassmann "
                                  "with n matching A")
        elif kind == "abs_power":
            c = costs_mod.AbsPower()
            if m.kind != "euclidean" or m.n != 1:
                raise ConfigError("cost.kind: abs_power needs euclidean n=1")
        else:
            z = _need(spec, "z", (int, float), "cost.")
            c = costs_mod.ShiftedCubic(float(z))
            if m.kind != "euclidean" or m.n != 1:
                raise ConfigError("cost.kind: shifted_cubic needs euclidean n=1")
    except ValueError as exc:
        raise ConfigError("cost: %s" % exc) from exc
    return c


def _build_kind(spec, key):
    if not isinstance(spec, dict):
        raise ConfigError("%s: expected an object" % key)
    kind = _need(spec, "kind", str, key + ".")
    try:
        if kind == "projection":
            return par_mod.Projection()
        if kind == "sphere_geodesic":
            return par_mod.SphereGeodesic()
        if kind == "qr":
            return par_mod.QR()
        if kind == "custom1d":
            coeffs = spec.get("coeffs", [])
            if not isinstance(coeffs, list):
                raise ConfigError("%s.coeffs: expected a list" % key)
            return par_mod.Custom1D(tuple(coeffs))
        if kind == "example_beta":
            beta = _need(spec, "beta", (int, float), key + ".")
            return par_mod.ExampleBeta(float(beta))
        if kind == "recentred":
            base = _build_kind(_need(spec, "base", dict, key + "."), key + ".base")
            seed = spec.get("rotation_seed", 0)
            if isinstance(seed, bool) or not isinstance(seed, int):
                raise ConfigError("%s.rotation_seed: expected an integer" % key)
            return par_mod.Recentred(base, seed)
    except ValueError as exc:
        raise ConfigError("%s: %s" % (key, exc)) from exc
    raise ConfigError("%s.kind: unknown kind %r" % (key, kind))


def _build_pairs(cfg, m: ManifoldDescriptor) -> tuple:
    specs = _need(cfg, "pairs", list)
    if not specs:
        raise ConfigError("pairs: must be non-empty")
    pairs = []
    for i, ps in enumerate(specs):
        key = "pairs[%d]" % i
        if not isinstance(ps, dict):
            raise ConfigError("%s: expected an object" % key)
        phi = _build_kind(_need(ps, "phi", dict, key + "."), key + ".phi")
        psi = _build_kind(_need(ps, "psi", dict, key + "."), key + ".psi")
        for role, kind in (("phi", phi), ("psi", psi)):
            if not par_mod.kind_valid_on(kind, m):
                raise ConfigError("%s.%s.kind: %s is not valid on %s"
                                  % (key, role, par_mod.kind_name(kind), m.kind))
        pairs.append(par_mod.ParametrizationPair(phi, psi))
    return tuple(pairs)


def _build_selector(cfg, pairs, seed_override):
    spec = _need(cfg, "selector", dict)
    kind = _need(spec, "kind", str, "selector.")
    if kind == "fixed":
        return newton_mod.Fixed(pairs[0])
    if kind == "round_robin":
        return newton_mod.RoundRobin(pairs)
    if kind == "random":
        seed = _need(spec, "seed", int, "selector.")
        if seed_override is not None:
            seed = seed_override
        return newton_mod.Random(pairs, seed)
    if kind == "path":
        rule = _need(spec, "rule", str, "selector.")
        if rule not in ("alternate-on-repeat", "distance-keyed"):
            raise ConfigError("selector.rule: unknown rule %r" % rule)
        return newton_mod.PathDependent(rule, pairs)
    raise ConfigError("selector.kind: unknown kind %r" % kind)


def compute_truth(m: ManifoldDescriptor, cost):
    """Closed-form minimiser where the cost kind admits one, else None.

    Rayleigh (quadratic on the sphere): eigenvector of the smallest
    eigenvalue. Brockett: eigenvectors assigned so the largest N weight
    pairs with the smallest eigenvalue. Grassmann trace: the minor subspace.
    Column signs are convention-fixed; callers comparing against a finished
    run should re-sign via match_truth_signs.
    """
    if isinstance(cost, costs_mod.Quadratic):
        if m.kind == "sphere":
            _, V = symmetric_eigen(cost.A)
            return Point(m, V[:, 0])
        try:
            x = symmetric_solve(cost.A, -cost.b)
        except SingularHessian:
            return None
        return Point(m, x)
    if isinstance(cost, costs_mod.BrockettTrace):
        _, V = symmetric_eigen(cost.A)
        order = np.argsort(-np.diag(cost.N))
        X = np.zeros((m.n, m.p))
        for i in range(m.p):
            X[:, order[i]] = V[:, i]
        return Point(m, X.flatten(order="F"))
    if isinstance(cost, costs_mod.GrassmannTrace):
        _, V = symmetric_eigen(cost.A)
        return Point(m, V[:, :m.p].flatten(order="F"))
    if isinstance(cost, costs_mod.AbsPower):
        return Point(m, np.zeros(1))
    if isinstance(cost, costs_mod.ShiftedCubic):
        return Point(m, np.array([cost.z]))
    return None


def match_truth_signs(truth: Point, final: Point) -> Point:
    """Resolve sign ambiguity in an eigenvector truth against an iterate.

    A Rayleigh minimiser is only defined up to sign, and each column of a
    Brockett minimiser independently so. Flip whatever brings truth onto the
    branch the iteration actually landed on; other manifolds are returned
    unchanged (the Grassmann distance is representative-independent).
    """
    m = truth.manifold
    if m.kind == "sphere":
        if float(np.dot(truth.ambient, final.ambient)) < 0.0:
            return Point(m, -truth.ambient)
        return truth
    if m.kind == "stiefel":
        T = truth.as_matrix().copy()
        F = final.as_matrix()
        for j in range(m.p):
            if float(np.dot(T[:, j], F[:, j])) < 0.0:
                T[:, j] = -T[:, j]
        return Point(m, T.flatten(order="F"))
    return truth


def near_truth_start(m: ManifoldDescriptor, truth: Point, delta: float,
                     seed: int) -> Point:
    """Truth perturbed along a seeded unit tangent direction by delta,
    projected back to the manifold."""
    rng = SplitMix64(seed)
    B = tangent_basis(truth)
    d = B.columns @ rng.gaussians(m.intrinsic_dim)
    d = d / np.linalg.norm(d)
    return project_to_manifold(m, truth.ambient + delta * d)


def _build_x0(cfg, m, truth, seed_override) -> Point:
    spec = _need(cfg, "x0", (list, str))
    if isinstance(spec, list):
        try:
            return Point(m, np.array(spec, dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError("x0: %s" % exc) from exc
    parts = spec.split(":")
    if parts[0] == "random":
        if len(parts) != 2:
            raise ConfigError("x0: expected \"random:SEED\"")
        try:
            seed = int(parts[1])
        except ValueError as exc:
            raise ConfigError("x0: bad seed %r" % parts[1]) from exc
        if seed_override is not None:
            seed = seed_override
        return random_point(m, seed)
    if parts[0] == "near-truth":
        if len(parts) not in (2, 3):
            raise ConfigError("x0: expected \"near-truth:DELTA[:SEED]\"")
        try:
            delta = float(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else 0
        except ValueError as exc:
            raise ConfigError("x0: bad near-truth parameters") from exc
        if not delta > 0:
            raise ConfigError("x0: near-truth delta must be positive")
        if seed_override is not None:
            seed = seed_override
        if truth is None:
            raise ConfigError("x0: near-truth needs a cost with closed-form "
                              "truth")
        return near_truth_start(m, truth, delta, seed)
    raise ConfigError("x0: unknown spec %r" % spec)


def build_experiment(cfg: dict, seed_override=None) -> Experiment:
    unknown = sorted(set(cfg) - _TOP_KEYS)
    if unknown:
        raise ConfigError("%s: unknown key" % unknown[0])
    version = _need(cfg, "version", int)
    if version != 1:
        raise ConfigError("version: expected 1, got %r" % (version,))

    m = _build_manifold(cfg)
    cost = _build_cost(cfg, m)
    pairs = _build_pairs(cfg, m)
    selector = _build_selector(cfg, pairs, seed_override)

    max_iter = _need(cfg, "max_iter", int)
    if max_iter < 1:
        raise ConfigError("max_iter: must be >= 1")
    tol = _need(cfg, "tol", (int, float))
    if not tol > 0:
        raise ConfigError("tol: must be positive")
    floor = cfg.get("rate_floor", 1e-12)
    ceil = cfg.get("rate_ceil", 1e-1)
    if isinstance(floor, bool) or not isinstance(floor, (int, float)):
        raise ConfigError("rate_floor: wrong type")
    if isinstance(ceil, bool) or not isinstance(ceil, (int, float)):
        raise ConfigError("rate_ceil: wrong type")
    if not (0 <= float(floor) < float(ceil)):
        raise ConfigError("rate_floor: need 0 <= floor < ceil")

    truth = compute_truth(m, cost)
    x0 = _build_x0(cfg, m, truth, seed_override)

    return Experiment(config=cfg, manifold=m, cost=cost, pairs=pairs,
                      selector=selector, x0=x0, truth=truth,
                      max_iter=max_iter, tol=float(tol),
                      rate_floor=float(floor), rate_ceil=float(ceil))


def build_audit_setup(cfg: dict, seed_override=None):
    """Manifold, pairs and audit parameters for an audit-only config.

    Audit configs need version, manifold and pairs; cost/x0/selector keys
    from a full run config are tolerated and ignored, so the same file can
    drive both subcommands.
    """
    unknown = sorted(set(cfg) - _TOP_KEYS)
    if unknown:
        raise ConfigError("%s: unknown key" % unknown[0])
    version = _need(cfg, "version", int)
    if version != 1:
        raise ConfigError("version: expected 1, got %r" % (version,))
    m = _build_manifold(cfg)
    pairs = _build_pairs(cfg, m)
    return m, pairs, build_audit_params(cfg, seed_override)


def build_audit_params(cfg: dict, seed_override=None):
    """(sample_points, radii, seed) for an audit config."""
    spec = cfg.get("audit", {})
    if not isinstance(spec, dict):
        raise ConfigError("audit: expected an object")
    points = spec.get("sample_points", 20)
    if isinstance(points, bool) or not isinstance(points, int) or points < 1:
        raise ConfigError("audit.sample_points: expected a positive integer")
    radii = spec.get("radii", [1e-1, 1e-2, 1e-3])
    if (not isinstance(radii, list) or not radii
            or not all(isinstance(r, (int, float)) and not isinstance(r, bool)
                       for r in radii)):
        raise ConfigError("audit.radii: expected a list of numbers")
    seed = spec.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("audit.seed: expected an integer")
    if seed_override is not None:
        seed = seed_override
    return points, [float(r) for r in radii], seed
