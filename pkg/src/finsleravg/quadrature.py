"""Fiberwise integration domains and measures.

Four domains live in a single tangent space ``T_xM``:

* ``sphere``      the Euclidean unit sphere, standing for the projective
                  sphere of rays, with density ``sqrt|det g|`` against the
                  round measure;
* ``indicatrix``  ``{F = 1}`` of a positive structure, parameterized radially;
* ``hyperboloid`` the future branch of ``{L = -1}``, in a generalized
                  rapidity parameterization truncated at ``t <= T``;
* ``slab``        ``{|y^a| <= r}`` intersected with a box, a small ball about
                  the origin removed.

All carry the induced measure of ``sqrt|det g| d^n y`` contracted with the
Liouville field ``y^i d/dy^i``, plus a 0-homogeneous weight ``psi**2``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_gegenbauer

from . import expr as ex
from .finsler import fiber_jet, metric_batch, is_degenerate, DegenerateMetricError, _point
from .lagrangians import POSITIVE


class EmptyHyperboloidError(ValueError):
    """No timelike direction is available to build the unit hyperboloid."""


@dataclass(frozen=True)
class WeightSpec:
    """``unit`` gives ``psi**2 = 1``; ``homogeneous-L-power`` gives
    ``psi**2 = (|L(x,y)| / sum_i y_i**2)**power`` (``power=None`` means ``n``).

    The power family is coordinate dependent, vanishes on the light cone and
    decays like ``exp(-2*power*t)`` along the hyperboloid rapidity ``t``.
    """

    family: str = "homogeneous-L-power"
    power: int = None

    def __post_init__(self):
        if self.family not in ("unit", "homogeneous-L-power"):
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.power is not None and (int(self.power) != self.power or self.power < 1):
            raise ValueError("weight power must be a positive integer")

    def resolved_power(self, n):
        return n if self.power is None else int(self.power)

    def psi2(self, lag, x, ys):
        ys = np.asarray(ys, dtype=float)
        if self.family == "unit":
            return np.ones(ys.shape[:-1])
        L = lag.scale * np.asarray(ex.evaluate(lag.expr, x, ys), dtype=float)
        L = np.broadcast_to(L, ys.shape[:-1])
        return (np.abs(L) / np.sum(ys * ys, axis=-1)) ** self.resolved_power(lag.n)


UNIT = WeightSpec("unit")


@dataclass
class QuadratureDomain:
    kind: str
    x: np.ndarray
    nodes: np.ndarray
    measure_weights: np.ndarray
    psi2: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.nodes)


@dataclass(frozen=True)
class Integral:
    integral: np.ndarray
    normalizer: float
    average: np.ndarray


# ---------------------------------------------------------------------------
# reduction and integration


def pairwise_sum(a):
    """Sum over axis 0 with a fixed pairwise tree, independent of numpy internals."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:])
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:])])
        a = a[0::2] + a[1::2]
    return a[0]


def integrate(domain, f):
    """Weighted integral, normalizer and average of node values ``f``.

    ``f`` has the node axis first and any trailing tensor shape.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != domain.size:
        raise ValueError(f"expected {domain.size} node values, got {f.shape[0]}")
    bad = ~np.isfinite(f.reshape(f.shape[0], -1)).all(axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"non-finite integrand at node {i}, y={domain.nodes[i].tolist()}")
    w = domain.psi2 * domain.measure_weights
    integral = pairwise_sum(w.reshape((-1,) + (1,) * (f.ndim - 1)) * f)
    normalizer = float(pairwise_sum(w))
    if normalizer <= 0:
        raise ValueError("weighted domain volume is not positive")
    return Integral(integral, normalizer, integral / normalizer)


# ---------------------------------------------------------------------------
# densities and round spheres


def fiber_density(lag, p, mode=None):
    """``sqrt|det g(x, y)|``, the density of the fiber volume form."""
    from .finsler import _with_mode

    p = _point(p)
    g = fiber_jet(_with_mode(lag, mode), p.x, p.y, order=2).g
    if is_degenerate(g):
        raise DegenerateMetricError(f"degenerate metric at x={p.x.tolist()}, y={p.y.tolist()}", p.x, p.y)
    return float(np.sqrt(abs(np.linalg.det(g))))


def density_batch(g):
    return np.sqrt(np.abs(np.linalg.det(g)))


def sphere_grid(d, resolution):
    """Nodes and round-measure weights on the unit sphere ``S^d`` in ``R^(d+1)``.

    ``S^1`` uses ``2*resolution`` equispaced angles (half-step offset).  Higher
    spheres recurse as ``(z, sqrt(1 - z^2) p)`` with Gauss-Gegenbauer nodes in
    ``z`` for the weight ``(1 - z^2)^((d-2)/2)``.  ``S^0`` is ``{+1, -1}``.
    """
    if d == 0:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if resolution < 2:
        raise ValueError("sphere resolution must be at least 2")
    if d == 1:
        m = 2 * resolution
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 2.0 * np.pi / m)
    z, wz = roots_gegenbauer(resolution, (d - 1) / 2.0)
    sub, wsub = sphere_grid(d - 1, resolution)
    rho = np.sqrt(1.0 - z * z)
    nodes = np.concatenate(
        [np.column_stack([np.full(len(sub), zi), ri * sub]) for zi, ri in zip(z, rho)]
    )
    weights = np.concatenate([wi * wsub for wi in wz])
    return nodes, weights


def sphere_area(d):
    from math import gamma, pi

    return 2.0 * pi ** ((d + 1) / 2.0) / gamma((d + 1) / 2.0)


def _checked_density(lag, x, ys, kind):
    g = metric_batch(lag, x, ys)
    bad = np.atleast_1d(is_degenerate(g))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateMetricError(
            f"degenerate metric on {kind} node {i}, y={ys[i].tolist()}", x, ys[i]
        )
    return density_batch(g)


def build_sphere_domain(lag, x, resolution, weight=UNIT):
    x = np.asarray(x, dtype=float)
    nodes, wsph = sphere_grid(lag.n - 1, resolution)
    dens = _checked_density(lag, x, nodes, "sphere")
    return QuadratureDomain(
        "sphere",
        x,
        nodes,
        wsph * dens,
        weight.psi2(lag, x, nodes),
        {"resolution": int(resolution), "nodes": len(nodes), "weight": weight.family},
    )


def build_indicatrix_domain(lag, x, resolution, weight=UNIT):
    """Indicatrix ``{F = 1}`` of a positive structure, ``y = omega / F(omega)``."""
    if lag.mode != POSITIVE:
        raise ValueError("the indicatrix is defined for positive structures only")
    x = np.asarray(x, dtype=float)
    omega, wsph = sphere_grid(lag.n - 1, resolution)
    F = np.sqrt(2.0 * lag.scale * np.asarray(ex.evaluate(lag.expr, x, omega), dtype=float))
    nodes = omega / F[:, None]
    dens = _checked_density(lag, x, omega, "indicatrix")
    return QuadratureDomain(
        "indicatrix",
        x,
        nodes,
        wsph * dens * F ** (-lag.n),
        weight.psi2(lag, x, nodes),
        {"resolution": int(resolution), "nodes": len(nodes), "weight": weight.family},
    )


# ---------------------------------------------------------------------------
# unit hyperboloid


def _working_L(lag, x, ys):
    L = lag.scale * np.asarray(ex.evaluate(lag.expr, x, ys), dtype=float)
    return np.broadcast_to(L, np.asarray(ys).shape[:-1])


def adapted_frame(lag, x, X):
    """Frame ``E`` (columns ``e0 .. e_{n-1}``) orthonormal for ``g(x, X)``, ``e0 ~ X``."""
    X = np.asarray(X, dtype=float)
    if not np.any(X):
        raise EmptyHyperboloidError("orientation vector is zero")
    g0 = metric_batch(lag, x, X)
    q = X @ g0 @ X
    if not q < 0:
        raise EmptyHyperboloidError(
            f"orientation vector {X.tolist()} is not timelike at x={np.asarray(x).tolist()} (g(X,X)={q!r})"
        )
    frame = [X / np.sqrt(-q)]
    signs = [-1.0]
    for b in np.eye(lag.n):
        v = b.copy()
        for e, s in zip(frame, signs):
            v = v - s * (e @ g0 @ v) * e
        nv = v @ g0 @ v
        if nv > 1e-10 * max(1.0, np.abs(g0).max()):
            frame.append(v / np.sqrt(nv))
            signs.append(1.0)
        if len(frame) == lag.n:
            break
    if len(frame) != lag.n:
        raise EmptyHyperboloidError("g(x, X) does not have Lorentzian signature")
    return np.column_stack(frame)


def light_speeds(lag, x, e0, spatial, iterations=80):
    """Slope ``k`` of the light cone along ``e0 + k*w`` for each spatial direction ``w``.

    Vectorized bisection on the angle in the ``(e0, w)`` half-plane.
    """
    if np.any(_working_L(lag, x, spatial) <= 0):
        raise EmptyHyperboloidError("some frame direction orthogonal to X is not spacelike")
    lo = np.zeros(len(spatial))
    hi = np.full(len(spatial), 0.5 * np.pi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        dirs = np.cos(mid)[:, None] * e0 + np.sin(mid)[:, None] * spatial
        timelike = _working_L(lag, x, dirs) < 0
        lo = np.where(timelike, mid, lo)
        hi = np.where(timelike, hi, mid)
    return np.tan(lo)


def _hyperboloid_nodes(lag, x, E, t, wt, omega, womega, k):
    """Nodes and induced-measure weights for rapidities ``t`` and spatial directions."""
    n = lag.n
    e0 = E[:, 0]
    spatial = omega @ E[:, 1:].T
    T, O = np.meshgrid(np.arange(len(t)), np.arange(len(omega)), indexing="ij")
    T, O = T.ravel(), O.ravel()
    u = np.cosh(t[T])[:, None] * e0 + (k[O] * np.sinh(t[T]))[:, None] * spatial[O]
    Lu = _working_L(lag, x, u)
    if np.any(Lu >= 0):
        raise EmptyHyperboloidError("rapidity parameterization left the timelike cone")
    nodes = u / np.sqrt(-Lu)[:, None]
    dens = density_batch(metric_batch(lag, x, u))
    jac = abs(np.linalg.det(E)) * k[O] ** (n - 1) * np.sinh(t[T]) ** (n - 2)
    weights = wt[T] * womega[O] * dens * (-Lu) ** (-n / 2.0) * jac
    return nodes, weights


MAX_TRUNCATION = 12.0
TAIL_WINDOW = 4.0


def build_hyperboloid_domain(
    lag, x, X, truncation=8.0, nodes_t=128, nodes_sphere=16, weight=None, both_branches=False
):
    """Future branch (relative to ``X``) of the unit hyperboloid ``L(x, y) = -1``.

    Parameterization ``y ~ cosh(t) e0 + k(w) sinh(t) w`` in a frame adapted to
    ``g(x, X)``, with ``k(w)`` the light-cone slope along ``w``, radially
    rescaled onto ``L = -1``; for Minkowski this is the usual rapidity.  ``t``
    runs over ``[0, truncation]`` with Gauss-Legendre nodes and ``w`` over the
    unit sphere of the spatial block.

    ``L`` at a node of rapidity ``t`` carries a rounding error of order
    ``eps * exp(2t)``, so rapidities beyond about 16 cannot be resolved in
    double precision.  Hence ``truncation <= MAX_TRUNCATION`` and the tail
    estimate integrates over ``[T, T + TAIL_WINDOW]``.
    """
    if not 0 < truncation <= MAX_TRUNCATION:
        raise ValueError(f"truncation must lie in (0, {MAX_TRUNCATION}]")
    weight = WeightSpec() if weight is None else weight
    x = np.asarray(x, dtype=float)
    n = lag.n
    E = adapted_frame(lag, x, X)
    omega, womega = sphere_grid(n - 2, nodes_sphere)
    z, wz = np.polynomial.legendre.leggauss(nodes_t)
    t = 0.5 * truncation * (z + 1.0)
    wt = 0.5 * truncation * wz

    branches = [E] if not both_branches else [E, E * np.r_[-1.0, np.ones(n - 1)]]
    all_nodes, all_weights = [], []
    for F in branches:
        k = light_speeds(lag, x, F[:, 0], omega @ F[:, 1:].T)
        nodes, weights = _hyperboloid_nodes(lag, x, F, t, wt, omega, womega, k)
        all_nodes.append(nodes)
        all_weights.append(weights)
    nodes = np.concatenate(all_nodes)
    weights = np.concatenate(all_weights)
    psi2 = weight.psi2(lag, x, nodes)

    # tail beyond the truncation, [T, T + TAIL_WINDOW], same construction
    zt, wzt = np.polynomial.legendre.leggauss(32)
    tt = truncation + 0.5 * TAIL_WINDOW * (zt + 1.0)
    wtt = 0.5 * TAIL_WINDOW * wzt
    tail = 0.0
    for F in branches:
        k = light_speeds(lag, x, F[:, 0], omega @ F[:, 1:].T)
        tn, tw = _hyperboloid_nodes(lag, x, F, tt, wtt, omega, womega, k)
        tail += float(pairwise_sum(tw * weight.psi2(lag, x, tn)))
    volume = float(pairwise_sum(weights * psi2))

    Lmax = np.abs(_working_L(lag, x, nodes) + 1.0) / np.maximum(1.0, np.sum(nodes * nodes, axis=1))
    jetL = fiber_jet(lag, x, nodes, order=2).dL
    future = (jetL @ np.asarray(X, dtype=float)) < 0
    return QuadratureDomain(
        "hyperboloid",
        x,
        nodes,
        weights,
        psi2,
        {
            "truncation": float(truncation),
            "nodes_t": int(nodes_t),
            "nodes_sphere": int(nodes_sphere),
            "nodes": len(nodes),
            "weight": weight.family,
            "power": weight.resolved_power(n) if weight.family != "unit" else None,
            "both_branches": bool(both_branches),
            "tail_estimate": tail,
            "relative_tail": tail / volume if volume > 0 else float("inf"),
            "level_set_residual": float(Lmax.max()),
            "future_fraction": float(np.mean(future[: len(all_nodes[0])])),
        },
    )


# ---------------------------------------------------------------------------
# slab


def build_slab_domain(lag, x, r, weight=None, box=10.0, nodes_per_axis=16, axis=0, ball=1e-3):
    """Product Gauss-Legendre grid on ``|y^axis| <= r``, other coordinates in ``[-box, box]``."""
    if r <= 0:
        raise ValueError("slab half-width r must be positive")
    weight = WeightSpec() if weight is None else weight
    x = np.asarray(x, dtype=float)
    n = lag.n
    z, wz = np.polynomial.legendre.leggauss(nodes_per_axis)
    axes = []
    for a in range(n):
        half = r if a == axis else box
        axes.append((half * z, half * wz))
    grids = np.meshgrid(*[p for p, _ in axes], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in axes], indexing="ij")
    nodes = np.column_stack([gr.ravel() for gr in grids])
    wprod = np.prod(np.column_stack([wg.ravel() for wg in wgrids]), axis=1)
    keep = np.linalg.norm(nodes, axis=1) > ball
    nodes, wprod = nodes[keep], wprod[keep]
    dens = _checked_density(lag, x, nodes, "slab")
    return QuadratureDomain(
        "slab",
        x,
        nodes,
        wprod * dens,
        weight.psi2(lag, x, nodes),
        {
            "r": float(r),
            "box": float(box),
            "axis": int(axis),
            "nodes_per_axis": int(nodes_per_axis),
            "nodes": len(nodes),
            "weight": weight.family,
        },
    )


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class QuadratureConfig:
    sphere_nodes: int = 24
    truncation: float = 8.0
    nodes_t: int = 128
    nodes_sphere: int = 16
    both_branches: bool = False
    weight: WeightSpec = WeightSpec()
    slab_r: float = 5.0
    slab_box: float = 10.0
    slab_nodes_per_axis: int = 16
    slab_axis: int = 0

    @classmethod
    def from_dict(cls, block):
        block = dict(block or {})
        hyp = dict(block.pop("hyperboloid", {}) or {})
        wt = dict(block.pop("weight", {}) or {})
        slab = dict(block.pop("slab", {}) or {})
        kwargs = {}
        if "sphere_nodes" in block:
            kwargs["sphere_nodes"] = int(block.pop("sphere_nodes"))
        for key, name, conv in (
            ("truncation", "truncation", float),
            ("nodes_t", "nodes_t", int),
            ("nodes_sphere", "nodes_sphere", int),
            ("both_branches", "both_branches", bool),
        ):
            if key in hyp:
                kwargs[name] = conv(hyp.pop(key))
        for key, name, conv in (
            ("r", "slab_r", float),
            ("box", "slab_box", float),
            ("nodes_per_axis", "slab_nodes_per_axis", int),
            ("axis", "slab_axis", int),
        ):
            if key in slab:
                kwargs[name] = conv(slab.pop(key))
        if wt:
            power = wt.pop("power", None)
            kwargs["weight"] = WeightSpec(wt.pop("family", "homogeneous-L-power"), power)
        leftovers = [k for d, pre in ((block, ""), (hyp, "hyperboloid."), (wt, "weight."), (slab, "slab."))
                     for k in (pre + key for key in d)]
        if leftovers:
            raise ValueError(f"unknown quadrature keys: {sorted(leftovers)}")
        return cls(**kwargs)

    def to_dict(self):
        return {
            "sphere_nodes": self.sphere_nodes,
            "hyperboloid": {
                "truncation": self.truncation,
                "nodes_t": self.nodes_t,
                "nodes_sphere": self.nodes_sphere,
                "both_branches": self.both_branches,
            },
            "weight": {"family": self.weight.family, "power": self.weight.power},
            "slab": {
                "r": self.slab_r,
                "box": self.slab_box,
                "nodes_per_axis": self.slab_nodes_per_axis,
                "axis": self.slab_axis,
            },
        }
