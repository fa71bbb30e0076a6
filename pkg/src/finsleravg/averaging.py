"""Averaged metrics.

The Lorentzian pipeline runs in three steps at each base point ``x``:

1. with a vector field ``X`` satisfying ``g_(x,y)(X, X) < 0`` for every
   direction ``y``, flip the sign of the ``X`` block to get the positive
   Lagrange metric ``g~ = g - 2 g(X,.) g(X,.) / g(X,X)``;
2. average ``g~`` over the sphere of directions with unit weight, which gives
   a Riemannian metric ``h``;
3. apply the same flip to ``h`` to obtain a Lorentzian metric on ``M``.

For pseudo-Riemannian input the flip is an involution and the pipeline
returns the original metric.
"""

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .finsler import fiber_jet, metric_batch, count_negative, is_degenerate, SymTensor2
from .lagrangians import POSITIVE
from .quadrature import (
    QuadratureDomain,
    UNIT,
    build_indicatrix_domain,
    build_sphere_domain,
    density_batch,
    integrate,
    sphere_grid,
)


class InadmissibleFieldError(ValueError):
    def __init__(self, message, x=None, y=None):
        self.x = x
        self.y = y
        super().__init__(message)


class NotPositiveDefiniteError(ValueError):
    pass


class AveragingError(RuntimeError):
    """A pipeline stage failed; carries the point index and stage name."""

    def __init__(self, message, point_index, stage):
        self.point_index = point_index
        self.stage = stage
        super().__init__(f"point {point_index}, stage '{stage}': {message}")


class TimelikeField:
    """Vector field on ``M`` given by one x-only expression per component."""

    def __init__(self, components, n):
        if len(components) != n:
            raise ValueError(f"timelike field needs {n} components, got {len(components)}")
        self.n = n
        self.sources = [str(c) for c in components]
        self.exprs = [ex.parse(s, n) for s in self.sources]
        for s, e in zip(self.sources, self.exprs):
            if any(kind == "y" for kind, _ in ex.variables(e)):
                raise ValueError(f"field component {s!r} must depend on x only")

    @classmethod
    def constant(cls, vector):
        return cls([repr(float(v)) for v in vector], len(vector))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        zero = np.zeros(self.n)
        return np.array([float(ex.evaluate(e, x, zero)) for e in self.exprs])


def _field_value(X, x):
    return X(x) if callable(X) else np.asarray(X, dtype=float)


# ---------------------------------------------------------------------------
# step 1 and step 3 transforms


def flip(m, X):
    """``m - 2 m(X,.) m(X,.) / m(X,X)``, batched over leading axes."""
    m = np.asarray(m, dtype=float)
    mX = m @ X
    return m - 2.0 * mX[..., :, None] * mX[..., None, :] / (mX @ X)[..., None, None]


def lorentz_to_positive(g, X):
    g = np.asarray(g, dtype=float)
    X = np.asarray(X, dtype=float)
    q = g @ X @ X if g.ndim == 2 else np.einsum("...ij,i,j->...", g, X, X)
    if np.any(np.asarray(q) >= 0):
        raise InadmissibleFieldError(f"g(X, X) = {np.max(q)!r} is not negative")
    return flip(g, X)


def positive_to_lorentz(h, X):
    h = np.asarray(h, dtype=float)
    X = np.asarray(X, dtype=float)
    if not np.any(X):
        raise ValueError("reference vector must be non-zero")
    if np.any(np.linalg.eigvalsh(h) <= 0):
        raise NotPositiveDefiniteError("averaged metric is not positive definite")
    out = flip(h, X)
    if np.any(count_negative(out) != 1):
        raise NotPositiveDefiniteError("back-transform does not have Lorentzian signature")
    return out


# ---------------------------------------------------------------------------
# admissibility


@dataclass
class TimelikeReport:
    x: list
    X: list
    min_gXX: float
    max_gXX: float
    passed: bool
    L_of_X: float
    weak_passed: bool
    grid_nodes: int

    @property
    def margin(self):
        return -self.max_gXX


def check_timelike_condition(lag, X, x, resolution=16, tol=1e-12):
    """Sample ``g_(x,y)(X, X)`` over the sphere of directions ``y``."""
    x = np.asarray(x, dtype=float)
    Xv = _field_value(X, x)
    nodes, _ = sphere_grid(lag.n - 1, resolution)
    g = metric_batch(lag, x, nodes)
    q = np.einsum("mij,i,j->m", g, Xv, Xv)
    LX = lag.scale * float(ex.evaluate(lag.expr, x, Xv)) if np.any(Xv) else 0.0
    return TimelikeReport(
        x.tolist(),
        Xv.tolist(),
        float(q.min()),
        float(q.max()),
        bool(q.max() < -tol),
        LX,
        bool(LX < -tol),
        len(nodes),
    )


# ---------------------------------------------------------------------------
# step 2


def tilde_sphere_average(lag, Xv, x, resolution):
    """Average of ``g~`` over the sphere with density ``sqrt|det g~|`` and unit weight."""
    x = np.asarray(x, dtype=float)
    nodes, wsph = sphere_grid(lag.n - 1, resolution)
    g = metric_batch(lag, x, nodes)
    q = np.einsum("mij,i,j->m", g, Xv, Xv)
    if np.any(q >= 0):
        i = int(np.argmax(q))
        raise InadmissibleFieldError(
            f"g(X, X) = {q[i]!r} >= 0 at x={x.tolist()}, y={nodes[i].tolist()}", x, nodes[i]
        )
    gt = flip(g, Xv)
    domain = QuadratureDomain(
        "sphere", x, nodes, wsph * density_batch(gt), np.ones(len(nodes)),
        {"resolution": int(resolution), "nodes": len(nodes), "weight": "unit"},
    )
    return integrate(domain, gt).average, domain


def average_positive_metric(lag, X, x, resolution=24):
    """Riemannian metric ``<g~>`` at ``x`` (steps 1 and 2)."""
    h, _ = tilde_sphere_average(lag, _field_value(X, x), x, resolution)
    h = 0.5 * (h + h.T)
    return SymTensor2(h, int(count_negative(h)))


def average_riemannian_metric(lag, x, resolution=24, weight=UNIT, domain="indicatrix"):
    """Average of the fundamental tensor of a positive Finsler structure."""
    if lag.mode != POSITIVE:
        raise ValueError("direct averaging of g needs a positive structure")
    builder = build_indicatrix_domain if domain == "indicatrix" else build_sphere_domain
    dom = builder(lag, x, resolution, weight)
    g = metric_batch(lag, np.asarray(x, dtype=float), dom.nodes)
    h = integrate(dom, g).average
    h = 0.5 * (h + h.T)
    return SymTensor2(h, int(count_negative(h)))


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class MetricRecord:
    index: int
    x: list
    X: list
    h: SymTensor2
    ell: SymTensor2
    margin: float
    structure_ok: bool
    error_estimate: float
    metadata: dict = field(default_factory=dict)


@dataclass
class AveragedMetric:
    records: list
    metadata: dict


def _fiber_scan(lag, x, nodes, tol):
    jet = fiber_jet(lag, x, nodes, order=2)
    negatives = count_negative(jet.g)
    euler = np.max(np.abs(np.einsum("mij,mj->mi", jet.g, nodes) - jet.dL))
    euler = max(euler, np.max(np.abs(np.einsum("mi,mi->m", jet.dL, nodes) - 2.0 * jet.L)))
    want = 0 if lag.mode == POSITIVE else 1
    ok = bool(np.all(negatives == want) and not np.any(is_degenerate(jet.g)) and euler <= tol)
    return ok, float(euler)


def average_lorentzian_metric(lag, X, points, resolution=24, force=False, V=None, tol=1e-10):
    """Three-step averaged Lorentzian metric at each base point.

    ``V`` overrides the reference field of the back-transform (default ``X``).
    Unless ``force`` is set, the fiber structure and the timelike condition
    must hold on the sampled sphere at every point.
    """
    records = []
    for idx, x in enumerate(points):
        x = np.asarray(x, dtype=float)
        Xv = _field_value(X, x)
        Vv = Xv if V is None else _field_value(V, x)
        nodes, _ = sphere_grid(lag.n - 1, resolution)
        structure_ok, _ = _fiber_scan(lag, x, nodes, tol)
        report = check_timelike_condition(lag, Xv, x, resolution)
        if not force:
            if not structure_ok:
                raise AveragingError("fiber structure check failed", idx, "verify")
            if not report.passed:
                raise AveragingError(
                    f"timelike condition fails (max g(X,X) = {report.max_gXX!r})", idx, "admissibility"
                )
        try:
            h, domain = tilde_sphere_average(lag, Xv, x, resolution)
            h_half, _ = tilde_sphere_average(lag, Xv, x, max(2, resolution // 2))
        except InadmissibleFieldError as exc:
            raise AveragingError(str(exc), idx, "lagrange-transform") from None
        h = 0.5 * (h + h.T)
        try:
            ell = positive_to_lorentz(h, Vv)
        except (NotPositiveDefiniteError, ValueError) as exc:
            raise AveragingError(str(exc), idx, "lorentz-transform") from None
        ell = 0.5 * (ell + ell.T)
        records.append(
            MetricRecord(
                idx,
                x.tolist(),
                Xv.tolist(),
                SymTensor2(h, int(count_negative(h))),
                SymTensor2(ell, int(count_negative(ell))),
                report.margin,
                structure_ok,
                float(np.max(np.abs(h - h_half))),
                dict(domain.metadata),
            )
        )
    return AveragedMetric(records, {"resolution": int(resolution), "points": len(records)})


def averaged_lorentzian_at(lag, X, x, resolution=24, V=None):
    """Step-3 metric at one point without the admissibility pre-checks."""
    x = np.asarray(x, dtype=float)
    Xv = _field_value(X, x)
    Vv = Xv if V is None else _field_value(V, x)
    h, _ = tilde_sphere_average(lag, Xv, x, resolution)
    h = 0.5 * (h + h.T)
    return positive_to_lorentz(h, Vv)
