"""Pointwise geometry on the slit tangent bundle.

Fundamental tensor, Cartan tensor, nonlinear connection and Chern connection
of a Lagrangian, plus checks of the structural axioms (2-homogeneity, Euler
relations, non-degeneracy and signature).

Index conventions for rank-3 arrays: ``dyg[..., i, j, k] = d g_ij / d y^k``,
``dxg[..., i, j, k] = d g_ij / d x^k`` and ``gamma[..., i, j, k]`` is
``Gamma^i_jk``.  Every batch function accepts fiber coordinates with a
leading batch axis.
"""

from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement

import numpy as np

from . import dual
from . import expr as ex
from .lagrangians import POSITIVE


class SlitBundleError(ValueError):
    """The fiber coordinate is the zero vector."""


class DegenerateMetricError(ArithmeticError):
    def __init__(self, message, x=None, y=None):
        self.x = None if x is None else np.asarray(x)
        self.y = None if y is None else np.asarray(y)
        super().__init__(message)


@dataclass(frozen=True)
class FiberPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"x and y must be vectors of equal length, got {x.shape} and {y.shape}")
        if not np.any(y):
            raise SlitBundleError("fiber coordinate y must be non-zero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SymTensor2:
    coeffs: np.ndarray
    n_negative: int

    @property
    def signature(self):
        return self.n_negative


@dataclass(frozen=True)
class Tensor3:
    coeffs: np.ndarray
    symmetry: str  # 'full' or 'lower'


def count_negative(m, tol=0.0):
    """Number of eigenvalues below ``-tol`` (Sylvester inertia)."""
    return np.sum(np.linalg.eigvalsh(m) < -tol, axis=-1)


def is_degenerate(g, rel_tol=1e-12):
    g = np.asarray(g)
    n = g.shape[-1]
    scale = np.max(np.abs(g), axis=(-2, -1)) ** n
    return np.abs(np.linalg.det(g)) <= rel_tol * scale


# ---------------------------------------------------------------------------
# derivative jets


@dataclass
class FiberJet:
    """Value and y/x partials of the working Lagrangian at a batch of fibers."""

    L: np.ndarray
    dL: np.ndarray
    g: np.ndarray
    dyg: np.ndarray = None
    dxg: np.ndarray = None


def _bcast(v, shape):
    return np.broadcast_to(np.asarray(v, dtype=float), shape)


def fiber_jet(lag, x, y, order=2):
    """Derivatives of the working Lagrangian up to ``order`` (2 or 3).

    Order 3 adds ``dyg`` and ``dxg``; each needed third partial comes from one
    depth-3 nested dual evaluation, so the results are exact.
    """
    n = lag.n
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    batch = y.shape[:-1]
    s = lag.scale
    L = None
    dL = np.zeros(batch + (n,))
    g = np.zeros(batch + (n, n))
    if order == 2:
        for i, j in combinations_with_replacement(range(n), 2):
            z = ex.evaluate(lag.expr, x, y, seed=(f"y{i}", f"y{j}"))
            if L is None:
                L = s * _bcast(dual.component(z, (0, 0)), batch)
            dL[..., i] = s * _bcast(dual.component(z, (1, 0)), batch)
            dL[..., j] = s * _bcast(dual.component(z, (0, 1)), batch)
            g[..., i, j] = g[..., j, i] = s * _bcast(dual.component(z, (1, 1)), batch)
        return FiberJet(L, dL, g)
    if order != 3:
        raise ValueError("order must be 2 or 3")
    dyg = np.zeros(batch + (n, n, n))
    dxg = np.zeros(batch + (n, n, n))
    for i, j, k in combinations_with_replacement(range(n), 3):
        z = ex.evaluate(lag.expr, x, y, seed=(f"y{i}", f"y{j}", f"y{k}"))
        if L is None:
            L = s * _bcast(dual.component(z, (0, 0, 0)), batch)
        for a, bits in ((i, (1, 0, 0)), (j, (0, 1, 0)), (k, (0, 0, 1))):
            dL[..., a] = s * _bcast(dual.component(z, bits), batch)
        for (a, b), bits in (((i, j), (1, 1, 0)), ((i, k), (1, 0, 1)), ((j, k), (0, 1, 1))):
            g[..., a, b] = g[..., b, a] = s * _bcast(dual.component(z, bits), batch)
        d3 = s * _bcast(dual.component(z, (1, 1, 1)), batch)
        for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
            dyg[..., a, b, c] = d3
    uses_x = any(kind == "x" for kind, _ in ex.variables(lag.expr))
    if uses_x:
        for i, j in combinations_with_replacement(range(n), 2):
            for k in range(n):
                z = ex.evaluate(lag.expr, x, y, seed=(f"y{i}", f"y{j}", f"x{k}"))
                v = s * _bcast(dual.component(z, (1, 1, 1)), batch)
                dxg[..., i, j, k] = dxg[..., j, i, k] = v
    return FiberJet(L, dL, g, dyg, dxg)


def _point(p):
    return p if isinstance(p, FiberPoint) else FiberPoint(*p)


def _with_mode(lag, mode):
    if mode is None or mode == lag.mode:
        return lag
    return replace(lag, mode=mode)


# ---------------------------------------------------------------------------
# pointwise tensors


def fundamental_tensor(lag, p, mode=None):
    p = _point(p)
    jet = fiber_jet(_with_mode(lag, mode), p.x, p.y, order=2)
    return SymTensor2(jet.g, int(count_negative(jet.g)))


def metric_batch(lag, x, ys):
    """Fundamental tensors at a batch of fiber coordinates, shape ``(m, n, n)``."""
    return fiber_jet(lag, x, ys, order=2).g


def causal_character(lag, p, tol=1e-12):
    p = _point(p)
    value = float(ex.evaluate(lag.expr, p.x, p.y))
    if value < -tol:
        return "timelike"
    if value > tol:
        return "spacelike"
    return "lightlike"


def cartan_tensor(lag, p):
    p = _point(p)
    jet = fiber_jet(lag, p.x, p.y, order=3)
    return Tensor3(0.5 * jet.dyg, "full")


@dataclass
class ChernData:
    """Chern connection ingredients for a batch of fiber points."""

    g: np.ndarray
    ginv: np.ndarray
    cartan: np.ndarray
    formal: np.ndarray  # formal Christoffel symbols gamma^i_jk
    N: np.ndarray  # nonlinear connection N^i_j
    delta_g: np.ndarray  # delta_k g_ij at [..., i, j, k]
    gamma: np.ndarray  # Chern coefficients Gamma^i_jk
    jet: FiberJet = field(repr=False, default=None)


def _christoffel(ginv, dg):
    # 1/2 g^{is} (d_j g_sk + d_k g_sj - d_s g_jk), d_c g_ab stored at [a, b, c]
    lowered = dg.swapaxes(-1, -2) + dg - np.moveaxis(dg, -1, -3)
    return 0.5 * np.einsum("...is,...sjk->...ijk", ginv, lowered)


def chern_batch(lag, x, ys, check=True):
    """Chern connection at every row of ``ys`` for fixed base point ``x``."""
    ys = np.asarray(ys, dtype=float)
    jet = fiber_jet(lag, x, ys, order=3)
    g = jet.g
    if check:
        bad = np.atleast_1d(is_degenerate(g))
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            yb = ys.reshape(-1, lag.n)[idx]
            raise DegenerateMetricError(
                f"fundamental tensor is degenerate at x={list(np.asarray(x))}, y={list(yb)}", x, yb
            )
    ginv = np.linalg.inv(g)
    C = 0.5 * jet.dyg
    formal = _christoffel(ginv, jet.dxg)
    Cup = np.einsum("...is,...sjm->...ijm", ginv, C)
    spray = np.einsum("...mrs,...r,...s->...m", formal, ys, ys)
    N = np.einsum("...ijk,...k->...ij", formal, ys) - np.einsum("...ijm,...m->...ij", Cup, spray)
    delta_g = jet.dxg - np.einsum("...mk,...ijm->...ijk", N, jet.dyg)
    gamma = _christoffel(ginv, delta_g)
    gamma = 0.5 * (gamma + gamma.swapaxes(-1, -2))
    return ChernData(g, ginv, C, formal, N, delta_g, gamma, jet)


def chern_connection(lag, p):
    """Chern coefficients and nonlinear connection at one fiber point."""
    p = _point(p)
    data = chern_batch(lag, p.x, p.y)
    return Tensor3(data.gamma, "lower"), data.N


def horizontal_compatibility_residual(data):
    """``delta_k g_ij - Gamma^l_ik g_lj - Gamma^l_jk g_il`` at ``[..., i, j, k]``."""
    term1 = np.einsum("...lik,...lj->...ijk", data.gamma, data.g)
    term2 = np.einsum("...ljk,...il->...ijk", data.gamma, data.g)
    return data.delta_g - term1 - term2


def levi_civita(g, dxg):
    """Christoffel symbols from a metric and its x-derivatives ``dxg[..., i, j, k]``."""
    return _christoffel(np.linalg.inv(g), dxg)


# ---------------------------------------------------------------------------
# structure verification


@dataclass
class PointCheck:
    x: list
    y: list
    homogeneity: float
    euler_gradient: float
    euler_quadratic: float
    euler_value: float
    det: float
    n_negative: int
    ok: bool
    problems: list


@dataclass
class StructureReport:
    mode: str
    points: list
    passed: bool

    @property
    def failures(self):
        return [pc for pc in self.points if not pc.ok]


def verify_structure(lag, sample, mode=None, tol=1e-10, det_tol=1e-12, factors=(0.5, 2.0, 7.0)):
    """Check homogeneity, Euler relations, non-degeneracy and signature.

    Residuals are relative to ``max(1, |reference|)``.  The required signature
    is 1 negative eigenvalue in Lorentzian mode and 0 in positive mode.  All
    points are evaluated in one batch.
    """
    lag = _with_mode(lag, mode)
    pts = [_point(p) for p in sample]
    if not pts:
        raise ValueError("sample must be non-empty")
    want = 0 if lag.mode == POSITIVE else 1
    X = np.array([p.x for p in pts])
    Y = np.array([p.y for p in pts])
    jet = fiber_jet(lag, X, Y, order=2)

    def rel(a, b):
        a = a.reshape(len(pts), -1)
        b = b.reshape(len(pts), -1)
        return np.max(np.abs(a - b), axis=1) / np.maximum(1.0, np.max(np.abs(b), axis=1))

    hom = np.zeros(len(pts))
    for k in factors:
        Lk = lag.scale * np.broadcast_to(ex.evaluate(lag.expr, X, k * Y), hom.shape)
        hom = np.maximum(hom, rel(Lk, k * k * jet.L))
    e_val = rel(np.einsum("mi,mi->m", jet.dL, Y), 2.0 * jet.L)
    e_grad = rel(np.einsum("mij,mj->mi", jet.g, Y), jet.dL)
    e_quad = rel(0.5 * np.einsum("mi,mij,mj->m", Y, jet.g, Y), jet.L)
    dets = np.linalg.det(jet.g)
    negs = count_negative(jet.g)
    degenerate = np.atleast_1d(is_degenerate(jet.g, det_tol))
    checks = []
    for m, p in enumerate(pts):
        problems = []
        if max(hom[m], e_val[m], e_grad[m], e_quad[m]) > tol:
            problems.append("homogeneity/Euler residual above tolerance")
        if degenerate[m]:
            problems.append("degenerate fundamental tensor")
        elif negs[m] != want:
            problems.append(f"signature {int(negs[m])} negative eigenvalue(s), expected {want}")
        checks.append(
            PointCheck(
                p.x.tolist(), p.y.tolist(), float(hom[m]), float(e_grad[m]), float(e_quad[m]),
                float(e_val[m]), float(dets[m]), int(negs[m]), not problems, problems,
            )
        )
    return StructureReport(lag.mode, checks, all(c.ok for c in checks))


def random_fiber_points(n, count, rng, x_scale=1.0, min_norm=0.2):
    """Random fiber points with ``x`` uniform in a box and ``y`` Gaussian."""
    points = []
    while len(points) < count:
        x = rng.uniform(-x_scale, x_scale, n)
        y = rng.normal(size=n)
        if np.linalg.norm(y) >= min_norm:
            points.append(FiberPoint(x, y))
    return points
