"""Averaged Chern connection.

Coefficients are averaged componentwise in the natural coordinate basis over
one of three fiber domains: the weighted future unit hyperboloid, the sphere
of directions (unit weight), or a regularized slab.  Averaging keeps the
symmetry in the lower indices, so the averaged connection is torsion free.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .averaging import averaged_lorentzian_at
from .finsler import chern_batch, levi_civita
from .quadrature import (
    QuadratureConfig,
    MAX_TRUNCATION,
    UNIT,
    build_hyperboloid_domain,
    build_slab_domain,
    build_sphere_domain,
    integrate,
)

DOMAINS = ("sphere", "hyperboloid", "slab")


@dataclass
class AveragedConnection:
    x: list
    domain: str
    gamma: np.ndarray
    metadata: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def torsion(self):
        return self.gamma - self.gamma.swapaxes(-1, -2)


def build_domain(lag, x, kind, config=None, orientation=None):
    config = config or QuadratureConfig()
    x = np.asarray(x, dtype=float)
    if kind == "sphere":
        return build_sphere_domain(lag, x, config.sphere_nodes, UNIT)
    if kind == "hyperboloid":
        X = np.eye(lag.n)[0] if orientation is None else np.asarray(orientation, dtype=float)
        return build_hyperboloid_domain(
            lag, x, X, config.truncation, config.nodes_t, config.nodes_sphere,
            config.weight, config.both_branches,
        )
    if kind == "slab":
        return build_slab_domain(
            lag, x, config.slab_r, config.weight, config.slab_box,
            config.slab_nodes_per_axis, config.slab_axis,
        )
    raise ValueError(f"unknown domain {kind!r}; choose from {DOMAINS}")


def _average_on(lag, domain):
    gamma = chern_batch(lag, domain.x, domain.nodes).gamma
    avg = integrate(domain, gamma).average
    return 0.5 * (avg + avg.swapaxes(-1, -2))


def average_connection(lag, x, kind="sphere", config=None, orientation=None, diagnostics=True):
    """Averaged Chern coefficients ``<Gamma>^i_jk`` at base point ``x``.

    Diagnostics repeat the average at ``1.5*T`` (hyperboloid, or half the
    rapidity nodes once ``1.5*T`` passes the truncation cap), ``2*r`` (slab) or
    half the resolution (sphere) and report the largest change.
    """
    config = config or QuadratureConfig()
    domain = build_domain(lag, x, kind, config, orientation)
    gamma = _average_on(lag, domain)
    diag = {}
    if diagnostics:
        if kind == "hyperboloid":
            if 1.5 * config.truncation <= MAX_TRUNCATION:
                alt = replace(config, truncation=1.5 * config.truncation)
                diag["parameter"], diag["values"] = "truncation", [config.truncation, alt.truncation]
            else:
                alt = replace(config, nodes_t=max(2, config.nodes_t // 2))
                diag["parameter"], diag["values"] = "nodes_t", [config.nodes_t, alt.nodes_t]
        elif kind == "slab":
            alt = replace(config, slab_r=2.0 * config.slab_r)
            diag["parameter"], diag["values"] = "r", [config.slab_r, alt.slab_r]
        else:
            alt = replace(config, sphere_nodes=max(2, config.sphere_nodes // 2))
            diag["parameter"], diag["values"] = "sphere_nodes", [config.sphere_nodes, alt.sphere_nodes]
        other = _average_on(lag, build_domain(lag, x, kind, alt, orientation))
        diag["delta"] = float(np.max(np.abs(other - gamma)))
    return AveragedConnection(np.asarray(x, dtype=float).tolist(), kind, gamma, dict(domain.metadata), diag)


@dataclass
class SlabStudy:
    rs: list
    values: list
    deltas: list

    @property
    def final_delta(self):
        return self.deltas[-1] if self.deltas else 0.0

    @property
    def monotone(self):
        return all(b <= a for a, b in zip(self.deltas, self.deltas[1:]))


def slab_limit_study(lag, x, rs, config=None):
    """Slab averages for an increasing sequence of half-widths ``r``."""
    rs = [float(r) for r in rs]
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValueError("r-sequence must be increasing")
    config = config or QuadratureConfig()
    values = [
        _average_on(lag, build_domain(lag, x, "slab", replace(config, slab_r=r))) for r in rs
    ]
    deltas = [float(np.max(np.abs(b - a))) for a, b in zip(values, values[1:])]
    return SlabStudy(rs, values, deltas)


@dataclass
class LeviCivitaComparison:
    x: list
    metric: np.ndarray
    levi_civita: np.ndarray
    averaged: dict
    differences: dict
    step: float


def compare_levi_civita(lag, X, x, config=None, kinds=DOMAINS, step=1e-4, orientation=None, V=None):
    """Distance between each averaged connection and the Levi-Civita connection
    of the averaged Lorentzian metric (x-derivatives by central differences).
    """
    config = config or QuadratureConfig()
    x = np.asarray(x, dtype=float)
    n = lag.n
    res = config.sphere_nodes
    ell = averaged_lorentzian_at(lag, X, x, res, V)
    dell = np.zeros((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        plus = averaged_lorentzian_at(lag, X, x + e, res, V)
        minus = averaged_lorentzian_at(lag, X, x - e, res, V)
        dell[:, :, k] = (plus - minus) / (2 * step)
    lc = levi_civita(ell, dell)
    averaged, diffs = {}, {}
    for kind in kinds:
        avg = average_connection(lag, x, kind, config, orientation, diagnostics=False).gamma
        averaged[kind] = avg
        diffs[kind] = float(np.max(np.abs(avg - lc)))
    return LeviCivitaComparison(x.tolist(), ell, lc, averaged, diffs, step)
