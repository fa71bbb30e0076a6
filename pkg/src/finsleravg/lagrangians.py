"""Lagrangian wrapper and the built-in preset library."""

from dataclasses import dataclass, field

from . import expr as ex

LORENTZIAN = "lorentzian"
POSITIVE = "positive"
MODES = (LORENTZIAN, POSITIVE)


@dataclass(frozen=True)
class Lagrangian:
    """A parsed Lagrangian together with its dimension and signature mode.

    In ``positive`` mode the expression is read as ``F**2`` and the working
    Lagrangian is ``F**2 / 2``; in ``lorentzian`` mode it is ``L`` itself.
    """

    expr: object
    n: int
    mode: str = LORENTZIAN
    source: str = ""
    name: str = "expression"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown signature mode {self.mode!r}")
        if self.n < 2:
            raise ValueError("dimension must be at least 2")

    @property
    def scale(self):
        return 0.5 if self.mode == POSITIVE else 1.0

    @classmethod
    def from_text(cls, source, n, mode=LORENTZIAN, name="expression", params=None):
        return cls(ex.parse(source, n), n, mode, source, name, dict(params or {}))


def _sum_squares(start, n):
    return " + ".join(f"y{i}^2" for i in range(start, n))


def minkowski(n=2):
    """``L = (-y0^2 + sum_{i>0} yi^2) / 2``; valid on the whole slit bundle."""
    src = f"0.5*(-(y0^2) + {_sum_squares(1, n)})"
    return Lagrangian.from_text(src, n, LORENTZIAN, "minkowski")


def warped(n=2):
    """``L = (-y0^2 + exp(2 x0) sum_{i>0} yi^2) / 2``; pseudo-Riemannian everywhere."""
    src = f"0.5*(-(y0^2) + exp(2*x0)*({_sum_squares(1, n)}))"
    return Lagrangian.from_text(src, n, LORENTZIAN, "warped")


def randers_positive(n=2, b=0.3):
    """Randers norm ``F = |y| + b*y1`` (given as ``F**2``); strongly convex for ``|b| < 1``."""
    src = f"(sqrt({_sum_squares(0, n)}) + {float(b)!r}*y1)^2"
    return Lagrangian.from_text(src, n, POSITIVE, "randers-positive", {"b": float(b)})


def finslerian_lorentz(n=2, eps=0.05, warp=1.0):
    """Quartic-over-quadratic perturbation of a warped Minkowski Lagrangian.

    ``L = (-y0^2 + exp(2*warp*x0) sum_{i>0} yi^2) / 2 + eps * y0^4 / |y|^2``
    with ``|y|`` Euclidean.  At ``x0 = 0`` (or ``warp = 0``) the quadratic part
    is Minkowski.  For ``X = e0`` the timelike condition holds iff
    ``eps < 0.4`` (the y0-y0 Hessian entry of the quartic term peaks at 2.5);
    the signature stays Lorentzian for small ``eps``.
    """
    if warp:
        quad = f"0.5*(-(y0^2) + exp({2.0 * float(warp)!r}*x0)*({_sum_squares(1, n)}))"
    else:
        quad = f"0.5*(-(y0^2) + {_sum_squares(1, n)})"
    src = f"{quad} + {float(eps)!r}*y0^4/({_sum_squares(0, n)})"
    return Lagrangian.from_text(
        src, n, LORENTZIAN, "finslerian-lorentz", {"eps": float(eps), "warp": float(warp)}
    )


PRESETS = {
    "minkowski": minkowski,
    "warped": warped,
    "randers-positive": randers_positive,
    "finslerian-lorentz": finslerian_lorentz,
}


def preset(name, n=2, **params):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(n, **params)
