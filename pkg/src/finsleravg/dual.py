"""Nested first-order dual numbers.

A ``Dual(v, d)`` represents ``v + d*eps`` with ``eps**2 == 0``.  Nesting
``Dual`` inside ``Dual`` gives one independent infinitesimal per level, so a
depth-``k`` value carries every mixed partial of order ``<= k`` along the
seeded directions, exactly (no truncation).  The outermost wrapper is always
the first infinitesimal; ``v`` and ``d`` hold the remaining levels and may be
plain floats/arrays when a level carries nothing.

Base values may be numpy arrays, in which case one evaluation covers a whole
batch of fiber points.
"""

import numpy as np


class DomainError(ArithmeticError):
    """Raised when an elementary function is evaluated outside its domain."""


class Dual:
    __slots__ = ("v", "d")
    # keep numpy from broadcasting over Dual objects in mixed arithmetic
    __array_ufunc__ = None

    def __init__(self, v, d):
        self.v = v
        self.d = d

    def __repr__(self):
        return f"Dual({self.v!r}, {self.d!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.v + other.v, self.d + other.d)
        return Dual(self.v + other, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.v - other.v, self.d - other.d)
        return Dual(self.v - other, self.d)

    def __rsub__(self, other):
        return Dual(other - self.v, -self.d)

    def __neg__(self):
        return Dual(-self.v, -self.d)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.v * other.v, self.v * other.d + self.d * other.v)
        return Dual(self.v * other, self.d * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return other * reciprocal(self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


def real(z):
    """Strip all infinitesimal levels."""
    while isinstance(z, Dual):
        z = z.v
    return z


def is_zero(z):
    if isinstance(z, Dual):
        return is_zero(z.v) and is_zero(z.d)
    return not np.any(z)


def component(z, bits):
    """Pick the coefficient of ``prod(eps_l for l where bits[l])``.

    ``bits`` is ordered outermost level first; missing levels count as zero.
    """
    for b in bits:
        if isinstance(z, Dual):
            z = z.d if b else z.v
        elif b:
            return 0.0
    return real(z)


def seed(value, flags):
    """Lift ``value`` to a variable whose tangent is 1 at each flagged level."""
    flags = tuple(flags)
    while flags and not flags[-1]:
        flags = flags[:-1]
    if not flags:
        return value
    inner = seed(value, flags[1:])
    return Dual(inner, 1.0 if flags[0] else 0.0)


def _first_bad(mask):
    idx = np.flatnonzero(np.atleast_1d(mask))
    return int(idx[0]) if idx.size else None


def _check(mask, message):
    mask = np.asarray(mask)
    if np.any(mask):
        where = "" if mask.ndim == 0 else f" (batch index {_first_bad(mask)})"
        raise DomainError(message + where)


def reciprocal(z):
    if isinstance(z, Dual):
        r = reciprocal(z.v)
        return Dual(r, -z.d * r * r)
    _check(np.asarray(z) == 0, "division by zero")
    return 1.0 / z


def sin(z):
    if isinstance(z, Dual):
        return Dual(sin(z.v), cos(z.v) * z.d)
    return np.sin(z)


def cos(z):
    if isinstance(z, Dual):
        return Dual(cos(z.v), -sin(z.v) * z.d)
    return np.cos(z)


def exp(z):
    if isinstance(z, Dual):
        e = exp(z.v)
        return Dual(e, e * z.d)
    return np.exp(z)


def log(z):
    if isinstance(z, Dual):
        return Dual(log(z.v), z.d * reciprocal(z.v))
    _check(np.asarray(z) <= 0, "log of non-positive value")
    return np.log(z)


def sqrt(z):
    if isinstance(z, Dual):
        s = sqrt(z.v)
        if is_zero(z.d):
            return Dual(s, z.d)
        return Dual(s, 0.5 * z.d * reciprocal(s))
    _check(np.asarray(z) < 0, "sqrt of negative value")
    return np.sqrt(z)


def sinh(z):
    if isinstance(z, Dual):
        return Dual(sinh(z.v), cosh(z.v) * z.d)
    return np.sinh(z)


def cosh(z):
    if isinstance(z, Dual):
        return Dual(cosh(z.v), sinh(z.v) * z.d)
    return np.cosh(z)


def tanh(z):
    if isinstance(z, Dual):
        t = tanh(z.v)
        return Dual(t, (1.0 - t * t) * z.d)
    return np.tanh(z)


def absolute(z):
    if isinstance(z, Dual):
        if not is_zero(z.d):
            base = real(z.v)
            _check(np.asarray(base) == 0, "derivative of abs() at its kink")
            return Dual(absolute(z.v), sign(z.v) * z.d)
        return Dual(absolute(z.v), z.d)
    return np.abs(z)


def sign(z):
    return np.sign(real(z))


def power(base, exponent):
    """``base ** exponent``; constant exponents use the power rule directly."""
    if isinstance(exponent, Dual):
        return exp(exponent * log(base))
    c = float(exponent)
    if c == 0.0:
        return 1.0
    if c == 1.0:
        return base
    if isinstance(base, Dual):
        return Dual(power(base.v, c), c * power(base.v, c - 1.0) * base.d)
    b = np.asarray(base, dtype=float)
    if not c.is_integer():
        _check(b < 0, "non-integer power of negative value")
    if c < 0:
        _check(b == 0, "negative power of zero")
    return np.power(base, c)


FUNCTIONS = {
    "neg": lambda z: -z,
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": absolute,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
}
