"""Second-order forward-mode differentiation scalars.

A :class:`Jet2` carries a value together with first and second derivatives
with respect to ``m`` seeded directions.  Arithmetic propagates both orders
through the product, quotient and chain rules, so evaluating an analytic
closure on seeded jets yields its exact gradient and Hessian.

Components of a jet may themselves be jets (or numpy arrays, for batched
evaluation).  Nesting is what gives third and fourth derivatives: an outer
jet whose components are inner jets differentiates "through" the inner
seeds.  To keep nested derivatives from being conflated (the classic
perturbation-confusion bug of forward AD), every jet carries an integer
``level``; binary operations treat the lower-level operand as a constant
with respect to the higher level's seeds.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Jet2",
    "seed",
    "constant",
    "promote",
    "value_of",
    "level_of",
    "max_level",
    "grad_array",
    "hess_array",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "where_sign",
]


def level_of(x):
    """Nesting level of a scalar-like; plain numbers and arrays are level 0."""
    return x.level if isinstance(x, Jet2) else 0


def max_level(*seqs):
    """Highest jet level appearing in the given sequences of scalar-likes."""
    lv = 0
    for s in seqs:
        for c in s:
            lv = max(lv, level_of(c))
    return lv


def value_of(x):
    """Recursively strip derivative information, returning the float payload."""
    while isinstance(x, Jet2):
        x = x.value
    return x


class Jet2:
    """Truncated second-order Taylor coefficient container.

    ``grad[i]`` is the derivative along seed direction ``i`` and
    ``hess[i][j]`` the mixed second derivative; ``hess`` is symmetric by
    construction.  Components are floats, numpy arrays (batched evaluation)
    or lower-level jets (nested differentiation).
    """

    __slots__ = ("value", "grad", "hess", "level", "m")

    # Make numpy defer to our reflected operators instead of broadcasting
    # jets into object arrays.
    __array_ufunc__ = None

    def __init__(self, value, grad, hess, level=1):
        self.value = value
        self.grad = tuple(grad)
        self.hess = tuple(tuple(row) for row in hess)
        self.level = level
        self.m = len(self.grad)

    # -- construction helpers -------------------------------------------------

    def _const_like(self, x):
        z = (0.0,) * self.m
        return Jet2(x, z, (z,) * self.m, self.level)

    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.level == self.level:
                return other
            if other.level < self.level:
                return self._const_like(other)
            return NotImplemented  # let other.__rop__ handle it
        if isinstance(other, (int, float, np.integer, np.floating, np.ndarray)):
            return self._const_like(other)
        return NotImplemented

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        # Python skips reflected ops for same-type operands; delegate by level.
        if isinstance(other, Jet2) and other.level > self.level:
            return other.__add__(self)
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        m = self.m
        return Jet2(
            self.value + b.value,
            tuple(self.grad[i] + b.grad[i] for i in range(m)),
            tuple(
                tuple(self.hess[i][j] + b.hess[i][j] for j in range(m))
                for i in range(m)
            ),
            self.level,
        )

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        m = self.m
        return Jet2(
            -self.value,
            tuple(-g for g in self.grad),
            tuple(tuple(-h for h in row) for row in self.hess),
            self.level,
        )

    def __sub__(self, other):
        if isinstance(other, Jet2) and other.level > self.level:
            return (-other).__add__(self)
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return self.__add__(-b)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Jet2) and other.level > self.level:
            return other.__mul__(self)
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        m = self.m
        av, bv = self.value, b.value
        ag, bg = self.grad, b.grad
        grad = tuple(av * bg[i] + ag[i] * bv for i in range(m))
        hess = tuple(
            tuple(
                av * b.hess[i][j]
                + self.hess[i][j] * bv
                + ag[i] * bg[j]
                + ag[j] * bg[i]
                for j in range(m)
            )
            for i in range(m)
        )
        return Jet2(av * bv, grad, hess, self.level)

    def __rmul__(self, other):
        return self.__mul__(other)

    def _reciprocal(self):
        v = self.value
        inv = 1.0 / v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet2) and other.level > self.level:
            return other._reciprocal().__mul__(self)
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return self.__mul__(b._reciprocal())

    def __rtruediv__(self, other):
        return self._reciprocal().__mul__(other)

    def __pow__(self, p):
        if not isinstance(p, (int, float, np.integer, np.floating)):
            return NotImplemented
        if p == 2:
            return self * self
        v = self.value
        return self._chain(
            _pow(v, p), p * _pow(v, p - 1), p * (p - 1) * _pow(v, p - 2)
        )

    def _chain(self, f0, f1, f2):
        """Compose with a scalar map given its value and two derivatives at ``value``."""
        m = self.m
        g = self.grad
        grad = tuple(f1 * g[i] for i in range(m))
        hess = tuple(
            tuple(f1 * self.hess[i][j] + f2 * g[i] * g[j] for j in range(m))
            for i in range(m)
        )
        return Jet2(f0, grad, hess, self.level)

    def sqrt(self):
        r = _sqrt(self.value)
        inv = 0.5 / r
        return self._chain(r, inv, -0.5 * inv / self.value)

    def exp(self):
        e = _exp(self.value)
        return self._chain(e, e, e)

    def log(self):
        v = self.value
        inv = 1.0 / v
        return self._chain(_log(v), inv, -inv * inv)

    def sin(self):
        s, c = _sin(self.value), _cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = _sin(self.value), _cos(self.value)
        return self._chain(c, -s, -c)

    def __repr__(self):
        return f"Jet2(level={self.level}, m={self.m}, value={self.value!r})"


# -- generic scalar functions (dispatch on floats, arrays and jets) ------------


def _pow(x, p):
    if isinstance(x, Jet2):
        return x**p
    return np.power(x, p) if isinstance(x, np.ndarray) else math.pow(x, p)


def _sqrt(x):
    if isinstance(x, Jet2):
        return x.sqrt()
    return np.sqrt(x) if isinstance(x, np.ndarray) else math.sqrt(x)


def _exp(x):
    if isinstance(x, Jet2):
        return x.exp()
    return np.exp(x) if isinstance(x, np.ndarray) else math.exp(x)


def _log(x):
    if isinstance(x, Jet2):
        return x.log()
    return np.log(x) if isinstance(x, np.ndarray) else math.log(x)


def _sin(x):
    if isinstance(x, Jet2):
        return x.sin()
    return np.sin(x) if isinstance(x, np.ndarray) else math.sin(x)


def _cos(x):
    if isinstance(x, Jet2):
        return x.cos()
    return np.cos(x) if isinstance(x, np.ndarray) else math.cos(x)


sqrt, exp, log, sin, cos = _sqrt, _exp, _log, _sin, _cos


def where_sign(x, pos, neg):
    """Branch on the sign of ``x``'s float payload (vectorized for arrays).

    Used by norm families defined ray-wise (positively homogeneous but not
    absolutely homogeneous in one dimension).  For jets the branch is chosen
    by the primal value, which is the correct derivative away from the cone
    boundary.
    """
    v = value_of(x)
    if isinstance(v, np.ndarray):
        if isinstance(pos, Jet2) or isinstance(neg, Jet2):
            raise TypeError("array-valued branch with jet operands is ambiguous")
        return np.where(v >= 0.0, pos, neg)
    return pos if v >= 0.0 else neg


# -- seeding / extraction -------------------------------------------------------


def seed(values, level=None):
    """Seed one jet per entry of ``values``, each differentiating its own slot."""
    values = list(values)
    m = len(values)
    if level is None:
        level = max(level_of(v) for v in values) + 1
    out = []
    for k, v in enumerate(values):
        g = tuple(1.0 if i == k else 0.0 for i in range(m))
        z = (0.0,) * m
        out.append(Jet2(v, g, (z,) * m, level))
    return out


def constant(value, m, level):
    z = (0.0,) * m
    return Jet2(value, z, (z,) * m, level)


def promote(values, like):
    """Wrap plain scalars as constants matching the jet ``like``."""
    return [v if isinstance(v, Jet2) and v.level == like.level else like._const_like(v)
            for v in values]


def grad_array(jet):
    """First-derivative components as a float numpy array (unnested jets)."""
    return np.array([value_of(g) for g in jet.grad])


def hess_array(jet):
    """Second-derivative components as a float numpy array (unnested jets)."""
    m = jet.m
    return np.array([[value_of(jet.hess[i][j]) for j in range(m)] for i in range(m)])
