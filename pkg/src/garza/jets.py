"""Truncated Taylor (jet) arithmetic.

A :class:`Jet` stores the normalized Taylor coefficients ``f^(i)(x0) / i!`` of
a scalar function at an expansion point.  Coefficient arrays have shape
``(order + 1, *batch)`` so that one jet can carry expansions at many points
at once; every recurrence below acts along axis 0 and broadcasts over the
batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DerivativeOrderError,
    JetDomainError,
    JetMismatchError,
    ZeroDenominatorError,
)


@dataclass(frozen=True, eq=False)
class Jet:
    base_point: np.ndarray
    coeffs: np.ndarray

    # make numpy defer to the reflected jet operators
    __array_ufunc__ = None

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        coeffs = coeffs.astype(np.result_type(coeffs.dtype, float), copy=False)
        if coeffs.ndim == 0:
            raise ValueError("coeffs must have at least one axis")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=coeffs.dtype))

    @classmethod
    def _raw(cls, base_point, coeffs) -> "Jet":
        # unchecked constructor for results of internal arithmetic
        obj = object.__new__(cls)
        object.__setattr__(obj, "base_point", base_point)
        object.__setattr__(obj, "coeffs", coeffs)
        return obj

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def derivative(self, i: int) -> np.ndarray:
        """Raw i-th derivative ``f^(i)(x0)``."""
        return self.coeffs[i] * math.factorial(i)

    # -- constructors -----------------------------------------------------
    @classmethod
    def variable(cls, x, order: int) -> "Jet":
        """Jet of the identity map at ``x``; longdouble input stays longdouble."""
        x = np.asarray(x)
        x = x.astype(np.result_type(x.dtype, float), copy=False)
        coeffs = np.zeros((order + 1,) + x.shape, dtype=x.dtype)
        coeffs[0] = x
        if order >= 1:
            coeffs[1] = 1.0
        return cls._raw(x, coeffs)

    @classmethod
    def constant(cls, value, like: "Jet") -> "Jet":
        coeffs = np.zeros_like(like.coeffs)
        coeffs[0] = value
        return cls._raw(like.base_point, coeffs)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return Jet(self.base_point, self.coeffs[: order + 1])

    def _check(self, other: "Jet") -> None:
        if self.order != other.order:
            raise JetMismatchError(f"jet orders differ: {self.order} vs {other.order}")
        if self.base_point is not other.base_point and not np.array_equal(
            self.base_point, other.base_point
        ):
            raise JetMismatchError("jets expanded at different base points")

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(other, self)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet._raw(self.base_point, self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] + other
        return Jet._raw(self.base_point, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet._raw(self.base_point, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet._raw(self.base_point, self.coeffs - other.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] - other
        return Jet._raw(self.base_point, out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet._raw(self.base_point, self.coeffs * other)
        self._check(other)
        a, b = self.coeffs, other.coeffs
        # Cauchy product: out[n] = sum_i a[n-i] * b[i], accumulated by shifts
        out = a * b[0]
        for i in range(1, a.shape[0]):
            out[i:] += a[:-i] * b[i]
        return Jet._raw(self.base_point, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet._raw(self.base_point, self.coeffs / other)
        self._check(other)
        a, b = self.coeffs, other.coeffs
        if np.any(b[0] == 0):
            raise ZeroDenominatorError("zero denominator at expansion point")
        q = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
        for n in range(a.shape[0]):
            acc = a[n]
            for i in range(1, n + 1):
                acc = acc - b[i] * q[n - i]
            q[n] = acc / b[0]
        return Jet._raw(self.base_point, q)

    def __rtruediv__(self, other):
        return Jet.constant(other, self) / self

    def __pow__(self, alpha):
        return power(self, alpha)

    # -- calculus ---------------------------------------------------------
    def differentiate(self) -> "Jet":
        """Jet of the derivative; the order drops by one."""
        if self.order < 1:
            raise DerivativeOrderError("derivative order exhausted")
        i = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return Jet._raw(self.base_point, self.coeffs[1:] * i)

    def __repr__(self):
        return f"Jet(base_point={self.base_point!r}, coeffs={self.coeffs!r})"


def exp(a: Jet) -> Jet:
    c = a.coeffs
    e = np.empty_like(c)
    e[0] = np.exp(c[0])
    for n in range(1, a.order + 1):
        acc = c[n] * e[0] * n
        for k in range(1, n):
            acc = acc + k * c[k] * e[n - k]
        e[n] = acc / n
    return Jet._raw(a.base_point, e)


def log(a: Jet) -> Jet:
    c = a.coeffs
    if np.any(c[0] <= 0):
        raise JetDomainError("log requires a positive argument")
    out = np.zeros_like(c)
    out[0] = np.log(c[0])
    for n in range(1, a.order + 1):
        acc = c[n].copy()
        for k in range(1, n):
            acc = acc - k * out[k] * c[n - k] / n
        out[n] = acc / c[0]
    return Jet._raw(a.base_point, out)


def power(a: Jet, alpha: float) -> Jet:
    """``a ** alpha``; integer exponents allow any sign of the base."""
    if float(alpha).is_integer():
        m = int(alpha)
        if m < 0:
            return 1.0 / _int_power(a, -m)
        return _int_power(a, m)
    c = a.coeffs
    if np.any(c[0] <= 0):
        raise JetDomainError("non-integer power requires a positive base")
    p = np.zeros_like(c)
    p[0] = c[0] ** alpha
    for n in range(1, a.order + 1):
        acc = np.zeros_like(c[0])
        for k in range(1, n + 1):
            acc = acc + ((alpha + 1.0) * k - n) * c[k] * p[n - k]
        p[n] = acc / (n * c[0])
    return Jet._raw(a.base_point, p)


def _int_power(a: Jet, m: int) -> Jet:
    if m == 0:
        return Jet.constant(1.0, a)
    result = None
    base = a
    while m:
        if m & 1:
            result = base if result is None else result * base
        m >>= 1
        if m:
            base = base * base
    return result


def sqrt(a: Jet) -> Jet:
    return power(a, 0.5)


def integral(
    integrand: Callable[[Jet], Jet],
    antiderivative: Callable[[np.ndarray], np.ndarray],
    a: Jet,
) -> Jet:
    """Jet of ``F(a)`` where ``F' = integrand``.

    ``antiderivative`` supplies the value ``F(a0)``; the higher coefficients
    come from shifting the jet of ``integrand(a) * a'``.  Only derivatives of
    ``F`` matter to the f-triangle, but moments need consistent values, so the
    antiderivative must use one fixed constant of integration.
    """
    out = np.zeros_like(a.coeffs)
    # special-function antiderivatives only accept double precision
    out[0] = antiderivative(np.asarray(a.coeffs[0], dtype=float))
    if a.order >= 1:
        inner = a.truncate(a.order - 1)
        g = integrand(inner) * a.differentiate()
        n = np.arange(1, a.order + 1).reshape((-1,) + (1,) * (a.coeffs.ndim - 1))
        out[1:] = g.coeffs / n
    return Jet(a.base_point, out)


LIFT_KINDS = ("const", "identity", "exp", "log", "power", "integral")


def jet_lift(kind: str, base_point, order: int, *, alpha=None, value=None,
             integrand=None, antiderivative=None) -> Jet:
    """Taylor jet of an elementary function of one variable at ``base_point``.

    ``kind`` is one of :data:`LIFT_KINDS`.  ``power`` needs ``alpha``;
    ``const`` needs ``value``; ``integral`` needs ``integrand`` (a jet map)
    and ``antiderivative`` (a vectorized value function).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    x = Jet.variable(base_point, order)
    if kind == "const":
        return Jet.constant(value, x)
    if kind == "identity":
        return x
    if kind == "exp":
        return exp(x)
    if kind == "log":
        return log(x)
    if kind == "power":
        if alpha is None:
            raise ValueError("power lift needs alpha")
        return power(x, alpha)
    if kind == "integral":
        if integrand is None or antiderivative is None:
            raise ValueError("integral lift needs integrand and antiderivative")
        return integral(integrand, antiderivative, x)
    raise ValueError(f"unknown lift kind {kind!r}")


def jet_binary(op: str, a: Jet, b: Jet) -> Jet:
    ops = {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__, "div": Jet.__truediv__}
    try:
        fn = ops[op]
    except KeyError:
        raise ValueError(f"unknown jet operation {op!r}") from None
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("jet_binary expects two jets")
    return fn(a, b)


def jet_differentiate(a: Jet) -> Jet:
    return a.differentiate()
