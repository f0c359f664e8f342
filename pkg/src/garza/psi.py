"""Ordered function systems and the recursive derivative triangle.

A :class:`PsiSystem` is an ordered list of scalar functions on an interval,
each given as a map from a :class:`~garza.jets.Jet` to a jet.  The
f-triangle is built column by column: the first column holds the first
derivatives, and entry ``(l, t)`` is the derivative of the ratio of entries
``(l, t-1)`` and ``(t-1, t-1)``.  The signs of the diagonal decide which of
the four reduction cases applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ChebyshevViolation, GarzaError, ZeroDenominatorError
from .jets import Jet

PsiFunction = Callable[[Jet], Jet]

DEFAULT_GRID = 512
DEFAULT_SIGN_TOL = 1e-9


@dataclass(frozen=True)
class PsiSystem:
    functions: tuple
    interval: tuple
    names: tuple = ()
    alternate_tops: tuple = ()
    alternate_names: tuple = ()
    # optional map from a jet to all k function jets at once, sharing
    # subexpressions; must agree with ``functions``
    batch: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "alternate_tops", tuple(self.alternate_tops))
        a, b = (float(v) for v in self.interval)
        if not a < b:
            raise ValueError(f"interval must satisfy A < B, got [{a}, {b}]")
        object.__setattr__(self, "interval", (a, b))
        if not self.functions:
            raise ValueError("a Psi system needs at least one function")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"psi{l + 1}" for l in range(self.k)))
        if len(self.names) != self.k:
            raise ValueError("names must match the number of functions")

    @property
    def k(self) -> int:
        return len(self.functions)

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(v) for v in self.interval)

    def restricted(self, lo: float, hi: float) -> "PsiSystem":
        return replace(self, interval=(lo, hi))

    def with_top(self, top: PsiFunction, name: str = "") -> "PsiSystem":
        """Same system with the last function replaced."""
        names = self.names[:-1] + (name or f"psi{self.k}",)
        batch = None
        if self.batch is not None:
            inner = self.batch

            def batch(x):
                return list(inner(x)[:-1]) + [top(x)]
        return PsiSystem(self.functions[:-1] + (top,), self.interval, names, batch=batch)

    def variants(self):
        """The system itself followed by one copy per alternate top function."""
        yield self
        for top, name in zip(self.alternate_tops, self.alternate_names or
                             [f"alt{i}" for i in range(len(self.alternate_tops))]):
            yield self.with_top(top, name)

    def jets(self, c, order: int) -> list:
        x = Jet.variable(_real(c), order)
        if self.batch is not None:
            return list(self.batch(x))
        return [fn(x) for fn in self.functions]

    def values(self, c) -> np.ndarray:
        """Array of shape ``(k, *c.shape)`` with ``psi_l(c)``."""
        return np.stack([j.coeffs[0] for j in self.jets(c, 0)])

    def values_and_derivatives(self, c):
        jets = self.jets(c, 1)
        return (np.stack([j.coeffs[0] for j in jets]),
                np.stack([j.coeffs[1] for j in jets]))

    def flipped(self, eps: Sequence[int]) -> "PsiSystem":
        eps = tuple(int(e) for e in eps)
        if len(eps) != self.k:
            raise ValueError("flip vector length must equal k")
        funcs = tuple(fn if e > 0 else _negated(fn) for fn, e in zip(self.functions, eps))
        alts = tuple(fn if eps[-1] > 0 else _negated(fn) for fn in self.alternate_tops)
        batch = None
        if self.batch is not None:
            inner = self.batch

            def batch(x):
                return [j if e > 0 else -j for j, e in zip(inner(x), eps)]
        return replace(self, functions=funcs, alternate_tops=alts, batch=batch)


def _negated(fn: PsiFunction) -> PsiFunction:
    def neg(x):
        return -fn(x)
    neg.__name__ = f"neg_{getattr(fn, '__name__', 'psi')}"
    return neg


@dataclass(frozen=True)
class FTriangle:
    """Lower-triangular array ``values[l-1, t-1] = f_{l,t}(point)``."""

    point: float
    values: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values, axis1=0, axis2=1).T if self.values.ndim > 2 \
            else np.diag(self.values).copy()

    @property
    def F(self):
        return np.prod(self.diagonal, axis=0)


def _real(c):
    # float input becomes double; longdouble input keeps its extra precision
    c = np.asarray(c)
    return c.astype(np.result_type(c.dtype, float), copy=False)


def _triangle(system: PsiSystem, c, order: int, tol: float, raise_on_zero: bool):
    k = system.k
    # the ratio recursion cancels heavily for long systems; extended
    # precision (where the platform has it) buys back about three digits
    c = np.asarray(c, dtype=np.longdouble)
    values = np.full((k, k) + c.shape, np.nan)
    col = [j.differentiate() for j in system.jets(c, order)]
    for l in range(k):
        values[l, 0] = col[l].coeffs[0]
    for t in range(1, k):
        d = col[t - 1]
        small = np.abs(d.coeffs[0]) <= tol
        if np.any(small):
            if raise_on_zero:
                loc = float(np.ravel(c)[np.argmax(np.ravel(small))])
                raise ChebyshevViolation(
                    f"Chebyshev assumption violated at c={loc:.12g}: f_{t},{t} vanishes",
                    index=t, location=loc)
            d = Jet(d.base_point, np.where(small, np.nan, d.coeffs))
        with np.errstate(all="ignore"):
            for l in range(t, k):
                try:
                    col[l] = (col[l] / d).differentiate()
                except ZeroDenominatorError:
                    col[l] = Jet(d.base_point, np.full_like(d.coeffs[1:], np.nan))
                values[l, t] = col[l].coeffs[0]
    return values


def f_triangle_at(system: PsiSystem, c, order: int | None = None,
                  tol: float = 1e-12) -> FTriangle:
    """Full f-triangle at ``c`` (a scalar or an array of points).

    ``order`` defaults to ``k + 1``, one more than the recursion consumes.
    Raises :class:`ChebyshevViolation` when an intermediate diagonal entry is
    within ``tol`` of zero.
    """
    order = system.k + 1 if order is None else order
    if order < system.k:
        raise ValueError("jet order must be at least k")
    return FTriangle(c, _triangle(system, c, order, tol, raise_on_zero=True))


def diagonal(system: PsiSystem, c, order: int | None = None) -> np.ndarray:
    """Diagonal ``f_{l,l}`` on an array of points; failures become NaN."""
    order = system.k + 1 if order is None else order
    vals = _triangle(system, c, order, 0.0, raise_on_zero=False)
    return np.stack([vals[l, l] for l in range(system.k)])


@dataclass(frozen=True)
class SignCertificate:
    signs: tuple
    interval: tuple
    grid_size: int
    min_abs: tuple
    method: str = "numerical"

    @property
    def F_sign(self) -> int:
        return int(np.prod(self.signs))


def sign_grid(a: float, b: float, grid_size: int) -> np.ndarray:
    """Uniform grid on ``[a, b]`` plus geometric refinement at both ends."""
    base = np.linspace(a, b, grid_size)
    h = (b - a) * np.logspace(-8, -2, 7)
    return np.unique(np.concatenate([base, a + h, b - h]))


def verify_signs(system: PsiSystem, grid_size: int = DEFAULT_GRID,
                 tol: float = DEFAULT_SIGN_TOL) -> SignCertificate:
    """Certify, on a dense grid, that every diagonal entry keeps one sign.

    A diagonal is rejected when it changes sign between grid points, is not
    finite, or drops below ``tol`` relative to its largest magnitude on the
    grid.  Returns a :class:`SignCertificate`; raises
    :class:`ChebyshevViolation` naming ``l`` and the offending ``c``.  All
    alternate top functions must share the sign of the main one.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if not system.bounded:
        raise ValueError("sign verification needs a bounded interval; restrict first")
    a, b = system.interval
    grid = sign_grid(a, b, grid_size)
    signs, mins = None, None
    for variant in system.variants():
        s, m = _certify(variant, grid, tol)
        if signs is None:
            signs, mins = s, m
        elif s[-1] != signs[-1]:
            raise ChebyshevViolation(
                "alternate top function gives a different sign of f_{k,k}",
                index=system.k, location=None)
    return SignCertificate(tuple(signs), (a, b), grid_size, tuple(mins))


def _certify(system: PsiSystem, grid: np.ndarray, tol: float):
    diag = diagonal(system, grid)
    signs, mins = [], []
    for l in range(system.k):
        d = diag[l]
        bad = ~np.isfinite(d)
        if np.any(bad):
            loc = float(grid[np.argmax(bad)])
            raise ChebyshevViolation(
                f"f_{l + 1},{l + 1} is not finite near c={loc:.12g}", index=l + 1, location=loc)
        s = np.sign(d)
        flips = np.nonzero(s != s[0])[0]
        if flips.size:
            i = flips[0]
            loc = _bisect_sign_change(system, l, grid[i - 1], grid[i], s[0])
            raise ChebyshevViolation(
                f"f_{l + 1},{l + 1} changes sign near c={loc:.12g}", index=l + 1, location=loc)
        scale = np.max(np.abs(d))
        i = int(np.argmin(np.abs(d)))
        if np.abs(d[i]) <= tol * scale:
            loc = float(grid[i])
            raise ChebyshevViolation(
                f"f_{l + 1},{l + 1} is numerically zero near c={loc:.12g}",
                index=l + 1, location=loc)
        signs.append(int(s[0]))
        mins.append(float(np.abs(d[i])))
    return signs, mins


def _bisect_sign_change(system, l, lo, hi, sign_lo, iters=60):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        try:
            val = diagonal(system, np.array([mid]))[l, 0]
        except GarzaError:
            return float(mid)
        if not np.isfinite(val) or val == 0:
            return float(mid)
        if np.sign(val) == sign_lo:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


@dataclass(frozen=True)
class ReductionCase:
    label: str
    k: int
    max_support: int
    pinned: tuple
    threshold: int

    def __post_init__(self):
        if self.label not in "abcd" or len(self.label) != 1:
            raise ValueError(f"unknown case label {self.label!r}")


def classify_case(signs: Sequence[int], k: int) -> ReductionCase:
    """Reduction case from the diagonal signs and the parity of ``k``."""
    signs = tuple(int(s) for s in signs)
    if len(signs) != k or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be a length-k vector of +1/-1")
    F = int(np.prod(signs))
    if k % 2:
        n = (k + 1) // 2
        if F < 0:
            return ReductionCase("a", k, n, ("A",), n)
        return ReductionCase("b", k, n, ("B",), n)
    n = k // 2
    if F > 0:
        return ReductionCase("c", k, n + 1, ("A", "B"), n)
    return ReductionCase("d", k, n, (), n + 1)


def flip_vector(signs: Sequence[int]) -> tuple:
    """Flips that make every diagonal positive.

    Negating ``psi_l`` alone flips diagonals ``l`` and ``l+1`` (only ``k`` when
    ``l = k``), so the flipped diagonal sign is ``s_l * e_l * e_{l-1}`` and the
    running product of the signs is the unique solution with ``e_0 = 1``.
    """
    return tuple(int(v) for v in np.cumprod(np.asarray(signs, dtype=int)))


def normalize_signs(system: PsiSystem, signs: Sequence[int]):
    """Return ``(flipped_system, eps)`` with an all-positive diagonal."""
    eps = flip_vector(signs)
    if eps[-1] != int(np.prod(signs)):
        raise GarzaError("internal error: flip vector inconsistent with sign of F")
    if all(e == 1 for e in eps):
        return system, eps
    return system.flipped(eps), eps
