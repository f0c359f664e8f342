"""Catalog of regression model families in the factorized form.

Every family writes the per-point information vector as ``h(x) = P v(c)``:
``c = c(x)`` is a monotone reparametrization of the design variable,
``v(c)`` a vector of parameter-free basis functions, and ``P`` a nonsingular
matrix that depends on theta only.  The information of a design is then
``P (sum_i w_i v(c_i) v(c_i)^T) P^T`` and the entries of ``v v^T`` are the
functions that the reduction has to control.  Each family also carries the
ordered Psi system used to certify and carry out the reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import jets as J
from .errors import ParameterError, RangeError
from .jets import Jet
from .psi import PsiSystem

FAMILIES = (
    "emax3",
    "exponential3",
    "loglinear3",
    "sigmoid_emax",
    "logexp3",
    "emax_pk1",
    "logistic4",
    "polynomial",
    "weighted_polynomial",
    "poisson_quadratic",
)

LAYOUTS = {
    "emax3": "theta=(t0, t1, t2); eta = t0 + t1*x/(x+t2); t1>0, t2>0, x+t2>0",
    "exponential3": "theta=(t0, t1, t2); eta = t0 + t1*exp(x/t2); t1>0, t2>0",
    "loglinear3": "theta=(t0, t1, t2); eta = t0 + t1*log(x+t2); t1>0, x+t2>0",
    "sigmoid_emax": "theta=(t0, t1, t2); eta = t0*x^t2/(t1+x^t2); t0>0, t1>0, t2!=0, x>0",
    "logexp3": "theta=(t0, t1, t2); eta = log(t0 + t1*exp(-t2*x)); all >0",
    "emax_pk1": "theta=(t0, t1, t2, t3); eta = t0 + t1*D/(D+t2*exp(t3*x)); all >0; "
                "options: D (default 1)",
    "logistic4": "theta=(t0, t1, t2, t3); options: parametrization='dette' "
                 "eta = t0 + t1/(1+exp((t2-x)/t3)), t1>0, t3>0; or 'li_majumdar' "
                 "eta = t0 + t1/(1+exp(t2+t3*x)), t1!=0, t3!=0",
    "polynomial": "theta=(t0..tp); eta = sum t_j x^j; degree p = len(theta)-1",
    "weighted_polynomial": "theta=(t0..tp); polynomial mean with error variance "
                           "sigma^2/lambda(x); options: variant in i..vi, alpha, beta, n",
    "poisson_quadratic": "theta=(t0, t1, t2); log mu = t0 + t1*x + t2*x^2; t2!=0; "
                         "options: naive_psi (bool)",
}

WEIGHT_VARIANTS = ("i", "ii", "iii", "iv", "v", "vi")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    family: str
    theta: tuple
    x_region: tuple
    c_region: tuple
    increasing: bool
    P: np.ndarray
    basis: tuple
    psi: PsiSystem
    c_transform: Callable
    x_transform: Callable
    fisher: Callable
    eta: Callable
    noise_scale: float = 1.0
    options: dict = field(default_factory=dict)
    experimental: bool = False

    @property
    def p(self) -> int:
        return len(self.basis)

    def describe(self) -> dict:
        d = {"family": self.family, "theta": list(self.theta), "region": list(self.x_region)}
        if self.options:
            d["options"] = dict(self.options)
        return d

    def c_of_x(self, x):
        x = np.asarray(x, dtype=float)
        check_range(x, self.x_region, "x")
        return self.c_transform(x)

    def x_of_c(self, c):
        c = np.asarray(c, dtype=float)
        check_range(c, self.c_region, "c")
        return self.x_transform(c)

    def x_endpoint(self, which: str) -> float:
        """x-space endpoint corresponding to c-endpoint ``'A'`` or ``'B'``."""
        lo, hi = self.x_region
        if which == "A":
            return lo if self.increasing else hi
        if which == "B":
            return hi if self.increasing else lo
        raise ValueError(which)

    def basis_values(self, c, order: int = 0):
        """``v(c)`` with shape ``(p, *c.shape)``; with ``order=1`` also ``v'(c)``."""
        x = Jet.variable(np.asarray(c, dtype=float), order)
        jets_ = [fn(x) for fn in self.basis]
        vals = np.stack([j.coeffs[0] for j in jets_])
        if order == 0:
            return vals
        return vals, np.stack([j.coeffs[1] for j in jets_])

    def c_matrix(self, c) -> np.ndarray:
        """Parameter-free matrix ``C(c) = v(c) v(c)^T``."""
        v = self.basis_values(float(c))
        return np.outer(v, v)

    def info_vector(self, c) -> np.ndarray:
        """``P v(c)`` for each point; shape ``(p, n)``."""
        v = self.basis_values(np.atleast_1d(np.asarray(c, dtype=float)))
        return self.P @ v


def check_range(v, region, name, slack=1e-12):
    lo, hi = region
    scale = 1.0 + max(abs(lo) if math.isfinite(lo) else 0.0, abs(hi) if math.isfinite(hi) else 0.0)
    if np.any(v < lo - slack * scale) or np.any(v > hi + slack * scale):
        raise RangeError(f"{name} outside region [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# small jet helpers
def _pow(e):
    return lambda c: c ** e


def _inv1p(e):
    return lambda c: 1.0 / (1.0 + c) ** e


def _clogc_over(e):
    return lambda c: c * J.log(c) / (1.0 + c) ** e


def _c2log2c_over(e):
    return lambda c: (c * J.log(c)) ** 2 / (1.0 + c) ** e


def _named(fn, name):
    fn.__name__ = name
    return fn


def _const_one(c):
    return Jet.constant(1.0, c)


def _psi(funcs_names, interval, alternates=(), batch=None):
    funcs = [f for f, _ in funcs_names]
    names = [n for _, n in funcs_names]
    return PsiSystem(tuple(funcs), interval, tuple(names),
                     tuple(f for f, _ in alternates), tuple(n for _, n in alternates),
                     batch=batch)


def _powers(c, top):
    """``[c, c^2, ..., c^top]`` by repeated multiplication."""
    out = [c]
    for _ in range(top - 1):
        out.append(out[-1] * c)
    return out


def _rational_log_batch(layout):
    """Shared evaluator for systems built from ``(c log c)^a / (1+c)^b``."""
    top = max(b for _, b in layout)

    def batch(c):
        inv = _powers(1.0 / (1.0 + c), top)
        cl = c * J.log(c)
        logs = [None, cl, cl * cl]
        return [inv[b - 1] if a == 0 else logs[a] * inv[b - 1] for a, b in layout]
    return batch


def _monomial_batch(top):
    return lambda c: _powers(c, top)


def _region(x_region, allow_lower_inf=False, allow_upper_inf=False):
    if len(x_region) != 2:
        raise ParameterError("region must be [L, U]")
    lo, hi = (float(v) for v in x_region)
    if math.isnan(lo) or math.isnan(hi):
        raise ParameterError("region endpoints must be numbers")
    if not lo < hi:
        raise ParameterError(f"region must satisfy L < U, got [{lo}, {hi}]")
    if math.isinf(lo) and not (allow_lower_inf and lo < 0):
        raise ParameterError("lower region endpoint must be finite for this family")
    if math.isinf(hi) and not (allow_upper_inf and hi > 0):
        raise ParameterError("upper region endpoint must be finite for this family")
    return lo, hi


def _theta(theta, n):
    theta = tuple(float(t) for t in theta)
    if len(theta) != n:
        raise ParameterError(f"expected {n} parameters, got {len(theta)}")
    if not all(math.isfinite(t) for t in theta):
        raise ParameterError("parameters must be finite")
    return theta


def _c_region(transform, lo, hi, increasing):
    with np.errstate(all="ignore"):
        a, b = float(transform(np.float64(lo))), float(transform(np.float64(hi)))
    return (a, b) if increasing else (b, a)


# ---------------------------------------------------------------------------
# three-parameter families
def _emax3(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t1 <= 0 or t2 <= 0:
        raise ParameterError("emax3 needs theta1 > 0 and theta2 > 0")
    lo, hi = _region(region)
    if lo + t2 <= 0:
        raise ParameterError("emax3 needs x + theta2 > 0 on the region")
    ct = lambda x: 1.0 / (x + t2)
    xt = lambda c: 1.0 / c - t2
    P = np.array([[1, 0, 0], [1, -t2, 0], [0, -t1, t1 * t2]], dtype=float)
    basis = (_const_one, _pow(1), _pow(2))

    def eta(x):
        return t0 + t1 * x / (x + t2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.ones_like(x), x / (x + t2), -t1 * x / (x + t2) ** 2])

    creg = _c_region(ct, lo, hi, False)
    psi = _psi([(_pow(l), f"c^{l}") for l in range(1, 5)], creg, batch=_monomial_batch(4))
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=False,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta)


def _exponential_batch(c):
    e = J.exp(c)
    e2 = e * e
    ce2 = c * e2
    return [e, c * e, e2, ce2, c * ce2]


def _exponential3(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t1 <= 0 or t2 <= 0:
        raise ParameterError("exponential3 needs theta1 > 0 and theta2 > 0")
    lo, hi = _region(region)
    ct = lambda x: x / t2
    xt = lambda c: c * t2
    P = np.diag([1.0, 1.0, -t1 / t2])
    basis = (_const_one, lambda c: J.exp(c), lambda c: c * J.exp(c))

    def eta(x):
        return t0 + t1 * np.exp(x / t2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        e = np.exp(x / t2)
        return np.stack([np.ones_like(x), e, -t1 * x / t2 ** 2 * e])

    creg = _c_region(ct, lo, hi, True)
    psi = _psi([
        (lambda c: J.exp(c), "e^c"),
        (lambda c: c * J.exp(c), "c e^c"),
        (lambda c: J.exp(2.0 * c), "e^2c"),
        (lambda c: c * J.exp(2.0 * c), "c e^2c"),
        (lambda c: c * c * J.exp(2.0 * c), "c^2 e^2c"),
    ], creg, batch=_exponential_batch)
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=True,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta)


def _loglinear3(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t1 <= 0:
        raise ParameterError("loglinear3 needs theta1 > 0")
    lo, hi = _region(region)
    if lo + t2 <= 0:
        raise ParameterError("loglinear3 needs x + theta2 > 0 on the region")
    ct = lambda x: 1.0 / (x + t2)
    xt = lambda c: 1.0 / c - t2
    P = np.diag([1.0, -1.0, t1])
    basis = (_const_one, lambda c: J.log(c), _pow(1))

    def eta(x):
        return t0 + t1 * np.log(x + t2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.ones_like(x), np.log(x + t2), t1 / (x + t2)])

    creg = _c_region(ct, lo, hi, False)
    psi = _psi([
        (lambda c: J.log(c), "log c"),
        (_pow(1), "c"),
        (lambda c: c * J.log(c), "c log c"),
        (lambda c: J.log(c) ** 2, "log^2 c"),
    ], creg, alternates=[(_pow(2), "c^2")])
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=False,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta)


_SIGMOID_LAYOUT = [(0, 4), (0, 3), (1, 4), (0, 2), (1, 3), (2, 4)]
_FOUR_LAYOUT = [(0, 4), (0, 3), (1, 4), (0, 2), (1, 3), (0, 1), (1, 2), (2, 4)]
_SIGMOID_PSI = [
    (_inv1p(4), "1/(1+c)^4"),
    (_inv1p(3), "1/(1+c)^3"),
    (_clogc_over(4), "c log c/(1+c)^4"),
    (_inv1p(2), "1/(1+c)^2"),
    (_clogc_over(3), "c log c/(1+c)^3"),
    (_c2log2c_over(4), "c^2 log^2 c/(1+c)^4"),
]


def _sigmoid_emax(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t0 <= 0 or t1 <= 0 or t2 == 0:
        raise ParameterError("sigmoid_emax needs theta0 > 0, theta1 > 0, theta2 != 0")
    lo, hi = _region(region)
    if lo <= 0:
        raise ParameterError("sigmoid_emax needs a region inside (0, inf)")
    ct = lambda x: t1 * x ** (-t2)
    xt = lambda c: (c / t1) ** (-1.0 / t2)
    lt1 = math.log(t1)
    P = np.array([[1, 0, 0],
                  [-t0 / t1, t0 / t1, 0],
                  [t0 * lt1 / t2, -t0 * lt1 / t2, -t0 / t2]], dtype=float)
    basis = (_inv1p(1), _inv1p(2), _clogc_over(2))

    def eta(x):
        u = np.asarray(x, dtype=float) ** t2
        return t0 * u / (t1 + u)

    def grad(x):
        x = np.asarray(x, dtype=float)
        u = x ** t2
        den = t1 + u
        return np.stack([u / den, -t0 * u / den ** 2, t0 * t1 * u * np.log(x) / den ** 2])

    increasing = t2 < 0
    creg = _c_region(ct, lo, hi, increasing)
    psi = _psi(_SIGMOID_PSI, creg, batch=_rational_log_batch(_SIGMOID_LAYOUT))
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=increasing,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta)


def _logexp3(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t0 <= 0 or t1 <= 0 or t2 <= 0:
        raise ParameterError("logexp3 needs all parameters > 0")
    lo, hi = _region(region)
    r = t1 / t0
    lr = math.log(r)
    ct = lambda x: r * np.exp(-t2 * x)
    xt = lambda c: -np.log(c / r) / t2
    P = np.array([[0, 1 / t0, 0],
                  [1 / t1, -1 / t1, 0],
                  [-lr / t2, lr / t2, 1 / t2]], dtype=float)
    basis = (_const_one, _inv1p(1), _clogc_over(1))

    def eta(x):
        return np.log(t0 + t1 * np.exp(-t2 * np.asarray(x, dtype=float)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        e = np.exp(-t2 * x)
        s = t0 + t1 * e
        return np.stack([1 / s, e / s, -t1 * x * e / s])

    creg = _c_region(ct, lo, hi, False)
    psi = _psi([
        (_inv1p(2), "1/(1+c)^2"),
        (_inv1p(1), "1/(1+c)"),
        (_clogc_over(2), "c log c/(1+c)^2"),
        (_clogc_over(1), "c log c/(1+c)"),
        (_c2log2c_over(2), "c^2 log^2 c/(1+c)^2"),
    ], creg, batch=_rational_log_batch([(0, 2), (0, 1), (1, 2), (1, 1), (2, 2)]))
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=False,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta)


# ---------------------------------------------------------------------------
# four-parameter families share one C structure
_FOUR_PSI = [
    (_inv1p(4), "1/(1+c)^4"),
    (_inv1p(3), "1/(1+c)^3"),
    (_clogc_over(4), "c log c/(1+c)^4"),
    (_inv1p(2), "1/(1+c)^2"),
    (_clogc_over(3), "c log c/(1+c)^3"),
    (_inv1p(1), "1/(1+c)"),
    (_clogc_over(2), "c log c/(1+c)^2"),
    (_c2log2c_over(4), "c^2 log^2 c/(1+c)^4"),
]
_FOUR_BASIS = (_const_one, _inv1p(1), _inv1p(2), _clogc_over(2))


def _emax_pk1(theta, region, opts):
    t0, t1, t2, t3 = _theta(theta, 4)
    D = float(opts.get("D", 1.0))
    if min(t0, t1, t2, t3) <= 0 or D <= 0:
        raise ParameterError("emax_pk1 needs all parameters > 0 and D > 0")
    lo, hi = _region(region)
    g = math.log(t2 / D)
    ct = lambda x: (t2 / D) * np.exp(t3 * x)
    xt = lambda c: (np.log(c) - g) / t3
    P = np.array([[1, 0, 0, 0],
                  [0, 1, 0, 0],
                  [0, -t1 / t2, t1 / t2, 0],
                  [0, t1 * g / t3, -t1 * g / t3, -t1 / t3]], dtype=float)

    def eta(x):
        return t0 + t1 * D / (D + t2 * np.exp(t3 * np.asarray(x, dtype=float)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        e = t2 * np.exp(t3 * x)
        den = D + e
        return np.stack([np.ones_like(x), D / den, -t1 * D * e / t2 / den ** 2,
                         -t1 * D * e * x / den ** 2])

    creg = _c_region(ct, lo, hi, True)
    psi = _psi(_FOUR_PSI, creg, batch=_rational_log_batch(_FOUR_LAYOUT))
    return dict(theta=(t0, t1, t2, t3), x_region=(lo, hi), c_region=creg, increasing=True,
                P=P, basis=_FOUR_BASIS, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta, options={"D": D})


def _logistic4(theta, region, opts):
    t0, t1, t2, t3 = _theta(theta, 4)
    param = opts.get("parametrization", "dette")
    lo, hi = _region(region)
    if param == "dette":
        if t1 <= 0 or t3 <= 0:
            raise ParameterError("logistic4 (dette) needs theta1 > 0 and theta3 > 0")
        ct = lambda x: np.exp((t2 - x) / t3)
        xt = lambda c: t2 - t3 * np.log(c)
        increasing = False
        k = t1 / t3
        P = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, -k, k, 0], [0, 0, 0, k]], dtype=float)

        def eta(x):
            return t0 + t1 / (1 + np.exp((t2 - np.asarray(x, dtype=float)) / t3))

        def grad(x):
            x = np.asarray(x, dtype=float)
            c = np.exp((t2 - x) / t3)
            q = c / (1 + c) ** 2
            return np.stack([np.ones_like(x), 1 / (1 + c), -t1 * q / t3,
                             t1 * q * (t2 - x) / t3 ** 2])
    elif param == "li_majumdar":
        if t1 == 0 or t3 == 0:
            raise ParameterError("logistic4 (li_majumdar) needs theta1 != 0 and theta3 != 0")
        ct = lambda x: np.exp(t2 + t3 * x)
        xt = lambda c: (np.log(c) - t2) / t3
        increasing = t3 > 0
        P = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, -t1, t1, 0],
                      [0, t1 * t2 / t3, -t1 * t2 / t3, -t1 / t3]], dtype=float)

        def eta(x):
            return t0 + t1 / (1 + np.exp(t2 + t3 * np.asarray(x, dtype=float)))

        def grad(x):
            x = np.asarray(x, dtype=float)
            c = np.exp(t2 + t3 * x)
            q = c / (1 + c) ** 2
            return np.stack([np.ones_like(x), 1 / (1 + c), -t1 * q, -t1 * q * x])
    else:
        raise ParameterError(f"unknown logistic4 parametrization {param!r}")
    creg = _c_region(ct, lo, hi, increasing)
    psi = _psi(_FOUR_PSI, creg, batch=_rational_log_batch(_FOUR_LAYOUT))
    return dict(theta=(t0, t1, t2, t3), x_region=(lo, hi), c_region=creg,
                increasing=increasing, P=P, basis=_FOUR_BASIS, psi=psi, c_transform=ct,
                x_transform=xt, fisher=grad, eta=eta, options={"parametrization": param})


# ---------------------------------------------------------------------------
# polynomial families
def _polynomial(theta, region, opts):
    theta = _theta(theta, len(theta))
    p = len(theta) - 1
    if p < 1:
        raise ParameterError("polynomial needs at least two parameters")
    lo, hi = _region(region)
    ident = lambda v: v
    basis = (_const_one,) + tuple(_pow(j) for j in range(1, p + 1))

    def eta(x):
        return np.polynomial.polynomial.polyval(x, theta)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x ** j for j in range(p + 1)])

    psi = _psi([(_pow(l), f"c^{l}") for l in range(1, 2 * p + 1)], (lo, hi),
               batch=_monomial_batch(2 * p))
    return dict(theta=theta, x_region=(lo, hi), c_region=(lo, hi), increasing=True,
                P=np.eye(p + 1), basis=basis, psi=psi, c_transform=ident,
                x_transform=ident, fisher=grad, eta=eta)


def _weight_function(variant, alpha, beta, n):
    """(lambda, sqrt-lambda, integrand, antiderivative) as jet maps / arrays."""
    if variant == "i":
        lam = lambda c: (1.0 - c) ** (alpha + 1) * (1.0 + c) ** (beta + 1)
        root = lambda c: (1.0 - c) ** ((alpha + 1) / 2) * (1.0 + c) ** ((beta + 1) / 2)
        integrand = lambda t: (1.0 - t) ** alpha * (1.0 + t) ** beta
        a_, b_ = beta + 1, alpha + 1
        scale = 2.0 ** (alpha + beta + 1) * special.beta(a_, b_)
        mid = special.betainc(a_, b_, 0.5)
        anti = lambda c: scale * (special.betainc(a_, b_, (1.0 + c) / 2) - mid)
        lam_np = lambda x: (1 - x) ** (alpha + 1) * (1 + x) ** (beta + 1)
    elif variant == "ii":
        lam = lambda c: J.exp(-c)
        root = lambda c: J.exp(-0.5 * c)
        integrand = anti = None
        lam_np = lambda x: np.exp(-x)
    elif variant == "iii":
        lam = lambda c: c ** (alpha + 1) * J.exp(-c)
        root = lambda c: c ** ((alpha + 1) / 2) * J.exp(-0.5 * c)
        integrand = lambda t: t ** alpha * J.exp(-t)
        g = special.gamma(alpha + 1)
        anti = lambda c: g * special.gammainc(alpha + 1, c)
        lam_np = lambda x: x ** (alpha + 1) * np.exp(-x)
    elif variant == "iv":
        lam = lambda c: J.exp(-(c * c))
        root = lambda c: J.exp(-0.5 * (c * c))
        integrand = lambda t: J.exp(-(t * t))
        anti = lambda c: 0.5 * math.sqrt(math.pi) * special.erf(c)
        lam_np = lambda x: np.exp(-x ** 2)
    elif variant in ("v", "vi"):
        lam = lambda c: (1.0 + c * c) ** (-n)
        root = lambda c: (1.0 + c * c) ** (-n / 2)
        integrand = lambda t: (1.0 + t * t) ** (-n - 1)
        anti = lambda c: c * special.hyp2f1(0.5, n + 1, 1.5, -c * c)
        lam_np = lambda x: (1 + x ** 2) ** (-n)
    else:
        raise ParameterError(f"unknown weight variant {variant!r}")
    return lam, root, integrand, anti, lam_np


def _weighted_polynomial(theta, region, opts):
    theta = _theta(theta, len(theta))
    p = len(theta) - 1
    if p < 1:
        raise ParameterError("weighted_polynomial needs at least two parameters")
    variant = str(opts.get("variant", "i"))
    alpha = float(opts.get("alpha", 0.0))
    beta = float(opts.get("beta", 0.0))
    n = float(opts.get("n", p))
    options = {"variant": variant}
    if variant == "i":
        lo, hi = _region(region)
        if alpha + 1 <= 0 or beta + 1 <= 0:
            raise ParameterError("variant i needs alpha+1 > 0 and beta+1 > 0")
        if lo <= -1 or hi >= 1:
            raise ParameterError("variant i needs a region strictly inside (-1, 1)")
        options.update(alpha=alpha, beta=beta)
    elif variant in ("ii", "iii"):
        lo, hi = _region(region, allow_upper_inf=True)
        if variant == "ii" and lo < 0:
            raise ParameterError("variant ii needs x >= 0")
        if variant == "iii":
            if alpha + 1 <= 0:
                raise ParameterError("variant iii needs alpha+1 > 0")
            if lo <= 0:
                raise ParameterError("variant iii needs a region inside (0, inf)")
            options.update(alpha=alpha)
    elif variant == "iv":
        lo, hi = _region(region, allow_lower_inf=True, allow_upper_inf=True)
    elif variant in ("v", "vi"):
        lo, hi = _region(region, allow_lower_inf=True, allow_upper_inf=True)
        if n <= 0:
            raise ParameterError("variants v/vi need n > 0")
        if variant == "v" and p > n:
            raise ParameterError("variant v needs degree p <= n (use vi otherwise)")
        if variant == "vi" and p <= n:
            raise ParameterError("variant vi needs degree p > n")
        options.update(n=n)
    else:
        raise ParameterError(f"unknown weight variant {variant!r}")
    lam, root, integrand, anti, lam_np = _weight_function(variant, alpha, beta, n)
    ident = lambda v: v
    basis = tuple(_named((lambda j: lambda c: root(c) * c ** j)(j), f"sqrt(lam) c^{j}")
                  for j in range(p + 1))

    def eta(x):
        return np.polynomial.polynomial.polyval(x, theta)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(lam_np(x)) * np.stack([x ** j for j in range(p + 1)])

    if variant == "ii":
        funcs = [((lambda l: lambda c: lam(c) * c ** (l - 1))(l), f"lam c^{l - 1}")
                 for l in range(1, 2 * p + 2)]

        def batch(c):
            lc = lam(c)
            return [lc] + [lc * q for q in _powers(c, 2 * p)]
    else:
        first = (lambda c: -J.integral(integrand, anti, c), "-int lam/q")
        funcs = [first] + [((lambda l: lambda c: lam(c) * c ** (l - 2))(l), f"lam c^{l - 2}")
                           for l in range(2, 2 * p + 3)]

        def batch(c):
            lc = lam(c)
            return [-J.integral(integrand, anti, c), lc] + [lc * q for q in _powers(c, 2 * p)]
    psi = _psi(funcs, (lo, hi), batch=batch)
    return dict(theta=theta, x_region=(lo, hi), c_region=(lo, hi), increasing=True,
                P=np.eye(p + 1), basis=basis, psi=psi, c_transform=ident, x_transform=ident,
                fisher=grad, eta=eta, options=options, experimental=variant == "vi")


def _poisson_quadratic(theta, region, opts):
    t0, t1, t2 = _theta(theta, 3)
    if t2 == 0:
        raise ParameterError("poisson_quadratic is degenerate for theta2 = 0")
    lo, hi = _region(region)
    s = 1.0 if t2 > 0 else -1.0
    a = math.sqrt(abs(t2))
    b = t1 * a / (2 * t2)
    ct = lambda x: a * x + b
    xt = lambda c: (c - b) / a
    T = np.array([[1, 0, 0], [-b / a, 1 / a, 0], [b * b / a ** 2, -2 * b / a ** 2, 1 / a ** 2]])
    K = math.exp(0.5 * (t0 - t1 * t1 / (4 * t2)))
    P = K * T
    half = lambda c: J.exp(0.5 * s * (c * c))
    basis = (half, lambda c: c * half(c), lambda c: c * c * half(c))

    def eta(x):
        return np.exp(t0 + t1 * x + t2 * np.asarray(x, dtype=float) ** 2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        mu = np.exp(t0 + t1 * x + t2 * x ** 2)
        return np.sqrt(mu) * np.stack([np.ones_like(x), x, x ** 2])

    creg = _c_region(ct, lo, hi, True)
    gauss = lambda c: J.exp(s * (c * c))
    naive = bool(opts.get("naive_psi", False))
    if naive:
        funcs = [((lambda l: lambda c: c ** (l - 1) * gauss(c))(l), f"c^{l - 1} e^(s c^2)")
                 for l in range(1, 6)]

        def batch(c):
            g = gauss(c)
            return [g] + [q * g for q in _powers(c, 4)]
    else:
        if s > 0:
            anti = lambda c: 0.5 * math.sqrt(math.pi) * special.erfi(c)
        else:
            anti = lambda c: -0.5 * math.sqrt(math.pi) * special.erf(c)
        first = (lambda c: J.integral(lambda t: s * J.exp(s * (t * t)), anti, c),
                 "s int e^(s t^2)")
        funcs = [first] + [((lambda l: lambda c: c ** (l - 2) * gauss(c))(l),
                            f"c^{l - 2} e^(s c^2)") for l in range(2, 7)]

        def batch(c):
            g = gauss(c)
            return [first[0](c), g] + [q * g for q in _powers(c, 4)]
    psi = _psi(funcs, creg, batch=batch)
    return dict(theta=(t0, t1, t2), x_region=(lo, hi), c_region=creg, increasing=True,
                P=P, basis=basis, psi=psi, c_transform=ct, x_transform=xt,
                fisher=grad, eta=eta, options={"naive_psi": True} if naive else {})


_BUILDERS = {
    "emax3": _emax3,
    "exponential3": _exponential3,
    "loglinear3": _loglinear3,
    "sigmoid_emax": _sigmoid_emax,
    "logexp3": _logexp3,
    "emax_pk1": _emax_pk1,
    "logistic4": _logistic4,
    "polynomial": _polynomial,
    "weighted_polynomial": _weighted_polynomial,
    "poisson_quadratic": _poisson_quadratic,
}


def instantiate(family: str, theta, x_region, options: dict | None = None,
                noise_scale: float = 1.0) -> ModelSpec:
    """Build a :class:`ModelSpec` for one catalog family.

    Raises :class:`~garza.errors.ParameterError` when theta or the region
    break the family's constraints, including regions that touch a
    singularity of the c-transform.
    """
    try:
        build = _BUILDERS[family]
    except KeyError:
        raise ParameterError(f"unknown model family {family!r}") from None
    if not noise_scale > 0:
        raise ParameterError("noise_scale must be positive")
    fields_ = build(theta, x_region, dict(options or {}))
    fields_.setdefault("options", {})
    P = fields_["P"] / noise_scale
    grad = fields_["fisher"]
    fields_["fisher"] = lambda x: grad(x) / noise_scale
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > 1e14:
        raise ParameterError(f"P(theta) is numerically singular (cond={cond:.3g})")
    fields_["P"] = P
    lo, hi = fields_["c_region"]
    if not (lo < hi) or (math.isnan(lo) or math.isnan(hi)):
        raise ParameterError("c-transform does not map the region onto an interval")
    return ModelSpec(family=family, noise_scale=float(noise_scale), **fields_)


def raw_information(model: ModelSpec, x) -> np.ndarray:
    """Information of a one-point design at ``x`` from the model's own gradient."""
    h = model.fisher(np.atleast_1d(np.asarray(x, dtype=float)))
    return np.einsum("in,jn->nij", h, h)


# reference instances used by the scripts, the CLI catalog listing and tests
REFERENCE = {
    "emax3": dict(family="emax3", theta=(1.0, 1.0, 1.0), x_region=(0.0, 4.0)),
    "exponential3": dict(family="exponential3", theta=(0.0, 1.0, 2.0), x_region=(0.1, 5.0)),
    "loglinear3": dict(family="loglinear3", theta=(0.0, 1.0, 1.0), x_region=(0.0, 4.0)),
    "sigmoid_emax": dict(family="sigmoid_emax", theta=(1.0, 1.0, 1.0), x_region=(0.5, 2.0)),
    "logexp3": dict(family="logexp3", theta=(1.0, 1.0, 1.0), x_region=(0.0, 3.0)),
    "emax_pk1": dict(family="emax_pk1", theta=(1.0, 1.0, 1.0, 1.0), x_region=(0.0, 3.0),
                     options={"D": 1.0}),
    "logistic4_dette": dict(family="logistic4", theta=(0.0, 1.0, 2.0, 1.0),
                            x_region=(0.5, 4.0), options={"parametrization": "dette"}),
    "logistic4_li_majumdar": dict(family="logistic4", theta=(0.0, 1.0, -2.0, 1.0),
                                  x_region=(0.0, 4.0),
                                  options={"parametrization": "li_majumdar"}),
    "polynomial2": dict(family="polynomial", theta=(0.0, 0.0, 0.0), x_region=(-1.0, 1.0)),
    "polynomial3": dict(family="polynomial", theta=(0.0,) * 4, x_region=(-1.0, 1.0)),
    "weighted_i": dict(family="weighted_polynomial", theta=(0.0,) * 3,
                       x_region=(-0.95, 0.95),
                       options={"variant": "i", "alpha": 0.5, "beta": 1.0}),
    "weighted_ii": dict(family="weighted_polynomial", theta=(0.0,) * 3, x_region=(0.0, 6.0),
                        options={"variant": "ii"}),
    "weighted_iii": dict(family="weighted_polynomial", theta=(0.0,) * 3, x_region=(0.1, 6.0),
                         options={"variant": "iii", "alpha": 0.5}),
    "weighted_iv": dict(family="weighted_polynomial", theta=(0.0,) * 3, x_region=(-2.0, 2.0),
                        options={"variant": "iv"}),
    "weighted_v": dict(family="weighted_polynomial", theta=(0.0,) * 3, x_region=(-2.0, 2.0),
                       options={"variant": "v", "n": 3}),
    "poisson_neg": dict(family="poisson_quadratic", theta=(0.0, 0.0, -1.0),
                        x_region=(-1.0, 1.0)),
    "poisson_pos": dict(family="poisson_quadratic", theta=(0.0, 0.5, 1.0),
                        x_region=(-1.0, 1.0)),
}


def reference_model(name: str) -> ModelSpec:
    return instantiate(**REFERENCE[name])
