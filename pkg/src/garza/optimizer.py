"""Locally optimal designs on the minimal support class.

The search runs over designs with exactly ``case.max_support`` points, the
class that the reduction shows to be complete.  Pinned endpoints stay fixed;
free nodes live in c-space under box bounds and weights go through a softmax,
so every start is an unconstrained-looking L-BFGS-B problem with analytic
gradients.  ``equivalence_check`` certifies a result through the usual
directional derivative over an x-grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .design import Design, information_matrix, to_x_space
from .errors import CriterionError
from .psi import classify_case
from .reduction import certify

KINDS = ("D", "A", "E", "c", "Phi")
DEFAULT_STARTS = 16
EQUIVALENCE_GRID = 2001
SINGULAR_RCOND = 1e-12
_PENALTY = 1e100
RIDGE = 1e-12


@dataclass(frozen=True)
class Criterion:
    """Design criterion as a loss to minimize.

    ``D``: -log det M.  ``A``: tr M^-1.  ``E``: -lambda_min(M).
    ``c``: c' M^- c.  ``Phi``: -(tr(M^q)/p)^(1/q) for a finite exponent
    ``q < 1``, q != 0 (q = -1 is A-type, q -> 0 D-type, q -> -inf E-type).
    """

    kind: str = "D"
    vector: tuple | None = None
    exponent: float | None = None
    rcond: float = SINGULAR_RCOND
    equivalence_tol: float = 1e-4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CriterionError(f"unknown criterion {self.kind!r}; expected one of {KINDS}")
        if self.kind == "c":
            if self.vector is None or len(self.vector) == 0:
                raise CriterionError("c-criterion needs a coefficient vector")
            object.__setattr__(self, "vector", tuple(float(v) for v in self.vector))
        if self.kind == "Phi":
            q = self.exponent
            if q is None or not math.isfinite(q) or q == 0 or q >= 1:
                raise CriterionError("Phi criterion needs a finite exponent q < 1, q != 0")

    @property
    def label(self) -> str:
        if self.kind == "Phi":
            return f"Phi_{self.exponent:g}"
        return self.kind

    def _check_dim(self, p):
        if self.kind == "c" and len(self.vector) != p:
            raise CriterionError(f"c-vector has length {len(self.vector)}, model has p={p}")

    def _eig(self, M):
        lam, vec = np.linalg.eigh(0.5 * (M + M.T))
        if lam[0] <= self.rcond * max(lam[-1], 0.0) or lam[-1] <= 0:
            return lam, vec, True
        return lam, vec, False

    def loss_and_grad(self, M):
        """Loss and its symmetric gradient with respect to ``M``.

        Raises :class:`CriterionError` where the criterion is undefined.
        """
        M = np.asarray(M, dtype=float)
        p = M.shape[0]
        self._check_dim(p)
        lam, vec, singular = self._eig(M)
        if self.kind == "E":
            v = vec[:, 0]
            return -lam[0], -np.outer(v, v)
        if self.kind == "c":
            c = np.asarray(self.vector)
            if singular:
                # estimable iff c lies in the range of M
                keep = lam > self.rcond * max(lam[-1], 0.0)
                proj = vec[:, keep] @ (vec[:, keep].T @ c)
                if lam[-1] <= 0 or np.linalg.norm(c - proj) > 1e-8 * (1 + np.linalg.norm(c)):
                    raise CriterionError("c'theta is not estimable under this design")
                z = vec[:, keep] @ ((vec[:, keep].T @ c) / lam[keep])
            else:
                z = vec @ ((vec.T @ c) / lam)
            return float(c @ z), -np.outer(z, z)
        if singular:
            raise CriterionError(f"{self.label}-criterion undefined: information matrix singular")
        if self.kind == "D":
            inv = (vec / lam) @ vec.T
            return -float(np.sum(np.log(lam))), -inv
        if self.kind == "A":
            inv2 = (vec / lam ** 2) @ vec.T
            return float(np.sum(1.0 / lam)), -inv2
        q = self.exponent
        s = float(np.sum(lam ** q)) / p
        phi = s ** (1.0 / q)
        dM = phi ** (1.0 - q) * ((vec * lam ** (q - 1)) @ vec.T) / p
        return -phi, -dM

    def value(self, M) -> float:
        return self.loss_and_grad(M)[0]


@dataclass(frozen=True)
class EquivalenceResult:
    max_violation: float
    location: float
    grid: np.ndarray = field(repr=False)
    derivative: np.ndarray = field(repr=False)
    tol: float = 1e-4

    @property
    def optimal(self) -> bool:
        return self.max_violation <= self.tol


def _grid(model, grid: int):
    lo, hi = model.x_region
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise CriterionError("the equivalence check needs a bounded design region")
    return np.linspace(lo, hi, grid)


def directional_derivative(model, M, criterion: Criterion, x) -> np.ndarray:
    """Derivative of the concave criterion from ``M`` toward one-point designs at ``x``.

    For D this is ``h' M^-1 h - p``; nonpositive everywhere iff optimal.
    """
    h = model.info_vector(model.c_of_x(np.atleast_1d(np.asarray(x, dtype=float))))
    loss, G = criterion.loss_and_grad(M)
    # d/dt loss((1-t) M + t h h') at t=0, sign flipped to a gain
    return -(np.einsum("in,ij,jn->n", h, G, h) - np.sum(G * M))


def equivalence_check(model, design: Design, criterion: Criterion | None = None,
                      grid: int = EQUIVALENCE_GRID) -> EquivalenceResult:
    """Maximum directional derivative over an x-grid and where it occurs."""
    criterion = criterion or Criterion("D")
    M = information_matrix(model, design)
    xs = _grid(model, grid)
    d = directional_derivative(model, M, criterion, xs)
    i = int(np.argmax(d))
    return EquivalenceResult(float(d[i]), float(xs[i]), xs, d, criterion.equivalence_tol)


@dataclass
class OptimizationResult:
    design: Design
    value: float
    criterion: Criterion
    equivalence: EquivalenceResult | None
    starts: int
    failed_starts: int
    case_label: str


class _Objective:
    """Loss of a support-class design as a function of (free c, logits)."""

    def __init__(self, model, criterion, pinned_c, nfree):
        self.model = model
        # the ridge below stands in for the singularity cutoff during the search
        self.criterion = replace(criterion, rcond=0.0)
        self.pinned_c = np.asarray(pinned_c, dtype=float)
        self.nfree = nfree
        self.h_pin = model.info_vector(self.pinned_c) if self.pinned_c.size else \
            np.zeros((model.p, 0))

    def unpack(self, z):
        c = z[: self.nfree]
        logits = np.concatenate([[0.0], z[self.nfree:]])
        w = np.exp(logits - logits.max())
        return c, w / w.sum()

    def info(self, c, w):
        v, dv = self.model.basis_values(c, order=1)
        h_free = self.model.P @ v
        h = np.concatenate([h_free, self.h_pin], axis=1)
        M = (h * w) @ h.T
        return 0.5 * (M + M.T), h, self.model.P @ dv

    def __call__(self, z):
        c, w = self.unpack(z)
        M, h, dh = self.info(c, w)
        # a tiny ridge keeps the loss finite and smooth when nodes collide
        ridge = RIDGE * np.trace(M) / M.shape[0]
        try:
            loss, G = self.criterion.loss_and_grad(M + ridge * np.eye(M.shape[0]))
        except CriterionError:
            return _PENALTY, np.zeros_like(z)
        Gh = G @ h
        gw = np.einsum("in,in->n", h, Gh)
        gz_w = w * (gw - w @ gw)
        gc = 2.0 * w[: self.nfree] * np.einsum("in,in->n", dh, Gh[:, : self.nfree])
        return float(loss), np.concatenate([gc, gz_w[1:]])


def _starts(lo, hi, nfree, npoints, n_starts, rng):
    base = lo + (hi - lo) * (np.arange(1, nfree + 1) / (nfree + 1))
    yield np.concatenate([base, np.zeros(npoints - 1)])
    for _ in range(n_starts - 1):
        c = np.sort(rng.uniform(lo, hi, nfree))
        jitter = 0.5 * (base + c)
        pick = jitter if rng.random() < 0.5 else c
        yield np.concatenate([pick, rng.normal(0.0, 0.5, npoints - 1)])


def support_class(model, grid_size: int | None = None):
    """Case, pinned c-endpoints and free-node count of the minimal class."""
    kw = {} if grid_size is None else {"grid_size": grid_size}
    system = model.psi
    if not system.bounded:
        raise CriterionError("optimization needs a bounded design region")
    cert = certify(system, **kw)
    case = classify_case(cert.signs, system.k)
    A, B = system.interval
    pinned = [A] * ("A" in case.pinned) + [B] * ("B" in case.pinned)
    return case, pinned, case.max_support - len(pinned)


def optimize(model, criterion: Criterion | None = None, *, n_starts: int = DEFAULT_STARTS,
             seed: int = 0, grid: int = EQUIVALENCE_GRID, grid_size: int | None = None,
             check: bool = True) -> OptimizationResult:
    """Best design with ``case.max_support`` points for ``criterion``.

    Deterministic for a fixed seed.  Ties between starts go to the
    lexicographically smaller design.
    """
    criterion = criterion or Criterion("D")
    criterion._check_dim(model.p)
    case, pinned, nfree = support_class(model, grid_size)
    npoints = nfree + len(pinned)
    lo, hi = model.psi.interval
    obj = _Objective(model, criterion, pinned, nfree)
    rng = np.random.default_rng(seed)
    bounds = [(lo, hi)] * nfree + [(-30.0, 30.0)] * (npoints - 1)
    best = None
    failed = 0
    for z0 in _starts(lo, hi, nfree, npoints, n_starts, rng):
        try:
            criterion.value(obj.info(*obj.unpack(z0))[0])
        except CriterionError:
            failed += 1
            continue
        res = minimize(obj, z0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-11})
        c, w = obj.unpack(res.x)
        key = (round(float(res.fun), 10), tuple(np.round(np.sort(c), 8)))
        if res.fun < _PENALTY and (best is None or key < best[0]):
            best = (key, float(res.fun), np.concatenate([c, pinned]), w)
    if best is None:
        raise CriterionError(f"{criterion.label}-criterion undefined on the support class: "
                             f"singular information at every start")
    _, val, c, w = best
    cdes = Design.build(c, w, "c", normalize=True)
    design = to_x_space(model, cdes)
    value = criterion.value(information_matrix(model, design))
    eq = equivalence_check(model, design, criterion, grid) if check else None
    return OptimizationResult(design, value, criterion, eq, n_starts, failed, case.label)
