"""Designs, information matrices, Loewner comparison and merging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import check_range
from .errors import DesignError, ShapeError

COALESCE_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
SPACES = ("x", "c")


@dataclass(frozen=True, eq=False)
class Design:
    """Support points with positive weights.

    ``locations`` are strictly increasing.  General designs have weights
    summing to one; sub-designs used inside the reduction carry a smaller
    total and are built with ``normalized=False``.
    """

    locations: np.ndarray
    weights: np.ndarray
    space: str = "x"
    normalized: bool = True

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.locations, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if loc.ndim != 1 or loc.shape != w.shape:
            raise DesignError("locations and weights must be 1-d arrays of equal length")
        if loc.size == 0:
            raise DesignError("a design needs at least one support point")
        if self.space not in SPACES:
            raise DesignError(f"unknown design space {self.space!r}")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise DesignError("locations and weights must be finite")
        if np.any(w <= 0):
            raise DesignError("weights must be strictly positive")
        if np.any(np.diff(loc) <= 0):
            raise DesignError("locations must be strictly increasing")
        if self.normalized and abs(w.sum() - 1.0) > WEIGHT_SUM_TOL * max(1, loc.size):
            raise DesignError(f"weights sum to {w.sum():.17g}, expected 1")
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def build(cls, locations, weights, space: str = "x", *, normalize: bool = False,
              normalized: bool = True, tol: float = COALESCE_TOL) -> "Design":
        """Sort, coalesce near-duplicate locations and optionally rescale."""
        loc, w = coalesce(locations, weights, tol)
        if normalize:
            w = w / w.sum()
        return cls(loc, w, space, normalized)

    @property
    def size(self) -> int:
        return self.locations.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def points(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def scaled(self, factor: float) -> "Design":
        return Design(self.locations, self.weights * factor, self.space, normalized=False)

    def __repr__(self):
        pts = ", ".join(f"({c:.6g}, {w:.6g})" for c, w in self.points())
        return f"Design[{self.space}]({pts})"


def coalesce(locations, weights, tol: float = COALESCE_TOL):
    """Sort points and add up the weights of locations closer than ``tol``."""
    loc = np.atleast_1d(np.asarray(locations, dtype=float))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if loc.shape != w.shape:
        raise DesignError("locations and weights must have equal length")
    order = np.argsort(loc, kind="stable")
    loc, w = loc[order], w[order]
    out_l, out_w = [], []
    for c, wi in zip(loc, w):
        if out_l and abs(c - out_l[-1]) <= tol * (1.0 + abs(c)):
            # keep the location of the heavier point
            if wi > out_w[-1]:
                out_l[-1] = c
            out_w[-1] += wi
        else:
            out_l.append(c)
            out_w.append(wi)
    return np.array(out_l), np.array(out_w)


def to_c_space(model, design: Design) -> Design:
    if design.space == "c":
        return design
    c = model.c_of_x(design.locations)
    order = np.argsort(c)
    return Design(c[order], design.weights[order], "c", design.normalized)


def to_x_space(model, design: Design) -> Design:
    if design.space == "x":
        return design
    x = model.x_of_c(design.locations)
    order = np.argsort(x)
    return Design(x[order], design.weights[order], "x", design.normalized)


def information_matrix(model, design: Design) -> np.ndarray:
    """``P (sum_i w_i v(c_i) v(c_i)^T) P^T`` for a design in either space."""
    if design.space == "x":
        design = to_c_space(model, design)
    else:
        check_range(design.locations, model.c_region, "c")
    h = model.info_vector(design.locations)
    M = (h * design.weights) @ h.T
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class LoewnerVerdict:
    relation: str
    margin: float
    tol: float

    @property
    def dominates(self) -> bool:
        return self.relation in ("dominates", "equal")


def default_tol(*mats) -> float:
    return 1e-9 * (1.0 + max(np.abs(np.asarray(m)).sum(axis=1).max() for m in mats))


def loewner_compare(M1, M2, tol: float | None = None) -> LoewnerVerdict:
    """Compare ``M2`` against ``M1`` through the spectrum of ``M2 - M1``.

    ``dominates`` means ``M2 >= M1``.  ``margin`` is the smallest eigenvalue
    of the difference.
    """
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    if M1.ndim != 2 or M1.shape[0] != M1.shape[1] or M1.shape != M2.shape:
        raise ShapeError(f"cannot compare matrices of shapes {M1.shape} and {M2.shape}")
    tol = default_tol(M1, M2) if tol is None else float(tol)
    diff = M2 - M1
    if np.max(np.abs(diff - diff.T), initial=0.0) > tol:
        raise ShapeError("matrices are not symmetric within tolerance")
    eig = np.linalg.eigvalsh(0.5 * (diff + diff.T))
    up = eig[0] >= -tol
    down = eig[-1] <= tol
    if up and down:
        rel = "equal"
    elif up:
        rel = "dominates"
    elif down:
        rel = "dominated"
    else:
        rel = "incomparable"
    return LoewnerVerdict(rel, float(eig[0]), tol)


def merge_designs(d1: Design, w1: float, d2: Design) -> Design:
    """Weighted union ``w1*d1 + (1-w1)*d2`` with coincident points coalesced."""
    if d1.space != d2.space:
        raise DesignError("cannot merge designs living in different spaces")
    if not 0.0 < w1 < 1.0:
        raise DesignError("merge fraction must lie strictly between 0 and 1")
    loc = np.concatenate([d1.locations, d2.locations])
    w = np.concatenate([w1 * d1.weights / d1.total, (1.0 - w1) * d2.weights / d2.total])
    return Design.build(loc, w, d1.space, normalize=True)
