"""Determinant oracles for Chebyshev-type systems and closed-form weights.

``det_g`` is the determinant of first derivatives at ordered points,
``det_D`` the determinant of increments over disjoint ordered intervals and
``det_D1`` its specialization to consecutive increments of one ordered set.
For a sign-normalized system all three are positive, which is what makes
the moment-matching weights positive and alternating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleError


def det_full_pivot(M, dtype=float) -> float:
    """Determinant by Gaussian elimination with complete pivoting.

    ``dtype=np.longdouble`` runs the elimination in extended precision where
    the platform has it.
    """
    a = np.array(M, dtype=dtype)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("determinant needs a square matrix")
    n = a.shape[0]
    det = 1.0
    for i in range(n):
        sub = np.abs(a[i:, i:])
        p, q = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[p, q] == 0.0:
            return 0.0
        if p:
            a[[i, i + p]] = a[[i + p, i]]
            det = -det
        if q:
            a[:, [i, i + q]] = a[:, [i + q, i]]
            det = -det
        piv = a[i, i]
        det *= piv
        if i + 1 < n:
            a[i + 1:, i:] -= np.outer(a[i + 1:, i] / piv, a[i, i:])
    return float(det)


def _strict(points, name="points"):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or np.any(np.diff(pts) <= 0):
        raise OracleError(f"{name} must be strictly increasing")
    return pts


def _first(system, m, c):
    return system.values(c)[:m]


def det_g(system, points) -> float:
    """det of ``[psi_l'(c_i)]`` for ``l, i = 1..m``."""
    pts = _strict(points)
    m = pts.size
    if not 1 <= m <= system.k:
        raise OracleError("det_g needs 1 <= m <= k points")
    _, d = system.values_and_derivatives(pts)
    return det_full_pivot(d[:m])


def det_D(system, pairs) -> float:
    """det of the increment columns ``psi(b_i) - psi(a_i)``, ``l = 1..m``."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    m = pairs.shape[0]
    if not 1 <= m <= system.k:
        raise OracleError("det_D needs 1 <= m <= k intervals")
    a, b = pairs[:, 0], pairs[:, 1]
    if np.any(b < a) or np.any(a[1:] < b[:-1]):
        raise OracleError("intervals must satisfy a1 <= b1 <= a2 <= ... <= bm")
    return det_full_pivot(_first(system, m, b) - _first(system, m, a))


def det_D1(system, points) -> float:
    """``det_D`` over consecutive pairs of one ordered set of ``m+1`` points."""
    pts = _strict(points)
    m = pts.size - 1
    if not 1 <= m <= system.k:
        raise OracleError("det_D1 needs between 2 and k+1 points")
    vals = _first(system, m, pts)
    return det_full_pivot(np.diff(vals, axis=1))


def leave_one_out(points):
    """Yield ``(j, points without entry j)`` for every index."""
    pts = np.asarray(points, dtype=float)
    for j in range(pts.size):
        yield j, np.delete(pts, j)


def leave_one_out_d1(system, nodes):
    """``D1(nodes without j)`` for each ``j`` plus a rounding-noise estimate.

    The noise is ``n * eps`` times the Hadamard bound of each increment
    matrix; a determinant below it has no reliable sign in double precision.
    """
    pts = _strict(nodes, "nodes")
    m = pts.size - 2
    if m < 1:
        return np.ones(pts.size), np.zeros(pts.size)
    # increments and eliminations in extended precision: the leave-one-out
    # matrices are badly conditioned for wide intervals and many functions
    vals = system.values(pts)[:m].astype(np.longdouble)
    d = np.empty(pts.size)
    noise = np.empty(pts.size)
    for j, _ in leave_one_out(pts):
        inc = np.diff(np.delete(vals, j, axis=1), axis=1)
        d[j] = det_full_pivot(inc, np.longdouble)
        noise[j] = 8 * m * np.finfo(float).eps * np.prod(np.linalg.norm(vals, axis=1)) * 2 ** m
    return d, noise


def weights_from_nodes(system, nodes, weight_total: float) -> np.ndarray:
    """Moment-matching weights on ``k+1`` merged ordered nodes.

    The signed vector ``(-1)^j D1(nodes without j)`` spans the null space of
    ``[1; psi_1; ...; psi_{k-1}]`` at the nodes.  Each alternating class is
    rescaled to sum to ``weight_total``; the caller picks the class that
    holds the output nodes.
    """
    pts = _strict(nodes, "nodes")
    k = system.k
    if pts.size != k + 1:
        raise OracleError(f"expected k+1 = {k + 1} merged nodes, got {pts.size}")
    d, noise = leave_one_out_d1(system, pts)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        j = int(np.argmin(d))
        note = " (below rounding level)" if abs(d[j]) <= noise[j] else ""
        raise OracleError(
            f"interlacing or Chebyshev violation: D1 without node {j} is {d[j]:.3g}{note}")
    w = np.empty_like(d)
    w[0::2] = weight_total * d[0::2] / d[0::2].sum()
    w[1::2] = weight_total * d[1::2] / d[1::2].sum()
    return w


@dataclass(frozen=True)
class SignPattern:
    holds: bool
    kind: str
    detail: str = ""


def sign_pattern_check(system, points, r, tol: float = 1e-9) -> SignPattern:
    """Check the sign structure of a null combination ``sum r_i (1, psi(z_i)) = 0``.

    With at most ``k`` points only the zero combination exists; with ``k+1``
    points a nonzero combination must strictly alternate in sign.
    """
    pts = _strict(points)
    r = np.asarray(r, dtype=float)
    if r.shape != pts.shape:
        raise OracleError("r must match the number of points")
    rows = np.vstack([np.ones_like(pts), system.values(pts)[: system.k - 1]])
    scale = 1.0 + np.abs(rows) @ np.abs(r)
    resid = np.abs(rows @ r) / scale
    if np.max(resid) > tol:
        raise OracleError(f"not a null combination (residual {np.max(resid):.3g})")
    rtol = tol * (1.0 + np.max(np.abs(r), initial=0.0))
    if np.all(np.abs(r) <= rtol):
        return SignPattern(True, "zero")
    t = pts.size
    if t <= system.k:
        return SignPattern(False, "impossible",
                           f"nonzero null combination on {t} <= k points")
    if t == system.k + 1:
        s = np.sign(r)
        small = np.abs(r) <= rtol
        if np.any(small) or np.any(s[1:] == s[:-1]):
            return SignPattern(False, "not_alternating", f"signs {s.astype(int).tolist()}")
        return SignPattern(True, "alternating")
    return SignPattern(True, "unconstrained", "more than k+1 points")
