"""Moment-matching reduction of designs to minimal support.

The base case replaces ``N`` input points by a design whose free nodes
interlace them (one free node in each gap) plus the pinned endpoints of the
case.  Weights enter the moment equations linearly, so for fixed nodes the
first ``m`` equations (``m`` = number of output nodes) fix the weights and
the remaining ``N - 1`` equations form a square system in the free nodes.
That system is solved by damped Newton in logit coordinates that keep each
free node inside its gap, with a weight homotopy as fallback.  Larger
designs are folded in one point at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import Design, information_matrix, loewner_compare, to_c_space, to_x_space
from .errors import OracleError, SignContractError, SolverError
from .oracles import leave_one_out_d1, weights_from_nodes
from .psi import (
    DEFAULT_GRID,
    ReductionCase,
    SignCertificate,
    classify_case,
    normalize_signs,
    verify_signs,
)

MOMENT_TOL = 1e-10
NEWTON_MAX_ITER = 50
CONTINUATION_STEPS = 10
WEIGHT_CHECK_TOL = 1e-8
ENDPOINT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MomentVector:
    weight_total: float
    moments: np.ndarray
    top: float

    def as_array(self) -> np.ndarray:
        """``(r, m_1, ..., m_{k-1}, m_k)``."""
        return np.concatenate([[self.weight_total], self.moments, [self.top]])


def _rows(system, c, dtype=float) -> np.ndarray:
    c = np.asarray(c, dtype=dtype)
    return np.vstack([np.ones_like(c), system.values(c)])


def moments(system, design: Design) -> MomentVector:
    """Weighted sums of ``1, psi_1, ..., psi_k`` over a c-space design."""
    full = _rows(system, design.locations) @ design.weights
    return MomentVector(float(full[0]), full[1:-1].copy(), float(full[-1]))


@dataclass
class BaseCaseResult:
    design: Design
    iterations: int
    residual: float
    continuation_steps: int = 0
    weight_check: float = 0.0


def _gap_means(c, w):
    return (w[:-1] * c[:-1] + w[1:] * c[1:]) / (w[:-1] + w[1:])


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


class _BaseProblem:
    """Free-node formulation of one base case."""

    def __init__(self, system, case: ReductionCase, c, w):
        self.system = system
        self.k = system.k
        self.c = np.asarray(c, dtype=float)
        self.w = np.asarray(w, dtype=float)
        A, B = system.interval
        self.left = [A] if "A" in case.pinned else []
        self.right = [B] if "B" in case.pinned else []
        self.lo, self.hi = self.c[:-1], self.c[1:]
        self.nfree = self.c.size - 1
        self.m = self.nfree + len(self.left) + len(self.right)
        if self.m + self.nfree != self.k:
            raise SolverError(f"base case needs {self.k - self.m} free nodes, "
                              f"got {self.nfree} gaps")
        self.free_slice = slice(len(self.left), len(self.left) + self.nfree)
        # moment targets and residuals use extended precision so the final
        # full Newton steps can resolve nodes of badly conditioned systems
        self.input_rows = _rows(system, self.c, np.longdouble)[: self.k]

    def target(self, w=None):
        w = self.w if w is None else w
        return self.input_rows @ np.asarray(w, dtype=np.longdouble)

    def nodes(self, t):
        return np.concatenate([self.left, t, self.right])

    def to_u(self, t):
        s = (t - self.lo) / (self.hi - self.lo)
        s = np.clip(s, 1e-300, 1 - 1e-16)
        return np.log(s) - np.log1p(-s)

    def to_t(self, u):
        return self.lo + (self.hi - self.lo) * _sigmoid(u)

    def evaluate(self, u, target, jacobian=True):
        target = np.asarray(target, dtype=float)
        t = self.to_t(u)
        nodes = self.nodes(t)
        vals, ders = self.system.values_and_derivatives(nodes)
        rows = np.vstack([np.ones_like(nodes), vals[: self.k - 1]])
        drows = np.vstack([np.zeros_like(nodes), ders[: self.k - 1]])
        m = self.m
        V, W = rows[:m], rows[m:]
        try:
            w = np.linalg.solve(V, target[:m])
        except np.linalg.LinAlgError:
            return None
        scale = 1.0 + np.abs(target[m:])
        R = (W @ w - target[m:]) / scale
        if not jacobian:
            return t, w, R
        Vinv_dV = np.linalg.solve(V, drows[:m, self.free_slice])
        J = w[self.free_slice] * (drows[m:, self.free_slice] - W @ Vinv_dV)
        s = _sigmoid(u)
        J = J * ((self.hi - self.lo) * s * (1 - s)) / scale[:, None]
        return t, w, R, J


def _newton(problem: _BaseProblem, u, target, tol, max_iter):
    """Damped Newton on the scaled residual; returns ``(u, w, res, iters, ok)``."""
    out = problem.evaluate(u, target)
    if out is None:
        return u, None, math.inf, 0, False
    t, w, R, J = out
    res = float(np.max(np.abs(R)))
    it = 0
    for it in range(1, max_iter + 1):
        if res <= tol * 1e-3:
            break
        try:
            du = np.linalg.lstsq(J, -R, rcond=None)[0]
        except np.linalg.LinAlgError:
            return u, w, res, it, False
        du = np.clip(du, -4.0, 4.0)
        step = 1.0
        improved = False
        while step >= 1.0 / 1024:
            trial = problem.evaluate(u + step * du, target)
            if trial is not None:
                r_new = float(np.max(np.abs(trial[2])))
                if np.isfinite(r_new) and r_new < (1 - 1e-4 * step) * res:
                    u = u + step * du
                    t, w, R, J = trial
                    res = r_new
                    improved = True
                    break
            step *= 0.5
        if not improved:
            break
    if w is not None and res <= 1e-4:
        u, w = _polish(problem, u, w, target)
        res = _full_residual(problem, problem.to_t(u), w, target)
    ok = res <= tol and w is not None and bool(np.all(w > 0))
    return u, w, res, it, ok


def _full_residual(problem: _BaseProblem, t, w, target):
    rows = _rows(problem.system, problem.nodes(t), np.longdouble)[: problem.k]
    R = rows @ np.asarray(w, dtype=np.longdouble) - target
    return float(np.max(np.abs(R) / (1.0 + np.abs(target))))


def _polish(problem: _BaseProblem, u, w, target, iters=8):
    """Newton on the full square system (free nodes and weights together).

    The reduced iteration eliminates weights through a possibly
    ill-conditioned solve; a few full steps remove that error floor.  The
    residual is formed in extended precision and the Jacobian is row and
    column equilibrated, which turns these steps into an iterative
    refinement that stays effective for badly scaled systems.
    """
    target = np.asarray(target, dtype=np.longdouble)
    fs = problem.free_slice

    def full(u, w):
        t = problem.to_t(u)
        nodes = problem.nodes(t).astype(np.longdouble)
        vals, ders = problem.system.values_and_derivatives(nodes)
        rows = np.vstack([np.ones(problem.m, dtype=np.longdouble), vals[: problem.k - 1]])
        R = rows @ w.astype(np.longdouble) - target
        return rows.astype(float), ders.astype(float), R

    def jacobian(u, w, rows, ders):
        s = _sigmoid(u)
        dnode = np.vstack([np.zeros(problem.m), ders[: problem.k - 1]])[:, fs]
        return np.hstack([dnode * (w[fs] * (problem.hi - problem.lo) * s * (1 - s)), rows])

    rows, ders, R = full(u, w)
    J = jacobian(u, w, rows, ders)
    row_scale = 1.0 / np.maximum(np.abs(J).max(axis=1), 1e-300)

    def correction(J, R):
        Jr = J * row_scale[:, None]
        col_scale = 1.0 / np.maximum(np.abs(Jr).max(axis=0), 1e-300)
        y = np.linalg.solve(Jr * col_scale, -(R * row_scale).astype(float))
        return y * col_scale, float(np.max(np.abs(y)))

    # residual norms mislead when the system is this badly conditioned, so
    # steps are accepted by the natural monotonicity test: the simplified
    # correction with the old Jacobian must shrink
    try:
        d, size = correction(J, R)
    except np.linalg.LinAlgError:
        return u, w
    for _ in range(iters):
        if size <= 1e-17:
            break
        u1, w1 = u + d[: problem.nfree], w + d[problem.nfree:]
        rows1, ders1, R1 = full(u1, w1)
        try:
            _, size_bar = correction(J, R1)
        except np.linalg.LinAlgError:
            break
        if not size_bar < size:
            break
        u, w, R = u1, w1, R1
        J = jacobian(u, w, rows1, ders1)
        try:
            d, size = correction(J, R)
        except np.linalg.LinAlgError:
            break
    return u, w


def _homotopy_start(problem: _BaseProblem, t0):
    """Input weights for which the nodes ``t0`` solve the base case exactly."""
    nodes = problem.nodes(t0)
    merged = np.concatenate([problem.c, nodes])
    order = np.argsort(merged, kind="stable")
    is_input = order < problem.c.size
    w_all = weights_from_nodes(problem.system, merged[order], problem.w.sum())
    w0 = np.empty(problem.c.size)
    w0[order[is_input]] = w_all[is_input]
    return w0


def solve_base_case(system, case: ReductionCase, design: Design, init: Design | None = None,
                    *, tol: float = MOMENT_TOL, max_iter: int = NEWTON_MAX_ITER,
                    continuation_steps: int = CONTINUATION_STEPS) -> BaseCaseResult:
    """Reduce ``case.threshold`` points of a sign-normalized system.

    ``design`` holds the input points (c-space, any positive total weight,
    none of them on a pinned endpoint).  ``init`` optionally supplies free
    starting nodes; its pinned endpoints, if present, are ignored.  The
    result has ``case.max_support`` points matching the weight total and
    the first ``k-1`` moments.
    """
    c, w = design.locations, design.weights
    if c.size != case.threshold:
        raise SolverError(f"base case expects {case.threshold} input points, got {c.size}")
    A, B = system.interval
    if ("A" in case.pinned and c[0] <= A) or ("B" in case.pinned and c[-1] >= B):
        raise SolverError("input points must lie off the pinned endpoints")
    problem = _BaseProblem(system, case, c, w)
    target = problem.target()
    r = float(w.sum())

    if problem.nfree == 0:
        t = np.array([])
        wout = np.linalg.solve(_rows(system, problem.nodes(t))[: problem.m],
                               target[: problem.m].astype(float))
        return _finish(problem, t, wout, target, r, 0, 0)

    if init is not None:
        t_init = np.asarray(init.locations, dtype=float)
        t_init = t_init[(t_init > c[0]) & (t_init < c[-1])]
        if t_init.size != problem.nfree or np.any(t_init <= problem.lo) or \
                np.any(t_init >= problem.hi):
            raise SolverError("initial free nodes must interlace the input points")
    else:
        t_init = 0.5 * (_gap_means(c, w) + 0.5 * (c[:-1] + c[1:]))

    u, wout, res, iters, ok = _newton(problem, problem.to_u(t_init), target, tol, max_iter)
    stats = {"iters": iters, "steps": 0}
    if not ok:
        ok, u, wout, res = _weight_homotopy(problem, w, tol, max_iter, continuation_steps, stats)
    if not ok:
        ok, u, wout, res = _location_homotopy(system, case, c, w, tol, max_iter,
                                              continuation_steps, stats)
    if not ok:
        raise SolverError(f"Newton and both continuations failed (best residual {res:.3g})",
                          residual=res)
    t = problem.to_t(u)
    return _finish(problem, t, wout, target, r, stats["iters"], stats["steps"])


def _track(problem_at, u, w_at, tol, max_iter, continuation_steps, stats, budget=400):
    """Follow a one-parameter family of problems from s=0 (solved by ``u``) to s=1."""
    s, h = 0.0, 1.0 / continuation_steps
    w, res = None, math.inf
    used = 0
    while s < 1.0:
        s1 = min(1.0, s + h)
        prob = problem_at(s1)
        u1, w1, r1, it1, ok1 = _newton(prob, u, prob.target(w_at(s1)), tol, max_iter)
        stats["iters"] += it1
        stats["steps"] += 1
        used += 1
        if ok1:
            s, u, w, res = s1, u1, w1, r1
            h = min(2 * h, 1.0 / continuation_steps)
        else:
            res = min(res, r1)
            h *= 0.5
            if h < 1e-7 or used > budget:
                return False, u, w, res
    return True, u, w, res


def _weight_homotopy(problem, w, tol, max_iter, continuation_steps, stats):
    """Convex path in the input weights, starting where gap midpoints are exact."""
    c = problem.c
    t_mid = 0.5 * (c[:-1] + c[1:])
    try:
        w0 = _homotopy_start(problem, t_mid)
    except OracleError:
        return False, None, None, math.inf
    return _track(lambda s: problem, problem.to_u(t_mid), lambda s: (1 - s) * w0 + s * w,
                  tol, max_iter, continuation_steps, stats)


def _location_homotopy(system, case, c, w, tol, max_iter, continuation_steps, stats):
    """Move equally spaced inputs onto the actual ones, carrying the free nodes.

    Clustered inputs make the determinant start of the weight homotopy
    unresolvable in double precision, while equally spaced inputs are well
    conditioned; free nodes keep their relative position inside each gap.
    """
    c_eq = np.linspace(c[0], c[-1], c.size)
    start = _BaseProblem(system, case, c_eq, w)
    t0 = 0.5 * (c_eq[:-1] + c_eq[1:])
    u, _, _, it, ok = _newton(start, start.to_u(t0), start.target(), tol, max_iter)
    stats["iters"] += it
    if not ok:
        ok, u, _, _ = _weight_homotopy(start, w, tol, max_iter, continuation_steps, stats)
        if not ok:
            return False, None, None, math.inf
    return _track(lambda s: _BaseProblem(system, case, (1 - s) * c_eq + s * c, w), u,
                  lambda s: w, tol, max_iter, continuation_steps, stats)


def _finish(problem, t, wout, target, r, iters, steps):
    res = _full_residual(problem, t, wout, target)
    if not res <= MOMENT_TOL:
        raise SolverError(f"moment residual {res:.3g} above tolerance", residual=res)
    if np.any(wout <= 0):
        raise SignContractError(
            f"sign contract violated: converged weight {wout.min():.3g} <= 0", residual=res)
    nodes = problem.nodes(t)
    if np.any(np.diff(nodes) <= 0):
        raise SolverError("free nodes collapsed onto their neighbours", residual=res)
    check = 0.0
    if t.size:
        merged = np.concatenate([problem.c, nodes])
        order = np.argsort(merged, kind="stable")
        if np.any(np.diff(merged[order]) <= 0):
            # a free node sits within rounding of an input point; the
            # determinant formula is undefined there, so skip the check
            design = Design(nodes, wout, "c", normalized=False)
            return BaseCaseResult(design, iters, res, steps, math.nan)
        d, noise = leave_one_out_d1(problem.system, merged[order])
        if np.any(np.abs(d) <= noise):
            design = Design(nodes, wout, "c", normalized=False)
            return BaseCaseResult(design, iters, res, steps, math.nan)
        try:
            w_all = weights_from_nodes(problem.system, merged[order], r)
        except OracleError as exc:
            raise SolverError(f"weight cross-check failed: {exc}", residual=res) from exc
        w_det = w_all[order >= problem.c.size]
        check = float(np.max(np.abs(w_det - wout)) / max(r, 1e-300))
        if check > WEIGHT_CHECK_TOL:
            # the determinant ratios lose digits to cancellation when nodes
            # crowd together; only a formula that itself matches the moments
            # better than the solver's weights can convict the solver
            res_det = _full_residual(problem, t, w_det, target)
            if res_det <= res:
                raise SolverError(
                    f"weights disagree with the determinant formula by {check:.3g}",
                    residual=res)
    design = Design(nodes, wout, "c", normalized=False)
    return BaseCaseResult(design, iters, res, steps, check)


def _at(c, e):
    return math.isfinite(e) and abs(c - e) <= ENDPOINT_TOL * (1.0 + abs(e))


@dataclass
class InductionResult:
    design: Design
    iterations: int = 0
    steps: int = 0


def inductive_reduce(system, case: ReductionCase, design: Design, **solver_kw) -> InductionResult:
    """Fold the points of a c-space design into a minimal-support design.

    Points are added in ascending order to a pool of free points; whenever
    the pool reaches the base-case size it is replaced by the solved free
    nodes and the pinned weights accumulate.  Designs with fewer than
    ``case.threshold`` points off the pinned endpoints come back unchanged.
    """
    A, B = system.interval
    pinned = {"A": 0.0, "B": 0.0}
    rest_c, rest_w = [], []
    for c, w in zip(design.locations, design.weights):
        if "A" in case.pinned and _at(c, A):
            pinned["A"] += w
        elif "B" in case.pinned and _at(c, B):
            pinned["B"] += w
        else:
            rest_c.append(c)
            rest_w.append(w)
    N = case.threshold
    if len(rest_c) < N:
        return InductionResult(design)

    pool_c, pool_w = [], []
    iters = steps = 0
    for i, (c, w) in enumerate(zip(rest_c, rest_w)):
        j = int(np.searchsorted(pool_c, c))
        pool_c.insert(j, c)
        pool_w.insert(j, w)
        if len(pool_c) < N:
            continue
        sub = Design(np.array(pool_c), np.array(pool_w), "c", normalized=False)
        try:
            res = solve_base_case(system, case, sub, **solver_kw)
        except SolverError as exc:
            raise type(exc)(f"induction step {i}: {exc}", residual=exc.residual,
                            step=i) from exc
        iters += res.iterations
        steps += 1
        out_c, out_w = res.design.locations, res.design.weights
        lo = 1 if "A" in case.pinned else 0
        hi = out_c.size - (1 if "B" in case.pinned else 0)
        if "A" in case.pinned:
            pinned["A"] += out_w[0]
        if "B" in case.pinned:
            pinned["B"] += out_w[-1]
        pool_c, pool_w = list(out_c[lo:hi]), list(out_w[lo:hi])

    locs = ([A] if pinned["A"] > 0 else []) + pool_c + ([B] if pinned["B"] > 0 else [])
    wts = ([pinned["A"]] if pinned["A"] > 0 else []) + pool_w + \
        ([pinned["B"]] if pinned["B"] > 0 else [])
    out = Design(np.array(locs), np.array(wts), "c", normalized=design.normalized)
    return InductionResult(out, iters, steps)


@dataclass
class ReductionReport:
    input: Design
    output: Design
    case: ReductionCase
    moment_residuals: np.ndarray
    top_moment_gain: float
    dominance_margin: float
    iterations: int
    certificate: SignCertificate
    flips: tuple
    info_input: np.ndarray = field(repr=False)
    info_output: np.ndarray = field(repr=False)
    alternate_gains: tuple = ()
    induction_steps: int = 0

    @property
    def scaled_residuals(self) -> np.ndarray:
        return self.moment_residuals

    @property
    def dominance_tol(self) -> float:
        return 1e-8 * (1.0 + float(np.abs(self.info_input).sum(axis=1).max()))

    @property
    def dominates(self) -> bool:
        return self.dominance_margin >= -self.dominance_tol


def effective_interval(system, c):
    """Finite interval for a reduction: unbounded ends come from the data."""
    A, B = system.interval
    lo = A if math.isfinite(A) else float(np.min(c))
    hi = B if math.isfinite(B) else float(np.max(c))
    if not lo < hi:
        # one-point data on a half-line: any finite window certifies nothing new
        hi = lo + 1.0 if not math.isfinite(B) else hi
        lo = hi - 1.0 if not math.isfinite(A) else lo
    return lo, hi


_CERT_CACHE: dict = {}


def certify(system, grid_size: int = DEFAULT_GRID) -> SignCertificate:
    """``verify_signs`` with a per-process cache keyed by system and grid."""
    key = (id(system.functions), system.interval, grid_size)
    hit = _CERT_CACHE.get(key)
    if hit is not None and hit[0] is system.functions:
        return hit[1]
    cert = verify_signs(system, grid_size)
    if len(_CERT_CACHE) > 256:
        _CERT_CACHE.clear()
    _CERT_CACHE[key] = (system.functions, cert)
    return cert


def reduce_design(model, design: Design, grid_size: int = DEFAULT_GRID,
                  **solver_kw) -> ReductionReport:
    """Loewner-dominating design on minimal support for ``model``.

    Transforms to c-space, certifies the diagonal signs, normalizes them,
    reduces inductively and transforms back.  Raises
    :class:`~garza.errors.ChebyshevViolation` when certification fails and
    :class:`~garza.errors.SolverError` when the moment solve fails.
    """
    cdes = to_c_space(model, design)
    cdes = Design.build(cdes.locations, cdes.weights, "c", normalized=design.normalized)
    system = model.psi
    if not system.bounded:
        system = system.restricted(*effective_interval(system, cdes.locations))
    cert = certify(system, grid_size)
    case = classify_case(cert.signs, system.k)
    normed, eps = normalize_signs(system, cert.signs)
    red = inductive_reduce(normed, case, cdes, **solver_kw)
    out_c = red.design

    m_in, m_out = moments(system, cdes).as_array(), moments(system, out_c).as_array()
    resid = (m_out - m_in)[:-1] / (1.0 + np.abs(m_in[:-1]))
    # the top function enters the information matrix with its original sign
    gain = m_out[-1] - m_in[-1]
    alt = []
    for variant in list(system.variants())[1:]:
        alt.append(moments(variant, out_c).top - moments(variant, cdes).top)

    out_x = to_x_space(model, out_c) if design.space == "x" else out_c
    I_in = information_matrix(model, design)
    I_out = information_matrix(model, out_x)
    verdict = loewner_compare(I_in, I_out)
    return ReductionReport(design, out_x, case, resid, float(gain), verdict.margin,
                           red.iterations, cert, eps, I_in, I_out, tuple(alt), red.steps)
