"""Capacities and centers of finite channels.

The A-L capacity ``C^lam_alpha(W) = sup_P I_alpha(P; W) - lam . E_P[c]``
equals the R-G capacity ``sup_P G^lam_alpha(P)``, and the latter has a
closed-form objective.  It is maximized by the multiplicative update

    P(x) <- P(x) exp(alpha [D_alpha(W(x) || qg^lam_P) - lam . c(x)]),

which is a minorize-maximize step for every order.  At ``alpha = 1`` it is
the Blahut-Arimoto update with a cost shift.  SQUAREM extrapolation
accelerates it, guarded so the objective never decreases.  Every result
carries a certificate: for any ``Q`` the radius
``max_x D_alpha(W(x) || Q) - lam . c(x)`` bounds the capacity from above, so
``radius - value`` bounds the optimization error.

Cost-constrained capacities are computed on the dual side,
``C(rho) = min_lam C^lam + lam . rho`` for ``rho`` interior to the feasible
set, with a primal lower bound from a feasible mixture of inner solutions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .augustin_mean import (
    ConvergenceError,
    _cost_shift,
    fixed_point,
    solve_augustin_mean,
)
from .core_model import (
    Channel,
    CostSpec,
    Order,
    Prob,
    ValidationError,
    additive_cost,
    as_order,
    lam_vector,
    product_channel,
    total_variation,
    weights_of,
)
from .renyi_divergence import PowerKernel, _log, _lse, renyi_divergence

MAX_COST_DIM = 3
STALL_ITERS = 200
LOG_FLOOR = 700.0


class InfeasibleConstraintError(ValueError):
    """The cost constraint cannot be met by any input distribution."""


class BoundaryConstraintError(ValueError):
    """The cost constraint lies on the boundary of the feasible set.

    Lagrange duality can fail there: the non-upper-semicontinuous shift
    channel has ``C(0) = ln(3/2)`` while ``inf_lam C^lam = ln 2``.
    """


@dataclass(frozen=True)
class CapacityResult:
    """Capacity value with its center and certificate.

    ``upper_bound`` is a certified upper bound on the exact capacity (the
    radius at ``center``); ``value`` is attained, up to inner solver
    accuracy, by ``argmax_input``.
    """

    value: float
    center: Prob | None
    argmax_input: Prob | None
    dual_multiplier: np.ndarray | None = None
    converged: bool = True
    upper_bound: float = math.nan
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# R-G maximization


class _RGObjective:
    """``G^lam_alpha`` on log-input weights with its center and radius vector."""

    def __init__(self, order: Order, W: Channel, shift: np.ndarray):
        self.order = order
        self.W = W
        self.shift = shift
        self.kernel = PowerKernel(order, W.rows, W.log_rows)
        self.evals = 0

    def __call__(self, logp: np.ndarray):
        self.evals += 1
        o = self.order
        if o.exact_one:
            p = np.exp(logp)
            q = p @ self.W.rows
            lq = _log(q)
            r = self.kernel.divergences(lq) - self.shift
            sup = p > 0
            g = float(p[sup] @ r[sup])
            return g, lq, r
        a = o.alpha
        lm = self.kernel.log_power_mean(logp + (1 - a) * self.shift)
        lnorm = float(_lse(lm, np.isfinite(lm)))
        lq = lm - lnorm
        r = self.kernel.divergences(lq) - self.shift
        return a / (a - 1) * lnorm, lq, r

    def step(self, logp: np.ndarray, r: np.ndarray) -> np.ndarray:
        fin = np.isfinite(r)
        rr = np.where(fin, r, (r[fin].max() if fin.any() else 0.0) + 50.0)
        return _normalize_log(logp + self.order.alpha * rr)


def _normalize_log(lp: np.ndarray) -> np.ndarray:
    """Normalize log weights; finite entries are floored 700 below the maximum, ``-inf`` stays."""
    fin = np.isfinite(lp)
    lp = lp - float(_lse(lp, fin))
    return np.where(fin, np.maximum(lp, lp[fin].max() - LOG_FLOOR), -np.inf)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _gradient_fallback(obj: _RGObjective, logp: np.ndarray, iters: int, tol: float):
    """Projected gradient ascent on ``G`` with Armijo backtracking."""
    p = np.exp(logp)
    g, lq, r = obj(logp)
    step = 1.0
    for _ in range(iters):
        a = obj.order.alpha
        fin = np.isfinite(r)
        if obj.order.exact_one:
            grad = np.where(fin, r, 1e3) - 1.0
        else:
            e = np.where(fin, (a - 1) * (r - g), 0.0)
            grad = np.where(fin, np.exp(e) / (a - 1), 1e3)
        while step > 1e-16:
            pn = _project_simplex(p + step * grad)
            with np.errstate(divide="ignore"):
                lpn = np.log(pn)
            gn, lqn, rn = obj(lpn)
            if gn >= g + 1e-4 * float(grad @ (pn - p)):
                break
            step *= 0.5
        else:
            break
        p, g, lq, r = pn, gn, lqn, rn
        step *= 2.0
        if np.max(r) - g <= tol:
            break
    with np.errstate(divide="ignore"):
        return np.log(p)


NEWTON_MAX_ACTIVE = 2000
WARM_MIX = 1e-3
MAX_CHURN = 4


def _gram(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``A diag(w) A^T`` for nonnegative ``w``."""
    B = A * np.sqrt(w)
    # numpy evaluates B @ B.T as a symmetric rank-k update
    return B @ B.T


def _kkt_solve(neg_hess: np.ndarray, grad: np.ndarray) -> np.ndarray | None:
    """Solve ``neg_hess d + nu 1 = grad`` with ``sum d = 0``."""
    from scipy.linalg import LinAlgError as SciLinAlgError, cho_factor, cho_solve

    n = grad.size
    ridge = 1e-14 * max(float(np.trace(neg_hess)) / n, 1e-300)
    try:
        f = cho_factor(neg_hess + ridge * np.eye(n), check_finite=False)
        x = cho_solve(f, grad, check_finite=False)
        y = cho_solve(f, np.ones(n), check_finite=False)
        d = x - (x.sum() / y.sum()) * y
    except (SciLinAlgError, ValueError, ZeroDivisionError):
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = neg_hess
        M[:n, n] = 1.0
        M[n, :n] = 1.0
        d = np.linalg.lstsq(M, np.concatenate([grad, [0.0]]), rcond=None)[0][:n]
    return d if np.all(np.isfinite(d)) else None


def _newton_system(obj: _RGObjective, p: np.ndarray, S: np.ndarray):
    """Gradient and negative Hessian on the inputs ``S`` of a concave surrogate of ``G``.

    For ``alpha != 1`` maximizing ``G`` is maximizing ``sign(alpha-1) * F`` with
    ``F(P) = sum_y (sum_x P_x b_x W_xy^alpha)^{1/alpha}``; at ``alpha = 1`` it is
    ``I^lam`` itself.  Returns ``None`` when the kernel has no dense path.
    """
    k = obj.kernel
    ps = p[S]
    if obj.order.exact_one:
        A = k.rows[S]
        q = ps @ A
        cols = q > 0
        A, q = A[:, cols], q[cols]
        grad = k.wlogw[S] - obj.shift[S] - A @ (np.log(q) + 1.0)
        return grad, _gram(A, 1.0 / q)
    if not k.fast:
        return None
    a = obj.order.alpha
    e = (1 - a) * obj.shift[S]
    A = k.wa[S] * np.exp(e - e.max())[:, None]
    sv = ps @ A
    cols = sv > 0
    A, sv = A[:, cols], sv[cols]
    sgn = 1.0 if a > 1 else -1.0
    scale = sgn / (a * float(np.sum(sv ** (1 / a))))
    grad = scale * (A @ sv ** (1 / a - 1))
    return grad, (scale * (1 - 1 / a)) * _gram(A, sv ** (1 / a - 2))


def _newton_target(grad: np.ndarray, neg_hess: np.ndarray, ps: np.ndarray) -> np.ndarray | None:
    """Equality-constrained Newton point, dropping coordinates it drives nonpositive."""
    keep = np.ones(ps.size, dtype=bool)
    for _ in range(min(ps.size, 8)):
        idx = np.nonzero(keep)[0]
        n = idx.size
        if n == 0:
            return None
        d = _kkt_solve(neg_hess[np.ix_(idx, idx)], grad[idx])
        if d is None:
            return None
        # the removed mass is spread so that the target stays on the simplex
        new = ps[idx] + d + (1.0 - ps[idx].sum()) / n
        bad = new <= 0
        if not bad.any():
            out = np.zeros(ps.size)
            out[idx] = new
            return out / out.sum()
        keep[idx[bad]] = False
    return None


class _Surrogate:
    """Concave surrogate of ``G`` on a fixed active set, for barrier Newton steps.

    ``alpha = 1``: ``I^lam`` itself.  Otherwise ``sign(alpha-1) F / F_0`` with
    ``F(P) = sum_y (sum_x P_x b_x W_xy^alpha)^{1/alpha}``; near ``F_0`` a unit
    change of the surrogate moves ``G`` by about ``alpha/|alpha-1|``.
    """

    def __init__(self, obj: _RGObjective, S: np.ndarray, ps0: np.ndarray):
        k = obj.kernel
        self.one = obj.order.exact_one
        if self.one:
            self.A = k.rows[S]
            self.lin = k.wlogw[S] - obj.shift[S]
            self.g_scale = 1.0
        else:
            a = self.a = obj.order.alpha
            e = (1 - a) * obj.shift[S]
            self.A = k.wa[S] * np.exp(e - e.max())[:, None]
            self.sgn = 1.0 if a > 1 else -1.0
            self.F0 = float(np.sum((ps0 @ self.A) ** (1 / a)))
            self.g_scale = a / abs(a - 1)
        cols = (ps0 @ self.A) > 0
        self.A = self.A[:, cols]

    def value(self, ps: np.ndarray) -> float:
        s = ps @ self.A
        if np.any(s <= 0):
            return -math.inf
        if self.one:
            return float(ps @ self.lin - s @ np.log(s))
        return self.sgn * float(np.sum(s ** (1 / self.a))) / self.F0

    def derivatives(self, ps: np.ndarray):
        s = ps @ self.A
        if self.one:
            return self.lin - self.A @ (np.log(s) + 1.0), _gram(self.A, 1.0 / s)
        a = self.a
        c = self.sgn / (a * self.F0)
        return c * (self.A @ s ** (1 / a - 1)), (c * (1 - 1 / a)) * _gram(self.A, s ** (1 / a - 2))


def _ipm_polish(obj: _RGObjective, logp, g, lq, r, active, tol, max_steps: int = 80):
    """Primal-dual interior-point maximization of ``G`` over the inputs in ``active``.

    Solves ``max phi(P)`` subject to ``sum P = 1, P >= 0`` for the concave
    surrogate ``phi``; robust where the optimum is degenerate or sits on a
    face of the simplex.  The result is kept only if it does not lower ``G``.
    """
    if not (obj.order.exact_one or obj.kernel.fast):
        return logp, g, lq, r, 0
    S = active.copy()
    n = int(S.sum())
    if n < 2 or n > NEWTON_MAX_ACTIVE:
        return logp, g, lq, r, 0
    p = np.exp(logp)
    ps = np.maximum(p[S], 1e-9 * p[S].max())
    ps /= ps.sum()
    sur = _Surrogate(obj, S, ps)
    gap = max(float(np.max(r[active])) - g, tol)
    grad, neg_hess = sur.derivatives(ps)
    nu = -float(grad.max()) - gap / sur.g_scale
    z = -grad - nu
    target = 0.05 * tol / sur.g_scale
    used = 0
    for _ in range(max_steps):
        used += 1
        mu = float(ps @ z) / n
        r_d = -grad - nu - z
        r_p = 1.0 - float(ps.sum())
        if mu <= target / n and np.max(np.abs(r_d)) <= target and abs(r_p) <= 1e-15:
            break
        sigma = 0.1 if mu > 10 * target / n else 0.5
        r_c = sigma * mu - ps * z
        hb = neg_hess + np.diag(z / ps)
        rhs = -r_d + r_c / ps
        from scipy.linalg import LinAlgError as SciLinAlgError, cho_factor, cho_solve

        try:
            f = cho_factor(hb, check_finite=False)
        except (SciLinAlgError, ValueError):
            break
        x = cho_solve(f, rhs, check_finite=False)
        y = cho_solve(f, np.ones(n), check_finite=False)
        dnu = (r_p - x.sum()) / y.sum()
        dp = x + dnu * y
        dz = (r_c - z * dp) / ps
        step = 1.0
        for v, dv in ((ps, dp), (z, dz)):
            neg = dv < 0
            if neg.any():
                step = min(step, 0.99 * float(np.min(-v[neg] / dv[neg])))
        if not np.isfinite(step) or step <= 1e-14:
            break
        ps = ps + step * dp
        z = z + step * dz
        nu = nu + step * dnu
        grad, neg_hess = sur.derivatives(ps)
    pn = np.zeros_like(p)
    pn[S] = np.where(ps < 1e-13 * ps.max(), 0.0, ps)
    with np.errstate(divide="ignore"):
        ln = _normalize_log(np.log(pn))
    gn, lqn, rn = obj(ln)
    if np.isfinite(gn) and gn >= g:
        return ln, gn, lqn, rn, used
    return logp, g, lq, r, used


def _newton_polish(obj: _RGObjective, logp, g, lq, r, active, tol, steps: int = 30):
    """Active-set Newton steps with a monotone line search on ``G``."""
    used = 0
    for _ in range(steps):
        if float(np.max(r[active])) - g <= tol:
            break
        p = np.exp(logp)
        back = active & (p == 0) & (r > g + tol)
        if back.any():
            p[back] = 1e-6 * p.max()
            with np.errstate(divide="ignore"):
                logp = _normalize_log(np.log(p))
            g, lq, r = obj(logp)
            used += 1
            p = np.exp(logp)
        S = active & (p > 0)
        if S.sum() < 2 or S.sum() > NEWTON_MAX_ACTIVE:
            break
        system = _newton_system(obj, p, S)
        if system is None:
            break
        grad, neg_hess = system
        ps = p[S]
        cands = []
        # plain Newton direction truncated at the first zero, and the active-set target
        d = _kkt_solve(neg_hess, grad)
        if d is not None:
            neg = d < 0
            t0 = min(1.0, float(np.min(-ps[neg] / d[neg]))) if neg.any() else 1.0
            cands.append(np.maximum(ps + t0 * d, 0.0))
        target = _newton_target(grad, neg_hess, ps)
        if target is not None:
            cands.append(target)
        best = None
        for cand in cands:
            t = 1.0
            for _ls in range(30):
                pn = np.zeros_like(p)
                pn[S] = (1 - t) * ps + t * cand
                pn[pn < 1e-15 * pn.max()] = 0.0
                with np.errstate(divide="ignore"):
                    ln = _normalize_log(np.log(pn))
                gn, lqn, rn = obj(ln)
                used += 1
                if np.isfinite(gn) and gn >= g:
                    if best is None or gn > best[1]:
                        best = (ln, gn, lqn, rn, t)
                    break
                t *= 0.5
        if best is None:
            break
        ln, gn, lqn, rn, t = best
        progress = gn - g
        logp, g, lq, r = ln, gn, lqn, rn
        if progress <= 1e-16 * max(1.0, abs(g)) and t == 1.0:
            break
    return logp, g, lq, r, used


def _squarem_loop(obj: _RGObjective, logp, g, lq, r, active, tol, budget, accelerate):
    """Accelerated MM iterations on the inputs in ``active``.

    Stops when the radius gap over the active inputs is below ``tol``, the
    gap stalls, or ``budget`` updates are spent.  Returns the new state and
    the number of updates used.
    """
    best_gap = math.inf
    stalled = 0
    it = 0
    while it < budget:
        gap = float(np.max(r[active]) - g)
        if gap <= tol:
            break
        if gap < best_gap * (1 - 1e-6):
            best_gap, stalled = gap, 0
        else:
            stalled += 1
            if stalled >= STALL_ITERS:
                break
        it += 1
        l1 = obj.step(logp, r)
        g1, lq1, r1 = obj(l1)
        if not accelerate:
            logp, g, lq, r = l1, g1, lq1, r1
            continue
        it += 1
        l2 = obj.step(l1, r1)
        g2, lq2, r2 = obj(l2)
        # zero weights stay zero under the MM step and are left out of the extrapolation
        live = active & np.isfinite(logp) & np.isfinite(l2)
        d1 = l1[live] - logp[live]
        v = l2[live] - l1[live] - d1
        nv = float(np.linalg.norm(v))
        if nv > 0 and np.all(np.isfinite(v)):
            s = min(-float(np.linalg.norm(d1)) / nv, -1.0)
            le = np.full_like(logp, -np.inf)
            le[live] = logp[live] - 2 * s * d1 + s * s * v
            le = _normalize_log(le)
            ge, lqe, re = obj(le)
            if np.isfinite(ge) and ge >= g2:
                l3 = obj.step(le, re)
                g3, lq3, r3 = obj(l3)
                if g3 >= ge:
                    logp, g, lq, r = l3, g3, lq3, r3
                else:
                    logp, g, lq, r = le, ge, lqe, re
                continue
        logp, g, lq, r = l2, g2, lq2, r2
    return logp, g, lq, r, it, stalled >= STALL_ITERS


PRUNE_WEIGHT = 1e-4
PRUNE_MARGIN = 1e-7
CHUNK = 100


def _maximize_rg(obj: _RGObjective, logp: np.ndarray, tol: float, max_iter: int, accelerate: bool = True):
    """Maximize ``G`` from ``logp`` with active-set pruning.

    Inputs with small weight and a radius term clearly below the current
    value are removed; the certificate is always checked over all inputs
    and violating inputs are put back.
    Returns ``(logp, G, lq, r, iterations, converged)``.
    """
    g, lq, r = obj(logp)
    active = np.ones(logp.size, dtype=bool)
    it = 0
    ipm_runs = 0
    churn = 0
    while it < max_iter:
        logp, g, lq, r, used, stalled = _squarem_loop(
            obj, logp, g, lq, r, active, 0.5 * tol, min(CHUNK, max_iter - it), accelerate)
        it += used
        if float(np.max(r)) - g <= tol:
            return logp, g, lq, r, it, True
        p = np.exp(logp)
        revive = ~active & (r > g + 0.25 * tol)
        # far below the value relative to the current gap: dropped whatever the weight
        gap_act = float(np.max(r[active])) - g
        prune = active & (r < g - PRUNE_MARGIN) & ((p < PRUNE_WEIGHT * p.max()) | (r < g - 4.0 * gap_act))
        changed = False
        if revive.any():
            active |= revive
            lp = logp.copy()
            lp[revive] = math.log(1e-6)
            logp = _normalize_log(lp)
            changed = True
        elif prune.any() and prune.sum() < active.sum():
            active &= ~prune
            lp = logp.copy()
            lp[prune] = -np.inf
            logp = _normalize_log(lp)
            changed = True
        if changed:
            g, lq, r = obj(logp)
            churn += 1
            # repeated prune and revive rounds mean MM alone is not settling the support
            if churn <= MAX_CHURN:
                continue
            gap_act = float(np.max(r[active])) - g
        if gap_act > 0.5 * tol:
            if ipm_runs < 2:
                # robust on degenerate optima where active-set Newton stalls on a face;
                # pruned inputs are included since the support may still move
                ipm_runs += 1
                S = np.ones_like(active) if active.size <= NEWTON_MAX_ACTIVE else active
                logp, g, lq, r, used = _ipm_polish(obj, logp, g, lq, r, S, 0.5 * tol)
                active |= np.isfinite(logp)
                it += used
                if float(np.max(r)) - g <= tol:
                    return logp, g, lq, r, it, True
            logp, g, lq, r, used = _newton_polish(obj, logp, g, lq, r, active, 0.5 * tol)
            it += used
            if float(np.max(r)) - g <= tol:
                return logp, g, lq, r, it, True
            stalled = stalled and float(np.max(r[active])) - g > 0.5 * tol
        if stalled:
            logp = _gradient_fallback(obj, logp, max_iter - it, tol)
            g, lq, r = obj(logp)
            return logp, g, lq, r, max_iter, bool(np.max(r) - g <= tol)
    return logp, g, lq, r, it, float(np.max(r)) - g <= tol


def rg_capacity(
    alpha,
    W: Channel,
    lam=None,
    c: CostSpec | None = None,
    tol: float = 1e-10,
    max_iter: int = 20000,
    p0=None,
    accelerate: bool = True,
) -> CapacityResult:
    """R-G (equivalently A-L) capacity for the multiplier ``lam``.

    ``tol`` bounds the certified gap ``radius - value``.  ``p0`` warm-starts
    the input distribution.
    """
    order = as_order(alpha)
    shift = _cost_shift(W, lam, c)
    obj = _RGObjective(order, W, shift)
    if p0 is None:
        logp = np.full(W.n_inputs, -math.log(W.n_inputs))
    else:
        with np.errstate(divide="ignore"):
            # a small uniform component lets inputs outside the old support return
            w0 = weights_of(p0)
            w0 = (1 - WARM_MIX) * w0 / w0.sum() + WARM_MIX / w0.size
            logp = _normalize_log(np.log(w0))
    logp, g, lq, r, it, ok = _maximize_rg(obj, logp, tol, max_iter, accelerate)
    p = np.exp(logp)
    p /= p.sum()
    radius = float(np.max(r))
    diag = {
        "iterations": it,
        "evaluations": obj.evals,
        "inner_residual": radius - g,
        "dual_gap_estimate": math.nan,
        "infinite_suspected": bool(g > math.log(W.n_inputs) + float(shift.max()) + 1e-9),
    }
    center = Prob(np.exp(lq), W.outputs, _trusted=True)
    return CapacityResult(
        value=g,
        center=center,
        argmax_input=Prob(p, W.inputs, _trusted=True),
        dual_multiplier=None if lam is None else lam_vector(lam, c.dim),
        converged=ok,
        upper_bound=radius,
        diagnostics=diag,
    )


def al_capacity(alpha, W: Channel, lam=None, c: CostSpec | None = None, tol: float = 1e-10,
                max_iter: int = 20000, cross_check: bool = False, p0=None) -> CapacityResult:
    """A-L capacity, computed by R-G maximization.

    With ``cross_check`` the direct ascent on ``I^lam`` is also run and the
    difference of the two values is stored as ``diagnostics["dual_path_gap"]``.
    """
    res = rg_capacity(alpha, W, lam, c, tol, max_iter, p0=p0)
    if cross_check:
        other = al_capacity_direct(alpha, W, lam, c, tol=tol)
        res.diagnostics["dual_path_gap"] = abs(res.value - other.value)
        res.diagnostics["direct_value"] = other.value
    return res


def augustin_capacity_unconstrained(alpha, W: Channel, tol: float = 1e-10, max_iter: int = 20000) -> CapacityResult:
    """Augustin capacity over all input distributions (the Rényi radius)."""
    return al_capacity(alpha, W, None, None, tol, max_iter)


def al_capacity_direct(alpha, W: Channel, lam=None, c: CostSpec | None = None, tol: float = 1e-7,
                       max_iter: int = 2000, inner_tol: float = 1e-13) -> CapacityResult:
    """A-L capacity by exponentiated-gradient ascent on ``I^lam_alpha(P)``.

    The gradient of ``I^lam`` in ``P(x)`` is ``D_alpha(W(x) || q_{alpha,P}) - lam . c(x)``
    by the envelope theorem; steps are backtracked until the objective
    increases.  Each evaluation solves for the Augustin mean, warm-started
    from the previous one.  By concavity the radius gap ``max_x grad_x - I^lam``
    bounds the value error; it is first order in the error of ``P`` while the
    value error is second order, hence the looser default ``tol``.
    """
    order = as_order(alpha)
    shift = _cost_shift(W, lam, c)
    kernel = PowerKernel(order, W.rows, W.log_rows)
    n = W.n_inputs

    def evaluate(p, q0):
        sup = p > 0
        sub = PowerKernel(order, W.rows[sup], W.log_rows[sup])
        q, info, _, res, ok, _, _ = fixed_point(order, p[sup], W.rows[sup], W.log_rows[sup],
                                                inner_tol, 100000, q0, sub)
        d = kernel.divergences(_log(q))
        return info - float(p @ shift), d - shift, q

    p = np.full(n, 1.0 / n)
    val, grad, q = evaluate(p, None)
    eta = max(order.alpha, 1.0)
    it = 0
    ok = False
    for it in range(1, max_iter + 1):
        fin = np.isfinite(grad)
        gg = np.where(fin, grad, np.max(grad[fin]) + 50.0)
        if float(np.max(grad)) - val <= tol:
            ok = True
            break
        # exponentiated steps shrink inactive inputs only geometrically
        drop = (p > 0) & (p < 1e-6 * p.max()) & (grad < val - tol)
        if np.any(drop) and not np.all(drop | (p == 0)):
            p = np.where(drop, 0.0, p)
            p /= p.sum()
            val, grad, q = evaluate(p, q)
            continue
        revive = (p == 0) & (grad > val + tol)
        if np.any(revive):
            p = np.where(revive, 1e-3 * p.max(), p)
            p /= p.sum()
            val, grad, q = evaluate(p, q)
            fin = np.isfinite(grad)
            gg = np.where(fin, grad, np.max(grad[fin]) + 50.0)
        while True:
            with np.errstate(divide="ignore"):
                lp = np.log(p) + eta * (gg - gg.max())
            pn = np.exp(lp - lp.max())
            pn /= pn.sum()
            pn[pn < 1e-300] = 0.0
            pn /= pn.sum()
            vn, gn, qn = evaluate(pn, q)
            if vn >= val - 1e-15 or eta < 1e-8:
                break
            eta *= 0.5
        if vn < val - 1e-15:
            break
        p, val, grad, q = pn, vn, gn, qn
        eta *= 1.5
    radius = float(np.max(grad))
    return CapacityResult(
        value=val,
        center=Prob(q, W.outputs, _trusted=True),
        argmax_input=Prob(p, W.inputs, _trusted=True),
        dual_multiplier=None if lam is None else lam_vector(lam, c.dim),
        converged=ok,
        upper_bound=radius,
        diagnostics={"iterations": it, "inner_residual": radius - val, "dual_gap_estimate": math.nan},
    )


# ---------------------------------------------------------------------------
# cost-constrained capacity via the dual


@dataclass
class _DualPoint:
    lam: np.ndarray
    value: float  # attained R-G value (lower estimate of C^lam)
    upper: float  # certified upper bound on C^lam
    cost: np.ndarray  # E_P[c] at the inner argmax
    info: float  # Augustin information of the inner argmax
    result: object

    @property
    def converged(self) -> bool:
        if isinstance(self.result, list):
            return all(p.converged for p in self.result)
        return bool(self.result.converged)


def _augustin_info_of(order: Order, W: Channel, p: np.ndarray, tol: float = 1e-12) -> float:
    sup = p > 1e-15
    ps = p[sup] / p[sup].sum()
    _, info, _, _, _, _, _ = fixed_point(order, ps, W.rows[sup], W.log_rows[sup], tol, 20000)
    return info


class _ChannelOracle:
    """Evaluates ``C^lam`` for one channel with warm starts across multipliers.

    Evaluations are cached so several constraint levels can share them.
    """

    def __init__(self, order: Order, W: Channel, c: CostSpec, tol: float, max_iter: int):
        self.order, self.W, self.c, self.tol, self.max_iter = order, W, c, tol, max_iter
        self.p = None
        self.iterations = 0
        self.cache: dict[tuple, _DualPoint] = {}

    def __call__(self, lam: np.ndarray) -> _DualPoint:
        key = tuple(np.asarray(lam, dtype=float).tolist())
        if key in self.cache:
            return self.cache[key]
        res = rg_capacity(self.order, self.W, lam, self.c, self.tol, self.max_iter, p0=self.p)
        self.p = res.argmax_input.weights
        self.iterations += res.diagnostics["iterations"]
        p = res.argmax_input.weights
        info = _augustin_info_of(self.order, self.W, p)
        pt = _DualPoint(np.array(key), res.value, res.upper_bound, self.c.expected(p), info, res)
        self.cache[key] = pt
        return pt


def _minimize_1d(oracle: Callable[[np.ndarray], _DualPoint], rho: float, lo_pt: _DualPoint,
                 lam_max: float, tol: float, max_steps: int, base: np.ndarray, axis: int):
    """Minimize the convex ``lam -> C^lam + lam rho`` along one coordinate.

    Maintains a bracket whose left end has ``E[c] > rho`` and right end
    ``E[c] <= rho``; new points are the intersection of the two supporting
    lines when that lands well inside, otherwise the midpoint.
    """

    def at(t):
        lam = base.copy()
        lam[axis] = t
        return oracle(lam)

    def h(pt):
        return pt.value + float(pt.lam @ rho_vec)

    rho_vec = np.zeros(base.size)
    rho_vec[axis] = rho
    pts = [lo_pt]
    a = lo_pt
    if a.cost[axis] <= rho:
        return a, a, pts
    hi = max(lam_max, 1e-12)
    known = list(getattr(oracle, "cache", {}).values()) if base.size == 1 else []
    above = [p for p in known if p.cost[axis] > rho and p.lam[axis] > a.lam[axis]]
    below = [p for p in known if p.cost[axis] <= rho]
    if above:
        a = max(above, key=lambda p: p.lam[axis])
        pts.append(a)
    below = [p for p in below if p.lam[axis] > a.lam[axis]]
    if below:
        # bracket seeded from evaluations made for other constraint levels
        b = min(below, key=lambda p: p.lam[axis])
        hi = b.lam[axis]
    else:
        b = at(hi)
    pts.append(b)
    grow = 0
    while b.cost[axis] > rho and grow < 60:
        a, hi = b, hi * 2
        b = at(hi)
        pts.append(b)
        grow += 1
    last_mid = False
    for _ in range(max_steps):
        ta, tb = a.lam[axis], b.lam[axis]
        if tb - ta <= 1e-13 * max(1.0, tb):
            break
        # supporting lines t -> info - t (E c - rho) from the two end solutions
        sa, sb = rho - a.cost[axis], rho - b.cost[axis]
        la = a.info - float(np.delete(a.lam, axis) @ np.delete(a.cost, axis)) if base.size > 1 else a.info
        lb = b.info - float(np.delete(b.lam, axis) @ np.delete(b.cost, axis)) if base.size > 1 else b.info
        t = None
        if not last_mid and sb - sa > 0:
            tx = (la - lb) / (sb - sa)
            if ta + 0.01 * (tb - ta) < tx < tb - 0.01 * (tb - ta):
                t = tx
        if t is None:
            t = 0.5 * (ta + tb)
            last_mid = True
        else:
            last_mid = False
        m = at(t)
        pts.append(m)
        if m.cost[axis] > rho:
            a = m
        else:
            b = m
        if base.size == 1:
            lower = _best_mixture(pts, rho, axis)[0]
            upper = min(p.upper + float(p.lam @ rho_vec) for p in pts)
            if upper - lower <= tol:
                break
    return a, b, pts


def _best_mixture(pts: Sequence[_DualPoint], rho: float, axis: int):
    """Best Augustin information lower bound at a feasible mixture of two evaluated inputs.

    Augustin information is concave in the input distribution, so mixing an
    input above the budget with one below it at the rate that meets the
    budget keeps at least the interpolated information.  Returns
    ``(bound, high, low, weight_of_high)``.
    """
    best = (-math.inf, None, None, 0.0)
    low = [p for p in pts if p.cost[axis] <= rho]
    high = [p for p in pts if p.cost[axis] > rho]
    for b in low:
        if b.info > best[0]:
            best = (b.info, b, b, 0.0)
        for a in high:
            th = (rho - b.cost[axis]) / (a.cost[axis] - b.cost[axis])
            v = th * a.info + (1 - th) * b.info
            if v > best[0]:
                best = (v, a, b, th)
    return best


def _dual_search(oracle, c_dim: int, rho: np.ndarray, c_min: np.ndarray, c0: float,
                 tol: float, max_steps: int, sweeps: int = 30):
    lam = np.zeros(c_dim)
    pt0 = oracle(lam)
    pts = [pt0]
    if np.all(pt0.cost <= rho + 1e-12):
        return pt0, pt0, pts, lam
    best = pt0
    for sweep in range(sweeps if c_dim > 1 else 1):
        moved = 0.0
        for k in range(c_dim):
            span = max(rho[k] - c_min[k], 1e-300)
            lam_max = (c0 + 1.0) / span
            start = oracle(lam) if sweep or k else pt0
            a, b, new = _minimize_1d(oracle, rho[k], start, lam_max, tol, max_steps, lam.copy(), k)
            pts.extend(new)
            cand = min((a, b), key=lambda p: p.value + float(p.lam @ rho))
            moved = max(moved, abs(cand.lam[k] - lam[k]))
            lam = cand.lam.copy()
            best = cand
        if c_dim == 1 or moved < 1e-10:
            break
    if c_dim == 1:
        return a, b, pts, best.lam
    return best, best, pts, best.lam


def cost_constrained_capacity(alpha, W: Channel, c: CostSpec, rho, tol: float = 1e-9,
                              inner_tol: float = 1e-11, max_iter: int = 20000,
                              max_steps: int = 80) -> CapacityResult:
    """``C_{alpha,W}(rho) = inf_lam C^lam + lam . rho`` for ``rho`` interior to the feasible set.

    ``diagnostics["dual_gap_estimate"]`` is the dual value minus the best
    primal lower bound found (a feasible mixture of inner solutions); with a
    scalar cost ``converged`` requires it to be at most ``tol``.
    """
    return cost_constrained_capacities(alpha, W, c, [rho], tol, inner_tol, max_iter, max_steps)[0]


def cost_constrained_capacities(alpha, W: Channel, c: CostSpec, rhos: Sequence, tol: float = 1e-9,
                                inner_tol: float = 1e-11, max_iter: int = 20000,
                                max_steps: int = 80) -> list[CapacityResult]:
    """:func:`cost_constrained_capacity` at several constraints, sharing inner solutions."""
    order = as_order(alpha)
    c.check(W)
    if c.dim > MAX_COST_DIM:
        raise ValidationError(f"at most {MAX_COST_DIM} cost dimensions are supported")
    levels = [np.atleast_1d(np.asarray(r, dtype=float)) for r in rhos]
    for rho in levels:
        slack = c.slack(rho)
        if slack < -1e-12:
            raise InfeasibleConstraintError(f"no input distribution meets the cost constraint {rho.tolist()}")
        if slack <= 1e-12:
            raise BoundaryConstraintError(
                f"cost constraint {rho.tolist()} is on the boundary of the feasible set, where "
                "Lagrange duality may fail"
            )
    oracle = _ChannelOracle(order, W, c, inner_tol, max_iter)
    return [_finish_dual(oracle, c.dim, rho, c.costs.min(axis=0), math.log(W.n_inputs), tol, max_steps,
                         lambda pt: pt.result.center, lambda p: solve_augustin_mean(order, p, W).mean)
            for rho in levels]


def _finish_dual(oracle, dim, rho, c_min, c0_guess, tol, max_steps, center_of, mean_of=None) -> CapacityResult:
    a, b, pts, lam = _dual_search(oracle, dim, rho, c_min, c0_guess, tol, max_steps)
    dual = min(pts, key=lambda p: p.value + float(p.lam @ rho))
    value = dual.value + float(dual.lam @ rho)
    upper = min(p.upper + float(p.lam @ rho) for p in pts)
    arg = _argmax_of(a) if a is b else None
    if dim == 1:
        lower, ma, mb, th = _best_mixture(pts, float(rho[0]), 0)
        if ma is not None:
            arg = _argmax_of(mb) if ma is mb else _mix_inputs(ma, mb, th)
    else:
        feas = [p.info for p in pts if np.all(p.cost <= rho + 1e-12)]
        lower = max(feas) if feas else -math.inf
    center = center_of(dual)
    if mean_of is not None and dim == 1 and isinstance(arg, Prob) and a is not b:
        # the dual is flat near its minimizer, so the inner center there is only
        # sqrt(tol) accurate; the mean of the feasible mixture is much closer
        center = mean_of(arg)
    return CapacityResult(
        value=value,
        center=center,
        argmax_input=arg,
        dual_multiplier=dual.lam,
        converged=all(p.converged for p in pts) and (dim > 1 or value - lower <= tol),
        upper_bound=upper,
        diagnostics={
            "iterations": getattr(oracle, "iterations", 0),
            "dual_evaluations": len(pts),
            "inner_residual": dual.upper - dual.value,
            "dual_gap_estimate": value - lower,
            "primal_lower_bound": lower,
        },
    )


def _argmax_of(pt: _DualPoint):
    # sums over product parts carry a list of results and no single input
    return None if isinstance(pt.result, list) else pt.result.argmax_input


def _mix_inputs(a: _DualPoint, b: _DualPoint, th: float):
    pa, pb = _argmax_of(a), _argmax_of(b)
    if isinstance(pa, Prob) and isinstance(pb, Prob):
        return Prob(th * pa.weights + (1 - th) * pb.weights, pa.labels, _trusted=True)
    return None


# ---------------------------------------------------------------------------
# products and allocations


def product_al_capacity_check(alpha, parts: Sequence[tuple[Channel, CostSpec]], lam,
                              max_size: int = 4096, tol: float = 1e-11) -> float:
    """Discrepancy of A-L capacity additivity on an explicit product channel.

    Returns the larger of ``|C^lam(W_[1,n]) - sum_t C^lam(W_t)|`` and the
    gap between the radius of the product channel at ``prod_t q^lam_t``
    and the summed capacity.
    """
    order = as_order(alpha)
    chans = [p[0] for p in parts]
    n_in = math.prod(ch.n_inputs for ch in chans)
    n_out = math.prod(ch.n_outputs for ch in chans)
    if n_in > max_size or n_out > max_size:
        raise ValidationError(f"product channel {n_in}x{n_out} exceeds the size limit {max_size}")
    sols = [rg_capacity(order, ch, lam, cs, tol) for ch, cs in parts]
    total = sum(s.value for s in sols)
    Wp = product_channel(chans)
    cp = additive_cost([p[1] for p in parts])
    prod = rg_capacity(order, Wp, lam, cp, tol)
    center = np.ones(1)
    for s in sols:
        center = np.multiply.outer(center, s.center.weights).ravel()
    shift = _cost_shift(Wp, lam, cp)
    k = PowerKernel(order, Wp.rows, Wp.log_rows)
    radius = float(np.max(k.divergences(_log(center)) - shift))
    return max(abs(prod.value - total), abs(radius - total))


class _SumOracle:
    """``sum_t C^lam(W_t)`` with the summed expected cost of the per-part argmaxes."""

    def __init__(self, oracles: list[_ChannelOracle]):
        self.oracles = oracles

    @property
    def iterations(self):
        return sum(o.iterations for o in self.oracles)

    def __call__(self, lam):
        pts = [o(lam) for o in self.oracles]
        pt = _DualPoint(
            lam,
            sum(p.value for p in pts),
            sum(p.upper for p in pts),
            sum(p.cost for p in pts),
            sum(p.info for p in pts),
            pts,
        )
        return pt


@dataclass(frozen=True)
class AllocationResult:
    value: float
    dual_multiplier: np.ndarray
    centers: list
    allocation: np.ndarray
    upper_bound: float
    diagnostics: dict


def cost_allocation_capacity(alpha, parts: Sequence[tuple[Channel, CostSpec]], rho, tol: float = 1e-9,
                             inner_tol: float = 1e-11, max_iter: int = 20000) -> AllocationResult:
    """Cost-constrained capacity of a product channel with additive cost, by the dual route.

    ``C(rho) = inf_lam sum_t C^lam(W_t) + lam . rho``.  ``allocation`` lists the
    expected per-part costs of the inner solutions at the optimal multiplier.
    """
    order = as_order(alpha)
    dims = {cs.dim for _, cs in parts}
    if len(dims) != 1:
        raise ValidationError("parts must share a cost dimension")
    dim = dims.pop()
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    c_min = sum(cs.costs.min(axis=0) for _, cs in parts)
    if dim == 1:
        slack = float(rho[0] - c_min[0])
    else:
        # the summed feasible set is the Minkowski sum; test it on the product cost
        slack = additive_cost([cs for _, cs in parts]).slack(rho)
    if slack < -1e-12:
        raise InfeasibleConstraintError("no allocation meets the cost constraint")
    if slack <= 1e-12:
        raise BoundaryConstraintError("cost constraint on the boundary of the summed feasible set")
    sub = [_ChannelOracle(order, ch, cs, inner_tol, max_iter) for ch, cs in parts]
    oracle = _SumOracle(sub)
    c0 = sum(math.log(ch.n_inputs) for ch, _ in parts)
    res = _finish_dual(oracle, dim, rho, c_min, c0, tol, 80, lambda pt: [p.result.center for p in pt.result])
    lam = res.dual_multiplier
    final = oracle(lam)
    return AllocationResult(
        value=res.value,
        dual_multiplier=lam,
        centers=res.center,
        allocation=np.array([p.cost for p in final.result]),
        upper_bound=res.upper_bound,
        diagnostics=res.diagnostics,
    )


# ---------------------------------------------------------------------------
# bounds, oracles and sweeps


def ehb_gap(alpha, W: Channel, Q, value: float, center, lam=None, c: CostSpec | None = None,
            rho=None, full_order: bool | None = None) -> float:
    """Slack in the van Erven-Harremoës type bound.

    Returns ``sup_P [D_alpha(W||Q|P) - lam . E_P c] - value - D(center || Q)``
    where the sup runs over all ``P`` (multiplier form) or over
    ``E_P c <= rho`` (constraint form).  The last divergence has order
    ``alpha`` in the multiplier form and ``min(alpha, 1)`` otherwise, unless
    ``full_order`` says otherwise.  Nonnegative when the bound holds.
    """
    order = as_order(alpha)
    q = weights_of(Q)
    k = PowerKernel(order, W.rows, W.log_rows)
    d = k.divergences(_log(q))
    if rho is None:
        left = float(np.max(d - _cost_shift(W, lam, c)))
        use_full = True if full_order is None else full_order
    else:
        if c is None:
            raise ValidationError("a cost constraint needs a cost specification")
        use_full = False if full_order is None else full_order
        if not np.all(np.isfinite(d)):
            feasible = c.costs <= np.atleast_1d(rho) + 1e-12
            fin_ok = np.isfinite(d)
            if np.any(~fin_ok & np.all(feasible, axis=1)):
                return math.inf
            # an infinite row can still enter a feasible mixture with positive weight
            left = math.inf
        else:
            left = _lp_sup(d, c, np.atleast_1d(rho))
    if math.isinf(left):
        return math.inf
    o2 = order if use_full else Order(order.min1)
    return left - value - float(renyi_divergence(o2, center, q))


def _lp_sup(d: np.ndarray, c: CostSpec, rho: np.ndarray) -> float:
    from scipy.optimize import linprog

    n = d.size
    res = linprog(-d, A_ub=c.costs.T, b_ub=rho, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        raise InfeasibleConstraintError(res.message)
    return float(-res.fun)


def _simplex_grid(n: int, step: float) -> np.ndarray:
    m = int(round(1 / step))
    if n == 1:
        return np.ones((1, 1))
    pts = [c for c in itertools.product(range(m + 1), repeat=n - 1) if sum(c) <= m]
    a = np.array(pts, dtype=float)
    return np.hstack([a, (m - a.sum(axis=1, keepdims=True))]) / m


def batched_augustin_info(order: Order, W: Channel, Ps: np.ndarray, tol: float = 1e-11,
                          max_iter: int = 5000) -> np.ndarray:
    """Augustin information for many input distributions at once (rows of ``Ps``)."""
    if order.exact_one:
        q = Ps @ W.rows
        lq = _log(q)
        with np.errstate(invalid="ignore"):
            t = np.where(W.rows > 0, W.rows * W.log_rows, 0.0).sum(axis=1)
            cross = np.einsum("gx,xy,gy->gx", Ps, W.rows, np.where(np.isfinite(lq), lq, 0.0))
        return (Ps * t).sum(axis=1) - cross.sum(axis=1)
    a = order.alpha
    lw = W.log_rows
    with np.errstate(divide="ignore"):
        lp = np.log(Ps)
    t = lp[:, :, None] + a * lw[None]
    lm = _lse(np.swapaxes(t, 1, 2), np.isfinite(np.swapaxes(t, 1, 2))) / a
    lq = lm - _lse(lm, np.isfinite(lm))[:, None]
    eta = min(1.0, 2.0 / (1.0 + a))
    mask = (W.rows > 0)[None]
    for _ in range(max_iter):
        s = a * np.where(mask, lw[None], 0.0) + (1 - a) * np.where(np.isfinite(lq), lq, -np.inf)[:, None, :]
        s = np.where(mask, s, -np.inf)
        lz = _lse(s, np.isfinite(s))
        tilt = np.exp(s - lz[..., None])
        nq = np.einsum("gx,gxy->gy", Ps, np.where(np.isfinite(tilt), tilt, 0.0))
        nq /= nq.sum(axis=1, keepdims=True)
        q = np.exp(lq)
        res = np.abs(nq - q).sum(axis=1)
        if np.all(res <= tol):
            break
        with np.errstate(invalid="ignore"):
            lq = np.where(nq > 0, (1 - eta) * lq + eta * _log(nq), -np.inf)
        lq = lq - _lse(lq, np.isfinite(lq))[:, None]
    s = a * np.where(mask, lw[None], 0.0) + (1 - a) * np.where(np.isfinite(lq), lq, -np.inf)[:, None, :]
    s = np.where(mask, s, -np.inf)
    lz = _lse(s, np.isfinite(s))
    d = lz / (a - 1)
    with np.errstate(invalid="ignore"):
        return np.where(Ps > 0, Ps * d, 0.0).sum(axis=1)


def brute_force_capacity(alpha, W: Channel, lam=None, c: CostSpec | None = None, grid_step: float = 1e-2) -> float:
    """Grid search over the input simplex refined by Nelder-Mead (test oracle, ``|X| <= 3``)."""
    from scipy.optimize import minimize

    order = as_order(alpha)
    n = W.n_inputs
    if n > 3:
        raise ValidationError("brute force capacity is limited to three inputs")
    if grid_step > 1e-2:
        raise ValidationError("grid step must be at most 1e-2")
    shift = _cost_shift(W, lam, c)
    grid = _simplex_grid(n, grid_step)
    vals = batched_augustin_info(order, W, grid) - grid @ shift
    if n == 1:
        return float(vals[0])
    best = int(np.argmax(vals))

    def f(z):
        p = z * z
        s = p.sum()
        if s <= 0:
            return 1e9
        p = p / s
        sol = solve_augustin_mean(order, p, W, 1e-13, 100000)
        return -(sol.info - float(p @ shift))

    top = np.argsort(vals)[::-1][:3]
    out = float(vals[best])
    for i in top:
        z0 = np.sqrt(grid[i])
        z0 = np.where(z0 == 0, 1e-3, z0)
        r = minimize(f, z0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        out = max(out, -float(r.fun))
    return out


@dataclass(frozen=True)
class CurveRow:
    parameter: float
    value: float
    lambda_star: float
    center_tv_to_previous: float
    converged: bool


def capacity_order_curve(W: Channel, orders: Sequence[float], lam=None, c: CostSpec | None = None,
                         tol: float = 1e-10) -> list[CurveRow]:
    """A-L capacity over a grid of orders, sorted by order."""
    rows, prev = [], None
    for a in sorted(orders):
        r = al_capacity(a, W, lam, c, tol)
        tv = math.nan if prev is None else total_variation(r.center, prev)
        lam_val = math.nan if lam is None else float(np.atleast_1d(lam)[0])
        rows.append(CurveRow(float(a), r.value, lam_val, tv, r.converged))
        prev = r.center
    return rows


def capacity_lambda_curve(alpha, W: Channel, c: CostSpec, lams: Sequence[float], tol: float = 1e-10) -> list[CurveRow]:
    """A-L capacity over a grid of scalar multipliers, sorted, warm-started."""
    rows, prev, p0 = [], None, None
    for l in sorted(lams):
        r = rg_capacity(alpha, W, l, c, tol, p0=p0)
        p0 = r.argmax_input
        tv = math.nan if prev is None else total_variation(r.center, prev)
        rows.append(CurveRow(float(l), r.value, float(l), tv, r.converged))
        prev = r.center
    return rows


def capacity_cost_curve(alpha, W: Channel, c: CostSpec, rhos: Sequence[float], tol: float = 1e-9,
                        inner_tol: float = 1e-11) -> list[CurveRow]:
    """Cost-constrained capacity over a grid of scalar constraints, sorted."""
    rows, prev = [], None
    levels = sorted(float(r) for r in rhos)
    for r, res in zip(levels, cost_constrained_capacities(alpha, W, c, levels, tol, inner_tol)):
        tv = math.nan if prev is None or res.center is None else total_variation(res.center, prev)
        rows.append(CurveRow(r, res.value, float(res.dual_multiplier[0]), tv, res.converged))
        prev = res.center
    return rows
