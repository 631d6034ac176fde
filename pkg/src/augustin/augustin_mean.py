"""Augustin means and the information measures built on them.

The Augustin mean ``q_{alpha,P}`` minimizes ``D_alpha(W || q | P)`` over
output distributions ``q`` and is the unique fixed point of the Augustin
operator ``A(q) = sum_x P(x) W_alpha^q(x)``.  It is found by iterating the
operator from the Rényi mean.  For ``alpha > 1`` the iteration is not known
to converge, so a stalled residual switches to averaged updates and the
answer is certified by the fixed-point residual either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import (
    Channel,
    CostSpec,
    Measure,
    Order,
    Prob,
    ValidationError,
    as_order,
    lam_vector,
    weights_of,
)
from .renyi_divergence import (
    InfiniteDivergenceError,
    _log,
    _lse,
    PowerKernel,
    divergence_derivative_in_order,
    divergence_kernel,
    tilted_kernel,
)

DROP_BELOW = 1e-15
STALL_WINDOW = 50
LOG_FLOOR = 700.0


class ConvergenceError(RuntimeError):
    """Raised when a solver result is needed but the solver did not converge."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class AugustinSolution:
    """Output of :func:`solve_augustin_mean`.

    ``residual`` is the total variation between the returned mean and its
    image under the Augustin operator, i.e. the successive-iterate distance
    at the final step.
    """

    mean: Prob
    info: float
    iterations: int
    residual: float
    converged: bool
    damped: bool = False
    diagnostics: tuple = field(default=())


@dataclass(frozen=True)
class TransformPair:
    source: Prob
    transformed: Prob
    value_identity_residual: float


def _check_p(P, W: Channel) -> np.ndarray:
    p = weights_of(P)
    if p.shape != (W.n_inputs,):
        raise ValidationError("input distribution does not match the channel inputs")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValidationError("input distribution must be a probability vector")
    return p


def _cost_shift(W: Channel, lam, c: CostSpec | None) -> np.ndarray:
    """Vector ``lam . c(x)`` over inputs, zero when no multiplier is given."""
    if lam is None:
        return np.zeros(W.n_inputs)
    if c is None:
        raise ValidationError("a multiplier needs a cost specification")
    c.check(W)
    return c.costs @ lam_vector(lam, c.dim)


def order_one_mean(P, W: Channel) -> Prob:
    """Output distribution ``sum_x P(x) W(x)``."""
    p = _check_p(P, W)
    return Prob(p @ W.rows, W.outputs, _trusted=True)


def log_power_mean(order: Order, p: np.ndarray, logrows: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """``ln mu_y`` for ``mu_y = [sum_x p_x e^{(1-a) shift_x} W_xy^a]^{1/a}``."""
    a = order.alpha
    sup = p > 0
    lp = np.log(p[sup]) + (1 - a) * shift[sup]
    t = lp[:, None] + a * logrows[sup]
    mask = np.isfinite(t)
    return _lse(t.T, mask.T) / a


def power_mean_measure(alpha, P, W: Channel, lam=None, c: CostSpec | None = None) -> Measure:
    """Mean measure ``mu_{alpha,P}`` (``mu^lam_{alpha,P}`` when a multiplier is given)."""
    order = as_order(alpha)
    p = _check_p(P, W)
    lm = log_power_mean(order, p, W.log_rows, _cost_shift(W, lam, c))
    return Measure(np.exp(lm), W.outputs)


def renyi_mean(alpha, P, W: Channel, lam=None, c: CostSpec | None = None) -> Prob:
    """Normalized mean measure (the Rényi or Rényi-Gallager mean)."""
    order = as_order(alpha)
    p = _check_p(P, W)
    lm = log_power_mean(order, p, W.log_rows, _cost_shift(W, lam, c))
    return Prob(np.exp(lm - lm.max()), W.outputs, _trusted=True)


def _operator(order: Order, p: np.ndarray, rows: np.ndarray, logrows: np.ndarray, q: np.ndarray):
    t, d = tilted_kernel(order, rows, logrows, _log(q))
    if not np.all(np.isfinite(d)):
        return None, d
    out = p @ t
    return out / out.sum(), d


def augustin_operator(alpha, P, W: Channel, q) -> Prob:
    """``A_{alpha,P}(q) = sum_x P(x) W_alpha^q(x)``."""
    order = as_order(alpha)
    p = _check_p(P, W)
    qq = weights_of(q)
    if qq.shape != (W.n_outputs,):
        raise ValidationError("q must live on the channel's output set")
    sup = p > 0
    out, _ = _operator(order, p[sup], W.rows[sup], W.log_rows[sup], qq)
    if out is None:
        raise InfiniteDivergenceError("q is outside the operator's domain: a supported row diverges")
    return Prob(out, W.outputs, _trusted=True)


class _MeanIteration:
    """State of the Augustin operator iteration on a fixed output support."""

    def __init__(self, order: Order, p: np.ndarray, kernel: PowerKernel, support: np.ndarray):
        self.order, self.p, self.k, self.support = order, p, kernel, support
        # the unit step oscillates for large orders; relax it geometrically
        self.eta = min(1.0, 2.0 / (1.0 + order.alpha))
        self.best = (math.inf, None, None, None)  # residual, q, objective, row terms

    def apply(self, lq: np.ndarray):
        """One relaxed operator step ``q^(1-eta) A(q)^eta`` from ``exp(lq)``.

        Records ``TV(A(q), q)`` for the input, which is what the returned
        certificate refers to.
        """
        lz = self.k.log_z(lq)
        if not np.all(np.isfinite(lz)):
            return None, math.inf, math.inf
        nq = self.k.tilt_mix(self.p, lq, lz)
        nq /= nq.sum()
        q = np.exp(lq)
        res = float(np.abs(nq - q).sum())
        obj = float(self.p @ lz) / (self.order.alpha - 1)
        if res < self.best[0]:
            self.best = (res, q, obj, lz)
        ln = _log(nq)
        if self.eta != 1.0:
            ln = np.where(self.support, (1 - self.eta) * lq + self.eta * ln, -np.inf)
            ln = ln - float(_lse(ln, self.support))
        return self.floor(ln), res, obj

    def floor(self, lq: np.ndarray) -> np.ndarray:
        return np.where(self.support, np.maximum(lq, -LOG_FLOOR), -np.inf)


def fixed_point(
    order: Order,
    p: np.ndarray,
    rows: np.ndarray,
    logrows: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10000,
    q0: np.ndarray | None = None,
    kernel: PowerKernel | None = None,
    accelerate: bool = True,
):
    """Array-level Augustin mean solver.

    ``p`` must be strictly positive on the given rows.  Iterates the
    Augustin operator from the Rényi mean (or ``q0``).  With ``accelerate``
    a SQUAREM extrapolation is tried after every two operator steps and
    kept only if it lowers ``D_alpha(W || q | P)``.  The returned mean
    always satisfies ``TV(A(q), q) = residual``.
    Returns ``(q, info, iterations, residual, converged, damped, row_divergences)``.
    """
    k = kernel if kernel is not None else PowerKernel(order, rows, logrows)
    if order.exact_one:
        q = p @ rows
        d = k.divergences(_log(q))
        return q, float(p @ d), 0, 0.0, True, False, d
    a = order.alpha
    support = (p @ rows) > 0
    if q0 is None:
        lq = k.log_power_mean(np.log(p))
    else:
        lq = _log(np.asarray(q0, dtype=float))
    lq = np.where(support, lq, -np.inf)
    if not np.all(np.isfinite(lq[support])):
        lq = _log(p @ rows)
    lq = lq - float(_lse(lq, support))
    st = _MeanIteration(order, p, k, support)
    damped = False
    best_res = math.inf
    since_best = 0
    it = 0

    def done():
        res, q, obj, lz = st.best
        return q, obj, it, res, res <= tol, damped, lz / (a - 1)

    while it < max_iter:
        l1, r0, f0 = st.apply(lq)
        it += 1
        if l1 is None:
            lq = _log(p @ rows)
            continue
        if r0 <= tol:
            return done()
        if r0 < best_res * (1 - 1e-3):
            best_res, since_best = r0, 0
        else:
            since_best += 1
        if not damped and a > 1 and since_best >= STALL_WINDOW:
            damped = True
        if damped:
            q = 0.5 * (np.exp(lq) + np.exp(l1))
            lq = _log(q / q.sum())
            continue
        if not accelerate:
            lq = l1
            continue
        l2, r1, f1 = st.apply(l1)
        it += 1
        if l2 is None:
            lq = l1
            continue
        if r1 <= tol:
            return done()
        d1 = l1[support] - lq[support]
        v = l2[support] - l1[support] - d1
        nv = float(np.linalg.norm(v))
        start = lq
        lq = l2
        if nv > 0:
            step = min(-float(np.linalg.norm(d1)) / nv, -1.0)
            le = np.full(lq.size, -np.inf)
            le[support] = start[support] - 2 * step * d1 + step * step * v
            le = st.floor(le - float(_lse(le, support)))
            lz_e = k.log_z(le)
            if np.all(np.isfinite(lz_e)):
                fe = float(p @ lz_e) / (a - 1)
                f2 = float(p @ k.log_z(l2)) / (a - 1)
                if fe <= f2:
                    lq = le
    return done()


def solve_augustin_mean(alpha, P, W: Channel, tol: float = 1e-12, max_iter: int = 10000, q0=None) -> AugustinSolution:
    """Augustin mean and information of ``P`` on ``W``.

    Input weights below ``1e-15`` are dropped before iterating.  On
    non-convergence the last iterate is returned with ``converged=False``.
    """
    order = as_order(alpha)
    p = _check_p(P, W).copy()
    p[p < DROP_BELOW] = 0.0
    p /= p.sum()
    sup = p > 0
    q, info, it, res, ok, damped, _ = fixed_point(
        order, p[sup], W.rows[sup], W.log_rows[sup], tol, max_iter,
        None if q0 is None else weights_of(q0),
    )
    return AugustinSolution(Prob(q, W.outputs, _trusted=True), info, it, res, ok, damped)


def _solved(alpha, P, W, tol=1e-12, max_iter=10000) -> AugustinSolution:
    sol = solve_augustin_mean(alpha, P, W, tol, max_iter)
    if not sol.converged:
        raise ConvergenceError(
            f"Augustin mean did not converge in {max_iter} iterations (residual {sol.residual:.3g})", sol
        )
    return sol


def augustin_information(alpha, P, W: Channel, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """``I_alpha(P; W) = min_q D_alpha(W || q | P)``."""
    return _solved(alpha, P, W, tol, max_iter).info


def renyi_information(alpha, P, W: Channel) -> float:
    """Rényi (Sibson) information ``alpha/(alpha-1) ln ||mu_{alpha,P}||``."""
    return rg_information(alpha, P, W, None, None)


def al_information(alpha, P, W: Channel, lam, c: CostSpec, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Augustin-Legendre information ``I_alpha(P; W) - lam . E_P[c]``."""
    p = _check_p(P, W)
    return augustin_information(alpha, P, W, tol, max_iter) - float(p @ _cost_shift(W, lam, c))


def rg_information(alpha, P, W: Channel, lam=None, c: CostSpec | None = None) -> float:
    """Rényi-Gallager information ``alpha/(alpha-1) ln ||mu^lam_{alpha,P}||``."""
    order = as_order(alpha)
    p = _check_p(P, W)
    shift = _cost_shift(W, lam, c)
    if order.exact_one:
        q = p @ W.rows
        sup = p > 0
        d = divergence_kernel(order, W.rows[sup], W.log_rows[sup], _log(q))
        return float(p[sup] @ d) - float(p @ shift)
    a = order.alpha
    lm = log_power_mean(order, p, W.log_rows, shift)
    return a / (a - 1) * float(_lse(lm, np.isfinite(lm)))


def _kl(a: np.ndarray, b: np.ndarray) -> float:
    m = a > 0
    return float((a[m] * (np.log(a[m]) - np.log(b[m]))).sum())


def _normalized_exp(logits: np.ndarray, p: np.ndarray) -> np.ndarray:
    sup = p > 0
    z = np.full(p.size, -np.inf)
    z[sup] = np.log(p[sup]) + logits[sup]
    z -= z[sup].max()
    u = np.exp(z)
    return u / u.sum()


def _need_not_one(order: Order) -> None:
    if order.exact_one:
        raise ValidationError("the transform is defined for alpha != 1")


def poltyrev_transform(alpha, P, W: Channel, lam=None, c: CostSpec | None = None,
                       tol: float = 1e-12, max_iter: int = 10000) -> TransformPair:
    """``u(x) ~ P(x) exp((1-a) D_a(W(x)||q_{a,P}) + (a-1) lam.c(x))`` and its identity gap."""
    order = as_order(alpha)
    _need_not_one(order)
    a = order.alpha
    p = _check_p(P, W)
    shift = _cost_shift(W, lam, c)
    sol = _solved(order, P, W, tol, max_iter)
    d = divergence_kernel(order, W.rows, W.log_rows, _log(sol.mean.weights))
    sup = p > 0
    logits = np.zeros(p.size)
    logits[sup] = (1 - a) * d[sup] + (a - 1) * shift[sup]
    u = _normalized_exp(logits, p)
    lhs = sol.info - float(p @ shift)
    rhs = rg_information(order, u, W, lam, c) + _kl(p, u) / (a - 1)
    return TransformPair(Prob(p, W.inputs, _trusted=True), Prob(u, W.inputs, _trusted=True), abs(lhs - rhs))


def shayevitz_transform(alpha, P, W: Channel, lam=None, c: CostSpec | None = None,
                        tol: float = 1e-12, max_iter: int = 10000) -> TransformPair:
    """``a(x) ~ P(x) exp((a-1) D_a(W(x)||qg^lam_{a,P}) + (1-a) lam.c(x))`` and its identity gap."""
    order = as_order(alpha)
    _need_not_one(order)
    al = order.alpha
    p = _check_p(P, W)
    shift = _cost_shift(W, lam, c)
    qg = renyi_mean(order, P, W, lam, c).weights
    d = divergence_kernel(order, W.rows, W.log_rows, _log(qg))
    sup = p > 0
    logits = np.zeros(p.size)
    logits[sup] = (al - 1) * d[sup] + (1 - al) * shift[sup]
    a = _normalized_exp(logits, p)
    lhs = rg_information(order, P, W, lam, c)
    rhs = _solved(order, a, W, tol, max_iter).info - float(a @ shift) - _kl(a, p) / (al - 1)
    return TransformPair(Prob(p, W.inputs, _trusted=True), Prob(a, W.inputs, _trusted=True), abs(lhs - rhs))


def _tilted_at_mean(order: Order, p: np.ndarray, W: Channel, q: np.ndarray):
    sup = p > 0
    t, _ = tilted_kernel(order, W.rows[sup], W.log_rows[sup], _log(q))
    return sup, t


def _conditional_kl_to_channel(p_s: np.ndarray, t: np.ndarray, rows: np.ndarray, logrows: np.ndarray) -> float:
    m = t > 0
    lt = np.where(m, _log(np.where(m, t, 1.0)), 0.0)
    kl_rows = np.where(m, t * (lt - np.where(m, logrows, 0.0)), 0.0).sum(axis=1)
    return float(p_s @ kl_rows)


def csiszar_decomposition_residual(alpha, P, W: Channel, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Gap in ``I_a = a/(1-a) D_1(W_a || W | P) + I_1(P; W_a)`` with ``W_a`` tilted at the mean."""
    order = as_order(alpha)
    _need_not_one(order)
    a = order.alpha
    p = _check_p(P, W)
    sol = _solved(order, P, W, tol, max_iter)
    sup, t = _tilted_at_mean(order, p, W, sol.mean.weights)
    ps = p[sup]
    kl_w = _conditional_kl_to_channel(ps, t, W.rows[sup], W.log_rows[sup])
    mix = ps @ t
    m = t > 0
    lt = np.where(m, _log(np.where(m, t, 1.0)), 0.0)
    mi = float(ps @ np.where(m, t * (lt - _log(np.where(mix > 0, mix, 1.0))), 0.0).sum(axis=1))
    return abs(sol.info - (a / (1 - a) * kl_w + mi))


def augustin_info_order_derivative(alpha, P, W: Channel, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Derivative of ``I_alpha(P; W)`` in the order.

    The mean is stationary, so this is ``sum_x P(x) d/da D_a(W(x)||q)`` at
    ``q = q_{a,P}``, i.e. ``D_1(W_a || W | P) / (a-1)^2`` away from one.
    """
    order = as_order(alpha)
    p = _check_p(P, W)
    sol = _solved(order, P, W, tol, max_iter)
    q = sol.mean.weights
    total = sum(p[x] * divergence_derivative_in_order(order, W.rows[x], q) for x in np.flatnonzero(p > 0))
    return max(float(total), 0.0)
