"""Rényi divergences, tilted measures and order derivatives on finite sets.

All sums are evaluated in log space, ``alpha ln w + (1 - alpha) ln q``,
so that large orders neither overflow nor underflow.  Infinite
divergence is a value, not an exception; only operations whose output
is undefined at infinite divergence (tilting, derivatives) raise.

Support conventions: terms with ``w_y = 0`` contribute nothing.  For
``alpha >= 1`` the divergence is infinite as soon as some ``w_y > 0``
has ``q_y = 0``; for ``alpha < 1`` it is infinite only when the supports
are disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (
    Channel,
    Measure,
    Order,
    Prob,
    ValidationError,
    as_order,
    weights_of,
)


class InfiniteDivergenceError(ValueError):
    """Raised by operations that need a finite divergence."""


class DivergenceValue(float):
    """Extended real in ``(-inf, +inf]`` carrying a finiteness flag."""

    @property
    def finite(self) -> bool:
        return math.isfinite(self)

    def __repr__(self):
        return f"DivergenceValue({float(self)!r})"


INF = DivergenceValue(math.inf)


def _log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _lse(t: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of ``t`` restricted to ``mask``; ``-inf`` on empty rows."""
    t = np.where(mask, t, -np.inf)
    m = t.max(axis=-1, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        s = np.exp(t - safe).sum(axis=-1)
        out = np.log(s) + safe[..., 0]
    return np.where(np.isfinite(m[..., 0]), out, -np.inf)


def log_power_sums(order: Order, w: np.ndarray, lw: np.ndarray, lq: np.ndarray):
    """``ln sum_y w^alpha q^(1-alpha)`` per row, with the support mask used.

    Returns ``(lse, mask, blowup)`` where ``blowup`` flags rows that are
    infinite for ``alpha > 1`` (mass of ``w`` outside the support of ``q``).
    """
    a = order.alpha
    wpos = w > 0
    qpos = np.isfinite(lq)
    if a > 1:
        blowup = np.any(wpos & ~qpos, axis=-1)
        mask = wpos & qpos
    else:
        blowup = np.zeros(w.shape[:-1], dtype=bool)
        mask = wpos & qpos
    with np.errstate(invalid="ignore"):
        t = a * np.where(mask, lw, 0.0) + (1 - a) * np.where(mask, lq, 0.0)
    return _lse(t, mask), mask, blowup


def divergence_kernel(order: Order, w: np.ndarray, lw: np.ndarray, lq: np.ndarray) -> np.ndarray:
    """Rényi divergence of each row of ``w`` from the measure with log-weights ``lq``.

    ``w`` may be a vector or a 2-d table of rows; ``lw`` is ``ln w`` with
    ``-inf`` at zeros.  Returns float(s) with ``inf`` for infinite values.
    """
    a = order.alpha
    wpos = w > 0
    qpos = np.isfinite(lq)
    if order.exact_one:
        bad = np.any(wpos & ~qpos, axis=-1)
        with np.errstate(invalid="ignore"):
            terms = np.where(wpos & qpos, w * (np.where(wpos, lw, 0.0) - np.where(qpos, lq, 0.0)), 0.0)
        return np.where(bad, np.inf, terms.sum(axis=-1))
    lse, mask, blowup = log_power_sums(order, w, lw, lq)
    if abs(a - 1) < NEAR_ONE_SERIES:
        lse = _near_one_lse(a - 1, w, lw, lq, mask, lse)
    with np.errstate(invalid="ignore"):
        d = lse / (a - 1)
    # empty common support: lse = -inf, and -inf / (a - 1) = +inf for a < 1
    d = np.where(np.isneginf(lse), np.inf if a < 1 else -np.inf, d)
    return np.where(blowup, np.inf, d)


NEAR_ONE_SERIES = 0.05
# totals this close to 1 are rounding noise of a probability vector; keeping
# ln(total) / (alpha - 1) would blow that noise up near alpha = 1
ROUNDING_TOTAL = 64 * np.finfo(float).eps


def _log_total(total):
    return np.where(np.abs(total - 1.0) <= ROUNDING_TOTAL, 0.0, np.log(total))


def _near_one_lse(s, w, lw, lq, mask, lse):
    """``ln sum w e^(s ln(w/q))`` via ``log1p``/``expm1`` for small ``s``.

    The plain log-sum-exp loses about ``eps/|s|`` relative accuracy after
    division by ``s``; this form keeps it on rows where ``w`` is carried by
    the support of ``q`` and ``|s ln(w/q)|`` stays moderate.
    """
    with np.errstate(invalid="ignore"):
        sr = np.where(mask, s * (np.where(mask, lw, 0.0) - np.where(mask, lq, 0.0)), 0.0)
    total = np.where(w > 0, w, 0.0).sum(axis=-1)
    ok = np.all(mask == (w > 0), axis=-1) & (np.abs(sr).max(axis=-1) < 1.0) & (total > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = _log_total(total) + np.log1p((np.where(mask, w, 0.0) * np.expm1(sr)).sum(axis=-1) / total)
    return np.where(ok, acc, lse)


def tilted_kernel(order: Order, w: np.ndarray, lw: np.ndarray, lq: np.ndarray):
    """Tilted rows ``w^alpha q^(1-alpha) / sum`` and the divergences used to normalize.

    Rows with infinite divergence come back as NaN rows.
    """
    if order.exact_one:
        d = divergence_kernel(order, w, lw, lq)
        out = np.array(w, dtype=float, copy=True)
        out[~np.isfinite(d)] = np.nan
        return out, d
    a = order.alpha
    lse, mask, blowup = log_power_sums(order, w, lw, lq)
    with np.errstate(invalid="ignore", under="ignore", over="ignore"):
        t = a * np.where(mask, lw, 0.0) + (1 - a) * np.where(mask, lq, 0.0)
        rows = np.where(mask, np.exp(t - np.where(np.isfinite(lse), lse, 0.0)[..., None]), 0.0)
        d = lse / (a - 1)
    bad = blowup | ~np.isfinite(lse)
    d = np.where(bad, np.inf, d)
    rows[bad] = np.nan
    return rows, d


def _pair(w, q) -> tuple[np.ndarray, np.ndarray]:
    ww, qq = weights_of(w), weights_of(q)
    if ww.ndim != 1 or ww.shape != qq.shape:
        raise ValidationError("divergence between vectors on different index sets")
    if np.any(ww < 0) or np.any(qq < 0):
        raise ValidationError("divergence arguments must be nonnegative")
    if ww.sum() <= 0 or qq.sum() <= 0:
        raise ValidationError("divergence arguments must have positive total mass")
    return ww, qq


def renyi_divergence(alpha: Order | float, w: Measure | np.ndarray, q: Measure | np.ndarray) -> DivergenceValue:
    """Order ``alpha`` Rényi divergence ``D_alpha(w || q)`` in nats.

    ``(1/(alpha-1)) ln sum w^alpha q^(1-alpha)`` for ``alpha != 1`` and
    ``sum w (ln w - ln q)`` at ``alpha = 1``.  Arguments may be unnormalized,
    in which case the value can be negative.
    """
    order = as_order(alpha)
    ww, qq = _pair(w, q)
    return DivergenceValue(float(divergence_kernel(order, ww, _log(ww), _log(qq))))


def tilted_measure(alpha: Order | float, w: Prob | np.ndarray, q: Prob | np.ndarray) -> Prob:
    """Tilted probability ``w^alpha q^(1-alpha) e^((alpha-1) D_alpha(w||q))``."""
    order = as_order(alpha)
    ww, qq = _pair(w, q)
    _check_prob(ww)
    _check_prob(qq)
    rows, d = tilted_kernel(order, ww, _log(ww), _log(qq))
    if not np.isfinite(d):
        raise InfiniteDivergenceError("tilting needs a finite divergence")
    labels = w.labels if isinstance(w, Measure) else None
    return Prob(rows, labels, _trusted=True)


def _check_prob(w: np.ndarray) -> None:
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("tilting is defined for probability arguments only")


@dataclass(frozen=True)
class TiltedChannel:
    """Tilted channel on the rows where it is defined.

    ``channel`` holds the defined rows only (input labels preserved) and
    ``defined`` is a mask over the original inputs.
    """

    channel: Channel
    defined: np.ndarray
    divergences: np.ndarray


def tilted_channel(alpha: Order | float, W: Channel, q: Prob | np.ndarray) -> TiltedChannel:
    order = as_order(alpha)
    qq = weights_of(q)
    if qq.shape != (W.n_outputs,):
        raise ValidationError("q must live on the channel's output set")
    rows, d = tilted_kernel(order, W.rows, W.log_rows, _log(qq))
    ok = np.isfinite(d)
    if not ok.any():
        raise InfiniteDivergenceError("every row has infinite divergence from q")
    labels = [x for x, k in zip(W.inputs, ok) if k]
    return TiltedChannel(Channel._trusted(rows[ok], labels, W.outputs), ok, d)


def conditional_divergence(alpha: Order | float, W: Channel, q: Prob | np.ndarray, P: Prob | np.ndarray) -> DivergenceValue:
    """``sum_x P(x) D_alpha(W(x) || q)``; infinite if a supported row diverges."""
    order = as_order(alpha)
    qq, pp = weights_of(q), weights_of(P)
    if qq.shape != (W.n_outputs,) or pp.shape != (W.n_inputs,):
        raise ValidationError("index mismatch between channel, q and P")
    sup = pp > 0
    d = divergence_kernel(order, W.rows[sup], W.log_rows[sup], _log(qq))
    if not np.all(np.isfinite(d)):
        return INF
    return DivergenceValue(float(pp[sup] @ d))


# ---------------------------------------------------------------------------
# order derivatives


def _kl_terms(a: np.ndarray, la: np.ndarray, lb: np.ndarray) -> float:
    m = a > 0
    return float((a[m] * (la[m] - lb[m])).sum())


def _finite_near(order: Order, ww: np.ndarray, qq: np.ndarray) -> None:
    up = Order(order.alpha * (1 + 1e-6) + 1e-9)
    for o in (order, up):
        if not math.isfinite(renyi_divergence(o, ww, qq)):
            raise InfiniteDivergenceError(f"divergence infinite near order {order.alpha}")


def _tilt_stats(order: Order, ww: np.ndarray, qq: np.ndarray):
    lw, lq = _log(ww), _log(qq)
    rows, d = tilted_kernel(order, ww, lw, lq)
    m = rows > 0
    ltilt = np.where(m, _log(np.where(m, rows, 1.0)), -np.inf)
    ratio = np.where(m, ltilt - np.where(m, lw, 0.0), 0.0)  # ln dw_alpha/dw
    return rows, m, ratio, lw, lq, float(d)


SERIES_WINDOW = 1e-3


def _log_ratio_cumulants(ww: np.ndarray, qq: np.ndarray):
    """Cumulants two to six of ``ln(w/q)`` under ``w/sum(w)`` and ``ln sum(w)``.

    ``None`` off support or for clearly unnormalized ``w``.
    """
    m = ww > 0
    lt = float(_log_total(ww[m].sum()))
    if np.any(m & (qq <= 0)) or abs(lt) > 1e-9:
        return None
    p = ww[m] / ww[m].sum()
    r = np.log(ww[m]) - np.log(qq[m])
    c = r - p @ r
    c2, c3, c4, c5, c6 = (float(p @ c**k) for k in range(2, 7))
    k4 = c4 - 3 * c2**2
    k5 = c5 - 10 * c3 * c2
    k6 = c6 - 15 * c4 * c2 - 10 * c3**2 + 30 * c2**3
    return c2, c3, k4, k5, k6, lt


def divergence_derivative_in_order(alpha: Order | float, w, q) -> float:
    """First derivative of ``D_alpha(w||q)`` with respect to the order."""
    order = as_order(alpha)
    ww, qq = _pair(w, q)
    _finite_near(order, ww, qq)
    s = 0.0 if order.exact_one else order.alpha - 1
    if abs(s) < SERIES_WINDOW:
        k = _log_ratio_cumulants(ww, qq)
        if k is not None:
            # D(1+s) = ln(sum w) / s + sum_n kappa_n s^(n-1) / n!, termwise
            series = k[0] / 2 + k[1] * s / 3 + k[2] * s**2 / 8 + k[3] * s**3 / 30
            return max(series - (k[5] / s**2 if s else 0.0), 0.0)
    rows, m, ratio, _, _, _ = _tilt_stats(order, ww, qq)
    kl = float(rows[m] @ ratio[m])
    return max(kl, 0.0) / s**2


def divergence_second_derivative_in_order(alpha: Order | float, w, q) -> float:
    """Second derivative of ``D_alpha(w||q)`` with respect to the order."""
    order = as_order(alpha)
    ww, qq = _pair(w, q)
    _finite_near(order, ww, qq)
    s = 0.0 if order.exact_one else order.alpha - 1
    if abs(s) < 10 * SERIES_WINDOW:
        k = _log_ratio_cumulants(ww, qq)
        if k is not None:
            series = k[1] / 3 + k[2] * s / 4 + k[3] * s**2 / 10 + k[4] * s**3 / 36
            return series + (2 * k[5] / s**3 if s else 0.0)
    rows, m, ratio, _, _, _ = _tilt_stats(order, ww, qq)
    kl = float(rows[m] @ ratio[m])
    second = float(rows[m] @ ratio[m] ** 2)
    return (second - 2 * kl - kl**2) / s**3


def variational_residual(alpha: Order | float, w: Prob | np.ndarray, q: Prob | np.ndarray) -> float:
    """Gap in ``D_alpha = alpha/(1-alpha) D_1(w_alpha||w) + D_1(w_alpha||q)``."""
    order = as_order(alpha)
    if order.exact_one:
        raise ValidationError("the variational identity needs alpha != 1")
    ww, qq = _pair(w, q)
    rows, m, ratio, lw, lq, d = _tilt_stats(order, ww, qq)
    if not math.isfinite(d):
        raise InfiniteDivergenceError("divergence is infinite")
    lt = ratio + np.where(m, lw, 0.0)
    if np.any(m & ~np.isfinite(lq)):
        raise InfiniteDivergenceError("tilted measure not absolutely continuous in q")
    kl_w = float(rows[m] @ ratio[m])
    kl_q = float(rows[m] @ (lt[m] - lq[m]))
    a = order.alpha
    return abs(d - (a / (1 - a) * kl_w + kl_q))


# ---------------------------------------------------------------------------
# matrix-vector kernels for the iterative solvers

_SAFE_EXP = 600.0


class PowerKernel:
    """Row-set kernel for repeated divergence, tilting and power-mean evaluations.

    Precomputes ``W**alpha`` so that each evaluation costs two matrix-vector
    products.  Whenever an exponent would leave ``[-600, 600]`` the exact
    log-space path is used instead, so results never over- or underflow.
    """

    def __init__(self, order: Order, rows: np.ndarray, logrows: np.ndarray):
        self.order = order
        self.rows = rows
        self.logrows = logrows
        self.alpha = a = order.alpha
        self.pos = rows > 0
        finite_lw = logrows[self.pos]
        if order.exact_one:
            self.wlogw = np.where(self.pos, rows * np.where(self.pos, logrows, 0.0), 0.0).sum(axis=1)
            self.fast = True
            self.wa = rows
        else:
            self.fast = finite_lw.size == 0 or a * finite_lw.min() > -_SAFE_EXP
            self.wa = np.where(self.pos, np.exp(a * np.where(self.pos, logrows, 0.0)), 0.0) if self.fast else None

    def _qpow(self, lq: np.ndarray):
        """``q^(1-alpha)`` scaled by ``e^{-(1-alpha) c0}``; ``None`` if unsafe."""
        qpos = np.isfinite(lq)
        c0 = lq[qpos].max()
        e = (1 - self.alpha) * (lq[qpos] - c0)
        if e.size and (e.max() > _SAFE_EXP or e.min() < -_SAFE_EXP):
            return None, c0, qpos
        v = np.zeros(lq.size)
        v[qpos] = np.exp(e)
        return v, c0, qpos

    def log_z(self, lq: np.ndarray) -> np.ndarray:
        """``ln sum_y W_xy^alpha q_y^(1-alpha)`` per row over the common support."""
        if self.fast:
            v, c0, _ = self._qpow(lq)
            if v is not None:
                with np.errstate(divide="ignore"):
                    return np.log(self.wa @ v) + (1 - self.alpha) * c0
        lse, _, _ = log_power_sums(self.order, self.rows, self.logrows, lq)
        return lse

    def blowup(self, lq: np.ndarray) -> np.ndarray:
        """Rows with mass outside the support of ``q``."""
        off = ~np.isfinite(lq)
        if not off.any():
            return np.zeros(self.rows.shape[0], dtype=bool)
        return self.pos[:, off].any(axis=1)

    def divergences(self, lq: np.ndarray) -> np.ndarray:
        a = self.alpha
        if self.order.exact_one:
            bad = self.blowup(lq)
            lqf = np.where(np.isfinite(lq), lq, 0.0)
            d = self.wlogw - self.rows @ lqf
            return np.where(bad, np.inf, d)
        lz = self.log_z(lq)
        with np.errstate(invalid="ignore", divide="ignore"):
            d = lz / (a - 1)
        d = np.where(np.isneginf(lz), np.inf if a < 1 else -np.inf, d)
        if a > 1:
            d = np.where(self.blowup(lq), np.inf, d)
        return d

    def tilt_mix(self, weights: np.ndarray, lq: np.ndarray, lz: np.ndarray | None = None) -> np.ndarray:
        """``sum_x weights_x W_alpha^q(x)`` for rows with finite divergence (unnormalized)."""
        if self.order.exact_one:
            return weights @ self.rows
        a = self.alpha
        if lz is None:
            lz = self.log_z(lq)
        ok = np.isfinite(lz) & (weights > 0)
        if self.fast:
            v, c0, qpos = self._qpow(lq)
            if v is not None:
                coef = np.zeros(weights.size)
                coef[ok] = weights[ok] * np.exp((1 - a) * c0 - lz[ok])
                return v * (coef @ self.wa)
        rows, _ = tilted_kernel(self.order, self.rows[ok], self.logrows[ok], lq)
        return weights[ok] @ rows

    def log_power_mean(self, lp: np.ndarray) -> np.ndarray:
        """``ln [sum_x e^{lp_x} W_xy^alpha]^{1/alpha}`` per output."""
        a = self.alpha
        fin = np.isfinite(lp)
        m = lp[fin].max()
        if self.fast and (m - lp[fin]).max(initial=0.0) < _SAFE_EXP:
            s = np.zeros(lp.size)
            s[fin] = np.exp(lp[fin] - m)
            with np.errstate(divide="ignore"):
                return (np.log(s @ self.wa) + m) / a
        t = lp[fin][:, None] + a * self.logrows[fin]
        return _lse(t.T, np.isfinite(t).T) / a
