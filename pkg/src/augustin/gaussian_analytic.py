"""Closed forms for scalar and parallel Gaussian channels with quadratic cost.

The scalar channel adds ``N(0, sigma2)`` noise to a real input and charges
``x^2``.  The Augustin mean of the input ``N(0, rho)`` is ``N(0, theta)`` with
``theta = scalar_center_variance(alpha, sigma2, rho)``; the capacity, its
derivative and the A-L (Augustin-Legendre) quantities follow from it.  A
discretizer turns the channel into a finite :class:`~augustin.core_model.Channel`
so the numerical solvers can be checked against the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .augustin_mean import augustin_information
from .core_model import Channel, CostSpec, Prob, ValidationError, as_order

LAM_FLOOR = 1e-12


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be a positive finite number, got {v!r}")


def _alpha(alpha) -> float:
    return as_order(alpha).alpha


@dataclass(frozen=True)
class ScalarGaussian:
    """Additive Gaussian noise channel with noise variance ``sigma2`` and cost ``x^2``."""

    sigma2: float

    def __post_init__(self):
        _positive(sigma2=self.sigma2)

    def capacity(self, alpha, rho: float) -> float:
        return scalar_capacity(alpha, self.sigma2, rho)

    def center_variance(self, alpha, rho: float) -> float:
        return scalar_center_variance(alpha, self.sigma2, rho)

    def al_capacity(self, alpha, lam: float) -> float:
        return scalar_al_capacity(alpha, self.sigma2, lam)

    def al_center_variance(self, alpha, lam: float) -> float:
        return scalar_al_center_variance(alpha, self.sigma2, lam)


def scalar_center_variance(alpha, sigma2: float, rho: float) -> float:
    """Variance ``theta`` of the Augustin center under the constraint ``E[x^2] <= rho``.

    ``theta`` is the only root above ``sigma2`` of
    ``theta^2 - theta (rho + (2 - 1/alpha) sigma2) + (1 - 1/alpha) sigma2^2``.
    """
    a = _alpha(alpha)
    _positive(sigma2=sigma2, rho=rho)
    h = rho / 2 - sigma2 / (2 * a)
    return sigma2 + h + math.sqrt(h * h + rho * sigma2)


def center_variance_residual(alpha, sigma2: float, rho: float, theta: float) -> float:
    """Value of the cubic whose root above ``sigma2`` is the center variance."""
    a = _alpha(alpha)
    return theta * (theta * theta - theta * (rho + (2 - 1 / a) * sigma2) + (1 - 1 / a) * sigma2 * sigma2)


def _capacity_terms(a: float, sigma2: float, rho: float, theta: float) -> float:
    d = a * theta + (1 - a) * sigma2
    log_ratio = 0.5 * a * math.log(theta) + 0.5 * (1 - a) * math.log(sigma2) - 0.5 * math.log(d)
    return a * rho / (2 * d) + log_ratio / (a - 1)


def scalar_capacity(alpha, sigma2: float, rho: float) -> float:
    """Order ``alpha`` Augustin capacity under the constraint ``E[x^2] <= rho``."""
    a = _alpha(alpha)
    _positive(sigma2=sigma2, rho=rho)
    if a == 1.0:
        return 0.5 * math.log1p(rho / sigma2)
    return _capacity_terms(a, sigma2, rho, scalar_center_variance(a, sigma2, rho))


def gaussian_divergence(alpha, x: float, sigma2: float, theta: float) -> float:
    """``D_alpha(N(x, sigma2) || N(0, theta))``.

    For ``alpha > 1`` with ``alpha theta + (1 - alpha) sigma2 <= 0`` the
    defining integral diverges and ``inf`` is returned.
    """
    a = _alpha(alpha)
    _positive(sigma2=sigma2, theta=theta)
    if a == 1.0:
        return (sigma2 + x * x - theta) / (2 * theta) + 0.5 * math.log(theta / sigma2)
    d = a * theta + (1 - a) * sigma2
    if d <= 0:
        return math.inf
    return _capacity_terms(a, sigma2, x * x, theta)


def gaussian_operator_variance_map(alpha, rho: float, sigma2: float, theta: float) -> float:
    """Variance of the Augustin operator applied to ``N(0, theta)`` for the input ``N(0, rho)``.

    Returns ``inf`` when the tilted channel is undefined
    (``alpha theta + (1 - alpha) sigma2 <= 0``).
    """
    a = _alpha(alpha)
    _positive(rho=rho, sigma2=sigma2, theta=theta)
    d = a * theta + (1 - a) * sigma2
    if d <= 0:
        return math.inf
    gain = a * theta / d
    return gain * gain * rho + sigma2 * theta / d


def scalar_capacity_derivative(alpha, sigma2: float, rho: float) -> float:
    """``d/drho`` of :func:`scalar_capacity`; decreasing from ``alpha / (2 sigma2)`` to 0."""
    a = _alpha(alpha)
    _positive(sigma2=sigma2, rho=rho)
    return a / (a * rho + sigma2 + math.sqrt((a * rho - sigma2) ** 2 + 4 * rho * a * a * sigma2))


def capacity_derivative_from_center(alpha, sigma2: float, rho: float) -> float:
    """The same derivative written through the center variance."""
    a = _alpha(alpha)
    theta = scalar_center_variance(a, sigma2, rho)
    return a / (2 * (a * theta + (1 - a) * sigma2))


def _check_lam(lam: float) -> None:
    _positive(lam=lam)


def scalar_al_capacity(alpha, sigma2: float, lam: float) -> float:
    """A-L capacity ``sup_rho C(rho) - lam rho``; zero for ``lam >= alpha / (2 sigma2)``."""
    a = _alpha(alpha)
    _positive(sigma2=sigma2)
    _check_lam(lam)
    if lam >= a / (2 * sigma2):
        return 0.0
    u = 2 * sigma2 * lam
    if a == 1.0:
        return sigma2 * lam - 0.5 * (1.0 + math.log(u))
    v = u / a
    return a / (a - 1) * 0.5 * math.log(1 / a + (a - 1) / a * v) - 0.5 * math.log(v)


def scalar_al_center_variance(alpha, sigma2: float, lam: float) -> float:
    """Variance of the A-L center, ``sigma2 + (1/(2 lam) - sigma2/alpha)^+``."""
    a = _alpha(alpha)
    _positive(sigma2=sigma2)
    _check_lam(lam)
    return sigma2 + max(1 / (2 * lam) - sigma2 / a, 0.0)


def al_capacity_derivative(alpha, sigma2: float, lam: float) -> float:
    """``d/dlam`` of :func:`scalar_al_capacity`; minus the cost that attains the conjugate."""
    a = _alpha(alpha)
    _positive(sigma2=sigma2)
    _check_lam(lam)
    if lam > a / (2 * sigma2):
        return 0.0
    return -(a - 2 * sigma2 * lam) / (2 * lam * (a + (a - 1) * 2 * sigma2 * lam))


def optimal_cost(alpha, sigma2: float, lam: float) -> float:
    """The cost ``rho >= 0`` at which the capacity has slope ``lam``."""
    return -al_capacity_derivative(alpha, sigma2, lam)


@dataclass(frozen=True)
class WaterfillResult:
    """Optimal cost allocation over parallel Gaussian channels."""

    allocations: np.ndarray
    lam: float
    capacity: float
    center_variances: np.ndarray


def parallel_waterfill(alpha, sigma2s: Sequence[float], rho: float) -> WaterfillResult:
    """Capacity of parallel Gaussian channels under the total constraint ``sum E[x_t^2] <= rho``.

    The multiplier solves ``sum_t rho_t(lam) = rho`` where each ``rho_t`` is
    the cost at which ``C_t`` has slope ``lam`` (zero once ``lam`` exceeds the
    slope at the origin); the map is nonincreasing in ``lam``.
    """
    a = _alpha(alpha)
    s = np.asarray(sigma2s, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValidationError("sigma2s must be a nonempty list")
    for v in s:
        _positive(sigma2=float(v))
    _positive(rho=rho)

    def alloc(lam: float) -> np.ndarray:
        return np.maximum(a - 2 * s * lam, 0.0) / (2 * lam * (a + 2 * (a - 1) * s * lam))

    hi = float(np.max(a / (2 * s)))
    lo = LAM_FLOOR
    if alloc(lo).sum() < rho:
        raise ValidationError(f"multiplier bracket [{lo}, {hi}] does not reach the total cost {rho}")
    lam = brentq(lambda t: alloc(t).sum() - rho, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    rho_t = alloc(lam)
    cap = sum(scalar_capacity(a, float(v), float(r)) for v, r in zip(s, rho_t) if r > 0)
    theta = s + np.maximum(1 / (2 * lam) - s / a, 0.0)
    return WaterfillResult(rho_t, float(lam), float(cap), theta)


# ---------------------------------------------------------------------------
# discretization


def discretize_scalar_gaussian(sigma2: float, input_points: Sequence[float],
                               output_range: Sequence[float], cells: int) -> tuple[Channel, CostSpec]:
    """Finite channel from quantizing the output of the Gaussian channel to ``cells`` equal cells.

    Tail masses below and above the range are folded into the end cells, so
    every row is exactly a probability distribution.  Cost is ``x^2``.
    """
    _positive(sigma2=sigma2)
    a, b = (float(v) for v in output_range)
    if not (math.isfinite(a) and math.isfinite(b) and b > a):
        raise ValidationError("output range must be a finite interval [a, b] with b > a")
    if int(cells) != cells or cells < 2:
        raise ValidationError("cells must be an integer of at least 2")
    x = np.asarray(input_points, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ValidationError("input points must be a nonempty list of finite reals")
    edges = np.linspace(a, b, int(cells) + 1)
    sd = math.sqrt(sigma2)
    z = (edges[None, :] - x[:, None]) / sd
    z[:, 0], z[:, -1] = -np.inf, np.inf
    lo, hi = z[:, :-1], z[:, 1:]
    # upper tail probabilities keep relative accuracy right of the mean
    right = lo + hi > 0
    rows = np.where(right, norm.sf(lo) - norm.sf(hi), norm.cdf(hi) - norm.cdf(lo))
    mids = 0.5 * (edges[:-1] + edges[1:])
    labels = [float(v) for v in x]
    # repeated points are allowed; they then get index labels
    W = Channel(rows, inputs=labels if len(set(labels)) == len(labels) else None, outputs=[float(m) for m in mids])
    return W, CostSpec(x * x)


def quantized_gaussian_input(input_points: Sequence[float], variance: float) -> Prob:
    """``N(0, variance)`` quantized to the nearest input point, tails folded into the end points."""
    _positive(variance=variance)
    x = np.sort(np.asarray(input_points, dtype=float))
    cuts = np.concatenate([[-np.inf], 0.5 * (x[1:] + x[:-1]), [np.inf]]) / math.sqrt(variance)
    w = np.diff(norm.cdf(cuts))
    return Prob(w, labels=[float(v) for v in x])


@dataclass(frozen=True)
class BridgeReport:
    """Numerical Augustin information of a quantized Gaussian input against the closed form."""

    numeric: float
    closed_form: float
    gap: float
    expected_cost: float


def gaussian_bridge(alpha, sigma2: float = 1.0, rho: float = 1.0, cells: int = 1600,
                    half_range: float = 8.0, n_inputs: int = 41, input_half_range: float = 4.0,
                    tol: float = 1e-12) -> BridgeReport:
    """Augustin information of quantized ``N(0, rho)`` on the discretized channel.

    The closed form is ``D_alpha(W || N(0, theta) | P)`` for the quantized
    input ``P``, which equals ``C(rho)`` corrected linearly for the mismatch
    between ``E_P[x^2]`` and ``rho``.
    """
    a = _alpha(alpha)
    points = np.linspace(-input_half_range, input_half_range, n_inputs)
    W, c = discretize_scalar_gaussian(sigma2, points, (-half_range, half_range), cells)
    P = quantized_gaussian_input(points, rho)
    numeric = augustin_information(a, P, W, tol=tol)
    ec = float(c.expected(P.weights)[0])
    closed = scalar_capacity(a, sigma2, rho) + (ec - rho) * capacity_derivative_from_center(a, sigma2, rho)
    return BridgeReport(float(numeric), float(closed), abs(float(numeric) - float(closed)), ec)
