"""Finite representations of the shift-invariant channels on ``[0, 1)``.

Every input ``x`` has the density ``f_{floor(x)}`` cyclically shifted by
``frac(x)``; each ``f_i`` is a constant multiple of an arc indicator.  A
finite set of representative inputs determines the breakpoints of all its
arcs, and on the cells between consecutive breakpoints every represented
density is constant, so the channel obtained by quantizing the output to the
cells preserves every divergence exactly.

* Affine example: ``f_i = e^{i+1} 1[0, e^{-i-1})``, cost ``floor(x)``.
  ``C(rho) = rho + 1`` and ``C^lam = 1`` for ``lam >= 1``.  Class ``i`` is
  represented by a chain of shifts ``k e^{-i-1} mod 1``; no finite set of
  such arcs covers ``[0, 1)`` evenly (the arc lengths are irrational), so the
  finite channel falls short of the capacity by a deficit that the chain
  lengths below keep under ``1e-7``.
* Non upper semicontinuous example: arcs of length ``2^{-i-1}`` for
  ``i > 0``, ``2/3`` for ``i = 0`` and ``1/2`` for ``i < 0``, with cost
  ``floor(x)`` for ``x >= 0`` and ``2^{floor(x)}`` for ``x < 0``.  These arcs
  tile ``[0, 1)`` exactly.  ``C(0) = ln(3/2)`` while ``inf_lam C^lam = ln 2``.
* Product example: the product of the two with additive cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacity_solvers import (
    BoundaryConstraintError,
    InfeasibleConstraintError,
    _ChannelOracle,
    cost_allocation_capacity,
    cost_constrained_capacity,
    rg_capacity,
)
from .core_model import (
    Channel,
    CostSpec,
    ValidationError,
    additive_cost,
    as_order,
    product_channel,
)
from .augustin_mean import augustin_information

# chain lengths per class; see the module docstring
AFFINE_ARCS = {0: 125, 1: 133, 2: 241, 3: 437}
NONUSC_NEG = 30
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class ShiftFamilySpec:
    """Represented inputs of a shift family and the induced output cells.

    ``classes[k]`` is ``floor(x_k)``, ``shifts[k]`` is ``frac(x_k)``, the arc of
    input ``k`` is ``[shifts[k], shifts[k] + lengths[k])`` modulo one and
    ``breakpoints`` runs from 0 to 1.
    """

    variant: str
    N: int
    classes: np.ndarray
    shifts: np.ndarray
    lengths: np.ndarray
    costs: np.ndarray
    breakpoints: np.ndarray

    @property
    def inputs(self) -> list[float]:
        return [float(c + s) for c, s in zip(self.classes, self.shifts)]

    @property
    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        return self.breakpoints[:-1], self.breakpoints[1:]

    def membership(self) -> np.ndarray:
        """Boolean matrix: cell ``j`` lies in the arc of input ``k``."""
        lo, hi = self.cells
        mid = 0.5 * (lo + hi)
        off = (mid[None, :] - self.shifts[:, None]) % 1.0
        return off < self.lengths[:, None]

    def check(self) -> None:
        b = self.breakpoints
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ValidationError("breakpoints must increase from 0 to 1")
        ends = np.concatenate([self.shifts, (self.shifts + self.lengths) % 1.0])
        dist = np.abs(ends[:, None] - b[None, :])
        dist = np.minimum(dist, 1.0 - dist)
        if np.max(dist.min(axis=1)) > MERGE_TOL:
            raise ValidationError("an arc endpoint is not a cell boundary")

    def channel(self) -> Channel:
        lo, hi = self.cells
        mass = np.where(self.membership(), (hi - lo)[None, :], 0.0)
        rows = mass / mass.sum(axis=1, keepdims=True)
        return Channel(rows, inputs=self.inputs, outputs=[float(v) for v in lo])

    def cost(self) -> CostSpec:
        return CostSpec(self.costs)

    def refined(self) -> "ShiftFamilySpec":
        """The same family with every cell split in two."""
        lo, hi = self.cells
        b = np.sort(np.concatenate([self.breakpoints, 0.5 * (lo + hi)]))
        return ShiftFamilySpec(self.variant, self.N, self.classes, self.shifts, self.lengths, self.costs, b)


def _breakpoints(shifts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    pts = np.concatenate([[0.0, 1.0], shifts % 1.0, (shifts + lengths) % 1.0])
    pts = np.sort(pts)
    keep = np.concatenate([[True], np.diff(pts) > MERGE_TOL])
    pts = pts[keep]
    pts[-1] = 1.0
    if pts.size > 2 and 1.0 - pts[-2] <= MERGE_TOL:
        pts = np.delete(pts, -2)
    return pts


def _family(variant: str, N: int, groups: list[tuple[int, np.ndarray, float, float]]) -> ShiftFamilySpec:
    classes = np.concatenate([np.full(s.size, k) for k, s, _, _ in groups])
    shifts = np.concatenate([s for _, s, _, _ in groups])
    lengths = np.concatenate([np.full(s.size, ln) for _, s, ln, _ in groups])
    costs = np.concatenate([np.full(s.size, c) for _, s, _, c in groups])
    spec = ShiftFamilySpec(variant, N, classes, shifts, lengths, costs, _breakpoints(shifts, lengths))
    spec.check()
    return spec


def _chain(length: float, k: int) -> np.ndarray:
    return (np.arange(k) * length) % 1.0


def affine_family(N: int = 3, arcs: Sequence[int] | dict | None = None) -> ShiftFamilySpec:
    """Classes ``0..N`` of the affine example, class ``i`` as a chain of ``arcs[i]`` shifts."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    table = dict(AFFINE_ARCS)
    if arcs is not None:
        table.update(arcs if isinstance(arcs, dict) else dict(enumerate(arcs)))
    groups = []
    for i in range(N + 1):
        length = math.exp(-i - 1)
        k = int(table.get(i, math.ceil(10.0 / length)))
        if k < 1:
            raise ValidationError("each class needs at least one shift")
        groups.append((i, _chain(length, k), length, float(i)))
    return _family("affine", N, groups)


def build_affine_example(N: int = 3, arcs: Sequence[int] | dict | None = None) -> tuple[Channel, CostSpec]:
    """The affine-capacity channel truncated to classes ``0..N`` with cost ``floor(x)``."""
    spec = affine_family(N, arcs)
    return spec.channel(), spec.cost()


def nonusc_family(N: int = 4, neg: int = NONUSC_NEG) -> ShiftFamilySpec:
    """Classes ``-neg..N`` of the non upper semicontinuous example; every class tiles exactly."""
    if N < 1 or neg < 1:
        raise ValidationError("N and neg must be at least 1")
    groups = []
    for j in range(-neg, 0):
        groups.append((j, np.array([0.0, 0.5]), 0.5, 2.0 ** j))
    groups.append((0, np.array([0.0, 1.0 / 3.0, 2.0 / 3.0]), 2.0 / 3.0, 0.0))
    for i in range(1, N + 1):
        m = 2 ** (i + 1)
        groups.append((i, np.arange(m) / m, 1.0 / m, float(i)))
    return _family("non_usc", N, groups)


def build_nonusc_example(N: int = 4, neg: int = NONUSC_NEG) -> tuple[Channel, CostSpec]:
    """The non upper semicontinuous channel on classes ``-neg..N``.

    The smallest positive cost is ``2^{-neg}``; the constrained capacity is
    under-approximated for ``rho < 2^{-neg}`` and multipliers beyond about
    ``2^{neg}`` see the truncation.
    """
    spec = nonusc_family(N, neg)
    return spec.channel(), spec.cost()


def product_example_parts(N: int = 3, neg: int = NONUSC_NEG, arcs=None) -> list[tuple[Channel, CostSpec]]:
    """The two factors of the product example, for the dual (allocation) route."""
    return [build_affine_example(N, arcs), build_nonusc_example(max(N, 1), neg)]


def build_product_example(N: int = 1, neg: int = 2, arcs=None, max_size: int = 4_000_000) -> tuple[Channel, CostSpec]:
    """Explicit product of the two examples with additive cost.

    The product of the full-accuracy factors is far too large to store, so
    the default truncation is small; ``max_size`` bounds the number of
    matrix entries.
    """
    if arcs is None:
        arcs = {i: 19 if i == 0 else 7 for i in range(N + 1)}
    parts = [build_affine_example(N, arcs), build_nonusc_example(N, neg)]
    size = math.prod(w.n_inputs for w, _ in parts) * math.prod(w.n_outputs for w, _ in parts)
    if size > max_size:
        raise ValidationError(f"product channel has {size} entries, above the limit {max_size}")
    return product_channel([w for w, _ in parts]), additive_cost([c for _, c in parts])


def product_example_capacity(alpha, rho: float, parts=None, tol: float = 1e-9) -> float:
    """Cost-constrained capacity of the product example.

    For ``rho > 0`` the dual route over the factors is used; ``rho = 0``
    forces every factor onto its zero-cost inputs, where the capacity is
    the sum of the Augustin capacities of the zero-cost subchannels.
    """
    if parts is None:
        parts = product_example_parts()
    if rho < 0:
        raise InfeasibleConstraintError("cost constraint below the minimum cost")
    if rho > 0:
        return cost_allocation_capacity(alpha, parts, rho, tol=tol).value
    total = 0.0
    for W, c in parts:
        total += _min_cost_capacity(as_order(alpha), W, c)
    return total


def _min_cost_capacity(order, W: Channel, c: CostSpec, tol: float = 1e-11) -> float:
    keep = np.all(c.costs <= c.costs.min(axis=0) + 1e-15, axis=1)
    sub = Channel(W.rows[keep], inputs=[W.inputs[k] for k in np.nonzero(keep)[0]], outputs=W.outputs)
    return rg_capacity(order, sub, tol=tol).value


@dataclass(frozen=True)
class DualityGapCertificate:
    primal: float
    dual: float
    gap: float
    lam: np.ndarray
    boundary: bool


def _default_grid(dim: int) -> list[np.ndarray]:
    axis = np.concatenate([[0.0], np.geomspace(1e-3, 100.0, 61)])
    if dim == 1:
        return [np.array([t]) for t in axis]
    coarse = np.concatenate([[0.0], np.geomspace(1e-2, 100.0, 13)])
    mesh = np.meshgrid(*([coarse] * dim), indexing="ij")
    return [np.array(v) for v in zip(*(m.ravel() for m in mesh))]


def _primal_direct(order, W: Channel, c: CostSpec, rho: np.ndarray) -> float:
    """``max I_alpha(P)`` subject to ``E_P c <= rho`` by SLSQP with envelope gradients."""
    from scipy.optimize import minimize

    from .augustin_mean import solve_augustin_mean
    from .renyi_divergence import PowerKernel, _log

    kernel = PowerKernel(order, W.rows, W.log_rows)
    n = W.n_inputs

    def f(p):
        p = np.maximum(p, 0.0)
        p = p / p.sum()
        sol = solve_augustin_mean(order, p, W)
        d = kernel.divergences(_log(sol.mean.weights))
        d = np.where(np.isfinite(d), d, 1e3)
        return -sol.info, -d

    cons = [{"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: np.ones(n)}]
    for j in range(c.dim):
        cons.append({"type": "ineq", "fun": lambda p, j=j: rho[j] - p @ c.costs[:, j],
                     "jac": lambda p, j=j: -c.costs[:, j]})
    best = -math.inf
    starts = [np.full(n, 1.0 / n)] + [np.eye(n)[k] for k in range(n) if np.all(c.costs[k] <= rho)]
    for p0 in starts[: 1 + min(n, 8)]:
        res = minimize(f, p0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n, constraints=cons,
                       options={"ftol": 1e-13, "maxiter": 500})
        p = np.maximum(res.x, 0.0)
        p /= p.sum()
        if np.all(c.expected(p) <= rho + 1e-9):
            best = max(best, augustin_information(order, p, W))
    return best


def duality_gap_certificate(alpha, channel: Channel, cost: CostSpec, rho, lam_grid=None,
                            tol: float = 1e-10) -> DualityGapCertificate:
    """Primal capacity, bounded-grid dual value and their difference.

    The primal is a feasible Augustin information: the dual route's primal
    bound in the interior, the capacity of the minimum-cost subchannel on a
    one-dimensional boundary, and direct constrained maximization otherwise.
    The dual is ``min C^lam + lam . rho`` over ``lam_grid`` (by default
    ``[0, 100]``), refined between the neighbors of the best grid point for a
    scalar cost.  Both sides are certified: the dual uses the radius upper
    bound of each ``C^lam``.
    """
    order = as_order(alpha)
    cost.check(channel)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    slack = cost.slack(rho)
    if slack < -1e-12:
        raise InfeasibleConstraintError(f"no input distribution meets the cost constraint {rho.tolist()}")
    boundary = slack <= 1e-12
    if not boundary:
        try:
            primal = cost_constrained_capacity(order, channel, cost, rho).diagnostics["primal_lower_bound"]
        except BoundaryConstraintError:
            boundary = True
    if boundary:
        if cost.dim == 1 or np.all(cost.costs == cost.costs[:1]):
            primal = _min_cost_capacity(order, channel, cost)
        else:
            primal = _primal_direct(order, channel, cost, rho)
    oracle = _ChannelOracle(order, channel, cost, tol, 20000)
    grid = _default_grid(cost.dim) if lam_grid is None else [np.atleast_1d(np.asarray(v, float)) for v in lam_grid]
    grid = sorted(grid, key=lambda v: tuple(v))

    def h(lam):
        pt = oracle(lam)
        return pt.upper + float(lam @ rho)

    vals = [h(v) for v in grid]
    k = int(np.argmin(vals))
    dual, lam = vals[k], grid[k]
    if cost.dim == 1 and len(grid) > 1:
        from scipy.optimize import minimize_scalar

        lo = grid[max(k - 1, 0)][0]
        hi = grid[min(k + 1, len(grid) - 1)][0]
        if hi > lo:
            res = minimize_scalar(lambda t: h(np.array([t])), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-9 * max(1.0, hi)})
            if res.fun < dual:
                dual, lam = float(res.fun), np.array([res.x])
    return DualityGapCertificate(primal=float(primal), dual=float(dual), gap=float(dual - primal),
                                 lam=np.asarray(lam, float), boundary=bool(boundary))
