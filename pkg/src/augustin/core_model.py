"""Finite-alphabet probability objects, channels and cost functions.

Everything here is immutable after construction.  Weights are stored on
the linear scale as read-only numpy arrays; log-space arithmetic is
confined to the divergence kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

INGEST_TOL = 1e-9
NORM_TOL = 1e-12
NEAR_ONE = 1e-12


class ValidationError(ValueError):
    """Raised when an object violates its construction contract."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _labels(labels: Sequence | None, n: int, what: str) -> tuple:
    if labels is None:
        return tuple(range(n))
    labels = tuple(labels)
    if len(labels) != n:
        raise ValidationError(f"{what}: expected {n} labels, got {len(labels)}")
    if len(set(labels)) != n:
        raise ValidationError(f"{what}: labels must be distinct")
    return labels


def _clean_simplex(w: np.ndarray, what: str, log: list[str] | None) -> np.ndarray:
    """Validate a weight vector against the ingestion tolerance and renormalize it."""
    if not np.all(np.isfinite(w)):
        raise ValidationError(f"{what}: non-finite weight")
    if np.any(w < -INGEST_TOL):
        raise ValidationError(f"{what}: negative weight {w.min():.3g}")
    w = np.where(w < 0, 0.0, w)
    s = w.sum()
    if s <= 0:
        raise ValidationError(f"{what}: empty support")
    if abs(s - 1.0) > INGEST_TOL:
        raise ValidationError(f"{what}: weights sum to {s!r}, not 1")
    if s != 1.0:
        w = w / s
        if log is not None:
            log.append(f"{what}: renormalized (sum was {s!r})")
    return w


# ---------------------------------------------------------------------------
# orders


@dataclass(frozen=True)
class Order:
    """A positive order with an explicit flag for the exact-one branch.

    ``Order(1.0)`` sets the flag.  Orders within ``1e-12`` of one but not equal
    to it are rejected because the ``1/(alpha-1)`` factor would amplify
    rounding error.
    """

    alpha: float
    exact_one: bool = field(default=False)

    def __post_init__(self):
        a = float(self.alpha)
        if not (a > 0 and math.isfinite(a)):
            raise ValidationError(f"order must be a positive finite real, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)
        if self.exact_one:
            if a != 1.0:
                raise ValidationError("exact_one flag set on an order other than 1")
            return
        if a == 1.0:
            object.__setattr__(self, "exact_one", True)
        elif abs(a - 1.0) < NEAR_ONE:
            raise ValidationError(
                f"order {a!r} is within {NEAR_ONE} of 1; pass exactly 1 for the order-one branch"
            )

    def __float__(self) -> float:
        return self.alpha

    @property
    def min1(self) -> float:
        """``min(alpha, 1)``."""
        return min(self.alpha, 1.0)

    @property
    def max1(self) -> float:
        """``max(alpha, 1)``."""
        return max(self.alpha, 1.0)


def as_order(alpha: Order | float) -> Order:
    return alpha if isinstance(alpha, Order) else Order(alpha)


# ---------------------------------------------------------------------------
# measures


class Measure:
    """Nonnegative finite measure on an ordered finite index set."""

    __slots__ = ("_w", "labels")

    def __init__(self, weights: Iterable[float], labels: Sequence | None = None):
        w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("measure weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("measure weights must be finite and nonnegative")
        self._w = _frozen(w)
        self.labels = _labels(labels, w.size, "measure")

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def mass(self) -> float:
        return float(self._w.sum())

    def __len__(self) -> int:
        return self._w.size

    def __array__(self, dtype=None, copy=None):
        return self._w if dtype is None else self._w.astype(dtype)

    def normalize(self) -> "Prob":
        m = self.mass
        if m <= 0:
            raise ValidationError("cannot normalize a zero measure")
        return Prob(self._w / m, self.labels, _trusted=True)

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self._w, precision=6)})"


class Prob(Measure):
    """Probability mass function on an ordered finite index set."""

    __slots__ = ("diagnostics",)

    def __init__(self, weights: Iterable[float], labels: Sequence | None = None, *, _trusted: bool = False):
        super().__init__(weights, labels)
        self.diagnostics: tuple[str, ...] = ()
        if _trusted:
            w = self._w / self._w.sum()
        else:
            log: list[str] = []
            w = _clean_simplex(np.array(self._w), "probability", log)
            self.diagnostics = tuple(log)
        self._w = _frozen(w)

    @classmethod
    def uniform(cls, n: int, labels: Sequence | None = None) -> "Prob":
        return cls(np.full(n, 1.0 / n), labels, _trusted=True)

    @classmethod
    def point(cls, n: int, i: int, labels: Sequence | None = None) -> "Prob":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w, labels, _trusted=True)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self._w > 0)


def weights_of(x: Measure | Sequence[float] | np.ndarray) -> np.ndarray:
    """Return the weight vector of a measure or array-like."""
    if isinstance(x, Measure):
        return x.weights
    return np.asarray(x, dtype=float)


def as_prob(x: Prob | Sequence[float] | np.ndarray, labels: Sequence | None = None) -> Prob:
    if isinstance(x, Prob):
        return x
    return Prob(np.asarray(x, dtype=float), labels)


# ---------------------------------------------------------------------------
# channels


class Channel:
    """Row-stochastic transition table ``W[x, y]``."""

    __slots__ = ("_rows", "inputs", "outputs", "diagnostics", "_logs")

    def __init__(self, rows, inputs: Sequence | None = None, outputs: Sequence | None = None):
        r = np.array(rows, dtype=float)
        if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
            raise ValidationError("channel rows must form a nonempty |X| x |Y| table")
        log: list[str] = []
        for i in range(r.shape[0]):
            r[i] = _clean_simplex(r[i], f"row {i}", log)
        self._rows = _frozen(r)
        self.inputs = _labels(inputs, r.shape[0], "inputs")
        self.outputs = _labels(outputs, r.shape[1], "outputs")
        self.diagnostics = tuple(log)
        self._logs = None

    @classmethod
    def _trusted(cls, rows: np.ndarray, inputs=None, outputs=None) -> "Channel":
        """Wrap rows already known to be stochastic (internal constructors)."""
        ch = cls.__new__(cls)
        r = np.array(rows, dtype=float)
        r /= r.sum(axis=1, keepdims=True)
        ch._rows = _frozen(r)
        ch.inputs = _labels(inputs, r.shape[0], "inputs")
        ch.outputs = _labels(outputs, r.shape[1], "outputs")
        ch.diagnostics = ()
        ch._logs = None
        return ch

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def log_rows(self) -> np.ndarray:
        """Natural log of the rows with ``-inf`` on zeros, cached."""
        if self._logs is None:
            with np.errstate(divide="ignore"):
                lg = np.log(self._rows)
            lg.setflags(write=False)
            self._logs = lg
        return self._logs

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows.shape

    @property
    def n_inputs(self) -> int:
        return self._rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self._rows.shape[1]

    def row(self, x: int) -> Prob:
        return Prob(self._rows[x], self.outputs, _trusted=True)

    def __repr__(self):
        return f"Channel({self.n_inputs}x{self.n_outputs})"


def bsc(delta: float) -> Channel:
    """Binary symmetric channel with crossover probability ``delta``."""
    if not 0 <= delta <= 1:
        raise ValidationError("crossover probability must lie in [0, 1]")
    return Channel([[1 - delta, delta], [delta, 1 - delta]])


def identity_channel(n: int) -> Channel:
    return Channel._trusted(np.eye(n))


def product_prob(parts: Sequence[Prob | np.ndarray]) -> Prob:
    """Tensor product of probability vectors, first factor varying slowest."""
    if len(parts) == 0:
        raise ValidationError("product of an empty list")
    out = np.ones(1)
    for p in parts:
        out = np.multiply.outer(out, weights_of(as_prob(p))).ravel()
    return Prob(out, _trusted=True)


def product_channel(parts: Sequence[Channel]) -> Channel:
    """Tensor product channel; input and output labels are tuples of part labels."""
    if len(parts) == 0:
        raise ValidationError("product of an empty list")
    if len(parts) == 1:
        return parts[0]
    rows = np.ones((1, 1))
    for ch in parts:
        rows = np.einsum("ab,cd->acbd", rows, ch.rows).reshape(rows.shape[0] * ch.n_inputs, -1)
    ins = [()]
    outs = [()]
    for ch in parts:
        ins = [a + (b,) for a in ins for b in ch.inputs]
        outs = [a + (b,) for a in outs for b in ch.outputs]
    return Channel._trusted(rows, ins, outs)


def total_variation(a: Prob | np.ndarray, b: Prob | np.ndarray) -> float:
    """Total variation ``sum |a - b|`` (the unnormalized convention, range [0, 2])."""
    wa, wb = weights_of(a), weights_of(b)
    if wa.shape != wb.shape:
        raise ValidationError("total variation between vectors on different index sets")
    return float(np.abs(wa - wb).sum())


def shannon_entropy(p: Prob | np.ndarray) -> float:
    """Shannon entropy in nats with ``0 ln 0 = 0``."""
    w = weights_of(p)
    w = w[w > 0]
    return float(-(w * np.log(w)).sum())


# ---------------------------------------------------------------------------
# costs


class CostSpec:
    """Per-input cost vectors ``c(x)`` in the nonnegative orthant of R^l."""

    __slots__ = ("_c",)

    def __init__(self, costs):
        c = np.array(costs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValidationError("costs must be an |X| x l table")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValidationError("costs must be finite and nonnegative")
        self._c = _frozen(c)

    @classmethod
    def zero(cls, n: int, dim: int = 1) -> "CostSpec":
        return cls(np.zeros((n, dim)))

    @property
    def costs(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.shape[1]

    @property
    def n_inputs(self) -> int:
        return self._c.shape[0]

    def check(self, channel: Channel) -> None:
        if self.n_inputs != channel.n_inputs:
            raise ValidationError(
                f"cost has {self.n_inputs} inputs but the channel has {channel.n_inputs}"
            )

    def expected(self, p: Prob | np.ndarray) -> np.ndarray:
        return weights_of(p) @ self._c

    def _rho(self, rho) -> np.ndarray:
        r = np.atleast_1d(np.asarray(rho, dtype=float))
        if r.shape != (self.dim,):
            raise ValidationError(f"cost constraint must have {self.dim} components")
        return r

    def slack(self, rho) -> float:
        """Largest ``t`` such that some mixture has ``E[c] <= rho - t`` componentwise.

        ``rho`` is feasible iff the slack is ``>= 0`` and interior iff it is ``> 0``.
        For one cost dimension this is ``rho - min c``; otherwise a small LP.
        """
        r = self._rho(rho)
        if self.dim == 1:
            return float(r[0] - self._c[:, 0].min())
        from scipy.optimize import linprog

        n, ell = self._c.shape
        # variables (P_1..P_n, t); maximize t s.t. c^T P + t <= rho, sum P = 1
        obj = np.zeros(n + 1)
        obj[-1] = -1.0
        a_ub = np.hstack([self._c.T, np.ones((ell, 1))])
        a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
        bounds = [(0, None)] * n + [(None, None)]
        res = linprog(obj, A_ub=a_ub, b_ub=r, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"feasibility LP failed: {res.message}")
        return float(-res.fun)

    def is_feasible(self, rho, tol: float = 1e-12) -> bool:
        return self.slack(rho) >= -tol

    def is_interior(self, rho, tol: float = 1e-12) -> bool:
        return self.slack(rho) > tol

    def __repr__(self):
        return f"CostSpec({self.n_inputs} inputs, dim={self.dim})"


def additive_cost(parts: Sequence[CostSpec]) -> CostSpec:
    """Cost of the product input ``(x_1, ..., x_n)`` as ``sum_t c_t(x_t)``."""
    if len(parts) == 0:
        raise ValidationError("product of an empty list")
    dim = parts[0].dim
    if any(p.dim != dim for p in parts):
        raise ValidationError("additive cost needs a common cost dimension")
    c = np.zeros((1, dim))
    for p in parts:
        c = (c[:, None, :] + p.costs[None, :, :]).reshape(-1, dim)
    return CostSpec(c)


def lam_vector(lam: Any, dim: int) -> np.ndarray:
    """Coerce a Lagrange multiplier to a nonnegative vector of length ``dim``."""
    v = np.atleast_1d(np.asarray(lam, dtype=float))
    if v.size == 1 and dim > 1:
        v = np.full(dim, float(v[0]))
    if v.shape != (dim,):
        raise ValidationError(f"multiplier must have {dim} components")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValidationError("multiplier must be finite and nonnegative")
    return v
