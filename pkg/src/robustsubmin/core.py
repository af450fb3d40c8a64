"""Monotone submodular set functions and the bounds built from them.

Every function lives on the ground set ``{0, ..., n-1}``. Sets can be passed
as any iterable of element indices or as a boolean mask of length ``n``.
Objects are immutable after construction; the cached singleton gains
``f(j | {})`` and top gains ``f(j | V - j)`` are computed once on first use.
"""

from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SetLike = Iterable[int] | np.ndarray

LOWER = "lower-subgradient"
UPPER_1 = "upper-1"
UPPER_2 = "upper-2"
UPPER_EMPTY = "upper-empty"


class NotApplicableError(ValueError):
    """Raised when an operation is undefined for the given function."""


class DegenerateCurvatureWarning(UserWarning):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def as_mask(S: SetLike, n: int) -> np.ndarray:
    """Convert a set (iterable of indices or boolean mask) to a boolean mask."""
    if isinstance(S, np.ndarray) and S.dtype == bool:
        if S.shape != (n,):
            raise ValueError(f"mask has shape {S.shape}, expected ({n},)")
        return S
    idx = np.fromiter((int(j) for j in S), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"set element out of range for ground set of size {n}")
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask


def as_set(mask: np.ndarray) -> frozenset[int]:
    return frozenset(int(j) for j in np.flatnonzero(mask))


@dataclass(frozen=True)
class GroundSet:
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ground set must be nonempty")
        if self.labels is not None:
            if len(self.labels) != self.size or len(set(self.labels)) != self.size:
                raise ValueError("labels must be unique and match the ground set size")

    def index(self, label: str) -> int:
        if self.labels is None:
            raise KeyError(label)
        return self.labels.index(label)


class SetFunction(ABC):
    """Base class. Subclasses implement ``_value`` on a boolean mask.

    The vectorised helpers (`gains_add`, `gains_remove`, `chain_values`) have
    generic fallbacks and are overridden where a closed form is cheap.
    """

    n: int

    @abstractmethod
    def _value(self, mask: np.ndarray) -> float: ...

    def __call__(self, S: SetLike) -> float:
        return self._value(as_mask(S, self.n))

    def gain(self, j: int, S: SetLike) -> float:
        """Marginal gain ``f(j | S) = f(S + j) - f(S)``; requires ``j`` not in ``S``."""
        mask = as_mask(S, self.n)
        if not 0 <= j < self.n:
            raise IndexError(j)
        if mask[j]:
            raise ValueError(f"element {j} already in S")
        plus = mask.copy()
        plus[j] = True
        return self._value(plus) - self._value(mask)

    def gains_add(self, mask: np.ndarray) -> np.ndarray:
        """``f(j | X)`` for every ``j`` outside ``X``; zero on ``X``."""
        mask = mask.copy()
        base = self._value(mask)
        out = np.zeros(self.n)
        for j in np.flatnonzero(~mask):
            mask[j] = True
            out[j] = self._value(mask) - base
            mask[j] = False
        return out

    def gains_remove(self, mask: np.ndarray) -> np.ndarray:
        """``f(j | X - j)`` for every ``j`` in ``X``; zero outside ``X``."""
        mask = mask.copy()
        base = self._value(mask)
        out = np.zeros(self.n)
        for j in np.flatnonzero(mask):
            mask[j] = False
            out[j] = base - self._value(mask)
            mask[j] = True
        return out

    def chain_values(self, order: Sequence[int]) -> np.ndarray:
        """Values ``f(S_0), ..., f(S_n)`` along the chain induced by ``order``."""
        mask = np.zeros(self.n, dtype=bool)
        vals = [self._value(mask)]
        for j in order:
            mask[j] = True
            vals.append(self._value(mask))
        return np.array(vals)

    @cached_property
    def empty_value(self) -> float:
        return self._value(np.zeros(self.n, dtype=bool))

    @cached_property
    def singleton_gains(self) -> np.ndarray:
        return _frozen(self.gains_add(np.zeros(self.n, dtype=bool)))

    @cached_property
    def top_gains(self) -> np.ndarray:
        return _frozen(self.gains_remove(np.ones(self.n, dtype=bool)))


@dataclass(frozen=True, eq=False)
class ModularFunction(SetFunction):
    weights: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite vector")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def n(self) -> int:
        return self.weights.size

    def _value(self, mask):
        return self.constant + float(self.weights[mask].sum())

    def gains_add(self, mask):
        return np.where(mask, 0.0, self.weights)

    def gains_remove(self, mask):
        return np.where(mask, self.weights, 0.0)

    def chain_values(self, order):
        w = self.weights[np.asarray(order, dtype=np.int64)]
        return self.constant + np.concatenate(([0.0], np.cumsum(w)))


@dataclass(frozen=True, eq=False)
class ConcaveOverModular(SetFunction):
    """``f(X) = sum_i w(X & C_i) ** p`` over a partition or cover ``C_1..C_k``."""

    clusters: tuple[tuple[int, ...], ...]
    weights: np.ndarray
    exponent: float = 0.5

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite nonnegative vector")
        if not 0 < self.exponent <= 1:
            raise ValueError("exponent must lie in (0, 1]")
        clusters = tuple(tuple(sorted(set(int(j) for j in c))) for c in self.clusters)
        A = np.zeros((len(clusters), w.size))
        for i, c in enumerate(clusters):
            if c and (c[0] < 0 or c[-1] >= w.size):
                raise IndexError(f"cluster {i} has elements outside the ground set")
            A[i, list(c)] = 1.0
        A.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "exponent", float(self.exponent))
        object.__setattr__(self, "_membership", A)

    @property
    def n(self) -> int:
        return self.weights.size

    def _sums(self, mask):
        return self._membership @ np.where(mask, self.weights, 0.0)

    def _value(self, mask):
        return float(np.sum(self._sums(mask) ** self.exponent))

    def gains_add(self, mask):
        p = self.exponent
        s = self._sums(mask)[:, None]
        delta = (s + self.weights[None, :]) ** p - s**p
        return np.where(mask, 0.0, (self._membership * delta).sum(axis=0))

    def gains_remove(self, mask):
        p = self.exponent
        s = self._sums(mask)[:, None]
        delta = s**p - np.clip(s - self.weights[None, :], 0.0, None) ** p
        return np.where(mask, (self._membership * delta).sum(axis=0), 0.0)

    def chain_values(self, order):
        order = np.asarray(order, dtype=np.int64)
        prefix = np.cumsum(self._membership[:, order] * self.weights[order], axis=1)
        vals = (np.clip(prefix, 0.0, None) ** self.exponent).sum(axis=0)
        return np.concatenate(([0.0], vals))


@dataclass(frozen=True, eq=False)
class SqrtModular(SetFunction):
    """``f(X) = sqrt(w(X))`` for a nonnegative weight vector ``w``."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite nonnegative vector")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    def _value(self, mask):
        return math.sqrt(float(self.weights[mask].sum()))

    def gains_add(self, mask):
        s = float(self.weights[mask].sum())
        return np.where(mask, 0.0, np.sqrt(s + self.weights) - math.sqrt(s))

    def gains_remove(self, mask):
        s = float(self.weights[mask].sum())
        return np.where(mask, math.sqrt(s) - np.sqrt(np.clip(s - self.weights, 0.0, None)), 0.0)

    def chain_values(self, order):
        w = self.weights[np.asarray(order, dtype=np.int64)]
        return np.sqrt(np.concatenate(([0.0], np.cumsum(w))))


@dataclass(frozen=True, eq=False)
class ScaledSum(SetFunction):
    """Linear combination ``sum_i a_i f_i`` of set functions on one ground set."""

    terms: tuple[tuple[float, SetFunction], ...]

    def __post_init__(self):
        terms = tuple((float(a), f) for a, f in self.terms)
        if not terms:
            raise ValueError("ScaledSum needs at least one term")
        if len({f.n for _, f in terms}) != 1:
            raise ValueError("all terms must share one ground set")
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    def _value(self, mask):
        return sum(a * f._value(mask) for a, f in self.terms)

    def gains_add(self, mask):
        return sum(a * f.gains_add(mask) for a, f in self.terms)

    def gains_remove(self, mask):
        return sum(a * f.gains_remove(mask) for a, f in self.terms)

    def chain_values(self, order):
        return sum(a * f.chain_values(order) for a, f in self.terms)


def average(functions: Sequence[SetFunction]) -> ScaledSum:
    l = len(functions)
    return ScaledSum(tuple((1.0 / l, f) for f in functions))


@dataclass(frozen=True, eq=False)
class RobustObjective:
    """Pointwise maximum of ``l`` set functions."""

    functions: tuple[SetFunction, ...]

    def __post_init__(self):
        fs = tuple(self.functions)
        if not fs:
            raise ValueError("need at least one function")
        if len({f.n for f in fs}) != 1:
            raise ValueError("all functions must share one ground set")
        object.__setattr__(self, "functions", fs)

    @property
    def n(self) -> int:
        return self.functions[0].n

    @property
    def l(self) -> int:
        return len(self.functions)

    def values(self, S: SetLike) -> np.ndarray:
        mask = as_mask(S, self.n)
        return np.array([f._value(mask) for f in self.functions])

    def worst(self, S: SetLike) -> tuple[int, float]:
        """Index and value of the worst function on ``S`` (ties go to the lowest index)."""
        vals = self.values(S)
        i = int(np.argmax(vals))
        return i, float(vals[i])

    def __call__(self, S: SetLike) -> float:
        return float(self.values(S).max())


@dataclass(frozen=True, eq=False)
class ModularBound:
    surrogate: ModularFunction
    anchor: frozenset[int]
    kind: str = field(default=LOWER)

    def __call__(self, S: SetLike) -> float:
        return self.surrogate(S)


def curvature(f: SetFunction) -> float:
    """Total curvature ``1 - min_j f(j | V-j) / f(j)``, clipped to [0, 1].

    If some singleton gain vanishes the ratio is undefined; the conservative
    value 1 is returned and a `DegenerateCurvatureWarning` is emitted.
    """
    single = f.singleton_gains
    if np.any(single <= 0):
        warnings.warn(
            "curvature undefined: some element has zero singleton gain; using 1",
            DegenerateCurvatureWarning,
            stacklevel=2,
        )
        return 1.0
    kappa = 1.0 - float(np.min(f.top_gains / single))
    return min(1.0, max(0.0, kappa))


def kappa_factor(v: float, kappa: float) -> float:
    """``K(v, kappa) = v / (1 + (1 - kappa)(v - 1))``."""
    if v < 1:
        raise ValueError("K(v, kappa) requires v >= 1")
    if not 0 <= kappa <= 1:
        raise ValueError("kappa must lie in [0, 1]")
    return v / (1.0 + (1.0 - kappa) * (v - 1.0))


def greedy_order(x: np.ndarray) -> np.ndarray:
    """Descending order of ``x``; ties broken by ascending element index."""
    x = np.asarray(x, dtype=float)
    return np.lexsort((np.arange(x.size), -x))


def extreme_point(f: SetFunction, order: Sequence[int]) -> np.ndarray:
    """Greedy vector ``h[order[i]] = f(order[i] | S_{i-1})``."""
    order = np.asarray(order, dtype=np.int64)
    h = np.empty(f.n)
    h[order] = np.diff(f.chain_values(order))
    return h


def lovasz(f: SetFunction, x) -> tuple[float, np.ndarray]:
    """Lovász extension value and subgradient at ``x``.

    Assumes ``f`` is normalised (``f(empty) = 0``); otherwise the value is
    off from ``f`` on indicator vectors by exactly ``f(empty)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({f.n},)")
    h = extreme_point(f, greedy_order(x))
    return float(h @ x), h


def modular_lower_bound(f: SetFunction, Y: SetLike) -> ModularBound:
    """Subgradient bound ``f(empty) + h_Y(X) <= f(X)``, tight at ``Y``."""
    mask = as_mask(Y, f.n)
    idx = np.arange(f.n)
    order = np.concatenate((idx[mask], idx[~mask]))
    h = extreme_point(f, order)
    return ModularBound(ModularFunction(h, f.empty_value), as_set(mask), LOWER)


def modular_upper_bound(f: SetFunction, X: SetLike, variant: int = 1) -> ModularBound:
    """Supergradient bound ``m^f_{X,variant}`` stored in affine form.

    variant 1: weights ``f(j | X-j)`` on X and ``f(j | {})`` off X.
    variant 2: weights ``f(j | V-j)`` on X and ``f(j | X)`` off X.
    The constant is ``f(X)`` minus the weights summed over X.
    """
    mask = as_mask(X, f.n).copy()
    fx = f._value(mask)
    if variant == 1:
        w = np.where(mask, f.gains_remove(mask), f.singleton_gains)
    elif variant == 2:
        w = np.where(mask, f.top_gains, f.gains_add(mask))
    else:
        raise ValueError("variant must be 1 or 2")
    const = fx - float(w[mask].sum())
    kind = UPPER_EMPTY if not mask.any() else (UPPER_1 if variant == 1 else UPPER_2)
    return ModularBound(ModularFunction(w, const), as_set(mask), kind)


def curve_normalized(f: SetFunction) -> ScaledSum:
    """``f^kappa(X) = [f(X) - (1 - kappa) sum_{j in X} f(j)] / kappa``."""
    kappa = curvature(f)
    if kappa <= 1e-12:
        raise NotApplicableError("curve normalisation undefined for modular functions")
    single = ModularFunction(f.singleton_gains)
    return ScaledSum(((1.0 / kappa, f), (-(1.0 - kappa) / kappa, single)))


EXACT_SQRT = "exact-sqrt"
GAIN_SQUARED = "gain-squared"
USER_WEIGHTS = "user-weights"
PROVIDERS = (EXACT_SQRT, GAIN_SQUARED, USER_WEIGHTS)


def ea_weights(f: SetFunction, provider: str, weights=None) -> np.ndarray:
    """Weights ``w`` with ``sqrt(w(X)) <= f(X) - f(empty)`` from a provider."""
    if provider == EXACT_SQRT:
        if not isinstance(f, SqrtModular):
            raise ValueError("exact-sqrt provider needs a SqrtModular function")
        return np.array(f.weights)
    if provider == GAIN_SQUARED:
        return np.clip(f.top_gains, 0.0, None) ** 2
    if provider == USER_WEIGHTS:
        if weights is None:
            raise ValueError("user-weights provider needs a weight vector")
        w = np.asarray(weights, dtype=float)
        if w.shape != (f.n,) or np.any(w < 0):
            raise ValueError("user weights must be a nonnegative vector of length n")
        return w
    raise ValueError(f"unknown provider {provider!r}")


def default_provider(f: SetFunction) -> str:
    return EXACT_SQRT if isinstance(f, SqrtModular) else GAIN_SQUARED


def ea_surrogate(
    f: SetFunction, provider: str | None = None, weights=None
) -> tuple[SqrtModular, SetFunction]:
    """Ellipsoidal-style surrogates of ``f``.

    Returns ``(lower, combined)`` where ``lower = sqrt(w(X))`` with provider
    weights for ``f`` and ``combined`` is the curvature-mixed form
    ``kappa * sqrt(w'(X)) + (1 - kappa) * sum_{j in X} f(j)`` with ``w'``
    taken from ``f^kappa``. ``f^kappa`` is never a square root of a modular
    function unless ``kappa = 1``, so exact-sqrt falls back to gain-squared
    for ``w'`` in that case.
    """
    provider = provider or default_provider(f)
    lower = SqrtModular(ea_weights(f, provider, weights))
    kappa = curvature(f)
    single = ModularFunction(f.singleton_gains)
    if kappa <= 1e-12:
        return lower, single
    if provider == EXACT_SQRT and kappa >= 1 - 1e-12:
        inner = lower.weights
    elif provider == USER_WEIGHTS:
        inner = lower.weights
    else:
        inner = ea_weights(curve_normalized(f), GAIN_SQUARED)
    combined = ScaledSum(((kappa, SqrtModular(inner)), (1.0 - kappa, single)))
    return lower, combined
