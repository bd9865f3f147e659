"""Streaming, mergeable accumulation of raw monomial moments.

Accumulators hold per-monomial weighted sums ``sum_e w_e * x_e^m`` over the
order-major basis of :mod:`momentpoly.tensor_index`.  Chunks are reduced with
a BLAS product and chunk totals are added with Neumaier compensation, so the
stored sum is ``sums + comp``.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySampleError, InputError, OrderError
from .tensor_index import Basis, basis_size, get_basis, global_positions

log = logging.getLogger(__name__)

THREADS_ENV = "MOMENTPOLY_THREADS"
# doubles per monomial-value block held in memory at once
_BLOCK_BUDGET = 4_000_000


def thread_cap() -> int:
    """Shard parallelism allowed by ``MOMENTPOLY_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _neumaier_add(total: np.ndarray, comp: np.ndarray, values: np.ndarray) -> None:
    t = total + values
    comp += np.where(np.abs(total) >= np.abs(values), (total - t) + values, (values - t) + total)
    total[...] = t


@dataclass
class MomentAccumulator:
    """Running weighted monomial sums for one sample.

    ``target_order`` enables a second set of sums weighted by a real target
    ``y`` (regression mode): ``sum_e w_e * y_e * x_e^m`` for ``|m| <= target_order``.
    """

    dim: int
    max_order: int
    target_order: int | None = None
    sums: np.ndarray = field(default=None, repr=False)
    comp: np.ndarray = field(default=None, repr=False)
    target_sums: np.ndarray | None = field(default=None, repr=False)
    target_comp: np.ndarray | None = field(default=None, repr=False)
    n_events: int = 0
    n_rejected: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.max_order < 0:
            raise InputError(f"need dim >= 1 and max_order >= 0, got {self.dim}, {self.max_order}")
        if self.target_order is not None and not 0 <= self.target_order <= self.max_order:
            raise InputError(f"target_order must lie in 0..{self.max_order}")
        size = basis_size(self.dim, self.max_order)
        if self.sums is None:
            self.sums = np.zeros(size)
            self.comp = np.zeros(size)
        if self.target_order is not None and self.target_sums is None:
            tsize = basis_size(self.dim, self.target_order)
            self.target_sums = np.zeros(tsize)
            self.target_comp = np.zeros(tsize)

    @property
    def basis(self) -> Basis:
        return get_basis(self.dim, self.max_order)

    @property
    def total_weight(self) -> float:
        return float(self.sums[0] + self.comp[0])

    def values(self) -> np.ndarray:
        return self.sums + self.comp

    def target_values(self) -> np.ndarray | None:
        if self.target_sums is None:
            return None
        return self.target_sums + self.target_comp

    def update(self, x, weights=None, target=None) -> "MomentAccumulator":
        """Add a batch of events (rows of ``x``) in place and return self."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise InputError(f"events must have shape (n, {self.dim}), got {x.shape}")
        n = x.shape[0]
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != n:
            raise InputError(f"{w.shape[0]} weights for {n} events")
        if np.any(w < 0):
            raise InputError("event weights must be non-negative")
        if self.target_order is not None:
            if target is None:
                raise InputError("accumulator tracks a target but none was given")
            y = np.asarray(target, dtype=float).reshape(-1)
            if y.shape[0] != n:
                raise InputError(f"{y.shape[0]} targets for {n} events")
        else:
            y = None

        ok = np.isfinite(x).all(axis=1) & np.isfinite(w)
        if y is not None:
            ok &= np.isfinite(y)
        rejected = int(n - ok.sum())
        if rejected:
            log.warning("rejected %d events with non-finite values", rejected)
            x, w = x[ok], w[ok]
            if y is not None:
                y = y[ok]
        self.n_rejected += rejected
        self.n_events += x.shape[0]

        basis = self.basis
        chunk = max(1, _BLOCK_BUDGET // basis.size)
        tsize = None if y is None else basis_size(self.dim, self.target_order)
        for start in range(0, x.shape[0], chunk):
            stop = start + chunk
            powers = basis.powers(x[start:stop])
            wc = w[start:stop]
            _neumaier_add(self.sums, self.comp, wc @ powers)
            if y is not None:
                _neumaier_add(self.target_sums, self.target_comp, (wc * y[start:stop]) @ powers[:, :tsize])
        return self

    def _check_compatible(self, other: "MomentAccumulator") -> None:
        if (self.dim, self.max_order, self.target_order) != (other.dim, other.max_order, other.target_order):
            raise InputError(
                "cannot merge accumulators with different shapes: "
                f"{(self.dim, self.max_order, self.target_order)} vs "
                f"{(other.dim, other.max_order, other.target_order)}"
            )

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Componentwise sum of two accumulators (new object)."""
        self._check_compatible(other)
        out = MomentAccumulator(self.dim, self.max_order, self.target_order)
        for src in (self, other):
            out.comp += src.comp
            _neumaier_add(out.sums, out.comp, src.sums)
            if out.target_sums is not None:
                out.target_comp += src.target_comp
                _neumaier_add(out.target_sums, out.target_comp, src.target_sums)
        out.n_events = self.n_events + other.n_events
        out.n_rejected = self.n_rejected + other.n_rejected
        return out

    def normalize(self) -> "MomentSet":
        W = self.total_weight
        if not W > 0:
            raise EmptySampleError("cannot normalize moments of a sample with zero total weight")
        values = self.values() / W
        values[0] = 1.0
        target = self.target_values()
        if target is not None:
            target = target / W
        return MomentSet(
            dim=self.dim,
            max_order=self.max_order,
            values=values,
            target=target,
            target_order=self.target_order,
            total_weight=W,
            n_events=self.n_events,
        )


def accumulate(x, max_order: int, weights=None, target=None, target_order: int | None = None,
               dim: int | None = None) -> MomentAccumulator:
    """Accumulate moments of a batch of events up to ``max_order``."""
    x = np.asarray(x, dtype=float)
    if dim is None:
        dim = 1 if x.ndim == 1 else x.shape[1]
    acc = MomentAccumulator(dim, max_order, target_order)
    return acc.update(x, weights, target)


def accumulate_stream(chunks, dim: int, max_order: int, target_order: int | None = None) -> MomentAccumulator:
    """Accumulate an iterable of ``(x, weights, target)`` tuples (weights/target may be None)."""
    acc = MomentAccumulator(dim, max_order, target_order)
    for x, w, y in chunks:
        acc.update(x, w, y)
    return acc


def accumulate_sharded(x, max_order: int, weights=None, target=None, target_order: int | None = None,
                       n_shards: int | None = None) -> MomentAccumulator:
    """Split events into contiguous shards, accumulate each, then merge."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n_shards = thread_cap() if n_shards is None else max(1, n_shards)
    bounds = np.linspace(0, x.shape[0], n_shards + 1).astype(int)

    def work(i):
        sl = slice(bounds[i], bounds[i + 1])
        return accumulate(
            x[sl], max_order,
            None if weights is None else np.asarray(weights)[sl],
            None if target is None else np.asarray(target)[sl],
            target_order, dim=x.shape[1],
        )

    if n_shards == 1:
        parts = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=n_shards) as pool:
            parts = list(pool.map(work, range(n_shards)))
    out = parts[0]
    for part in parts[1:]:
        out = out.merge(part)
    return out


@dataclass(frozen=True)
class MomentSet:
    """Normalized moments <x^m> over the order-major basis."""

    dim: int
    max_order: int
    values: np.ndarray = field(repr=False)
    target: np.ndarray | None = field(default=None, repr=False)
    target_order: int | None = None
    total_weight: float = 1.0
    n_events: int = 0

    @property
    def basis(self) -> Basis:
        return get_basis(self.dim, self.max_order)

    def component(self, m) -> float:
        """Moment at a single exponent vector."""
        m = np.asarray(m, dtype=np.int64)
        if m.shape != (self.dim,):
            raise InputError(f"exponent vector must have length {self.dim}")
        if m.sum() > self.max_order:
            raise OrderError(f"order {m.sum()} exceeds accumulated order {self.max_order}")
        return float(self.values[global_positions(m)])

    def upto(self, order: int) -> np.ndarray:
        if order > self.max_order:
            raise OrderError(f"need moments to order {order}, have {self.max_order}")
        return self.values[: basis_size(self.dim, order)]


@dataclass(frozen=True)
class CombinedMoments:
    """Sum moments ``g`` (orders 0..2N) and right-hand side moments ``h`` (orders 0..N)."""

    dim: int
    degree: int
    g: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.g.shape != (basis_size(self.dim, 2 * self.degree),):
            raise OrderError(f"g must cover orders 0..{2 * self.degree}")
        if self.h.shape != (basis_size(self.dim, self.degree),):
            raise OrderError(f"h must cover orders 0..{self.degree}")


def combine_binary(signal: MomentSet, background: MomentSet, degree: int,
                   priors: tuple[float, float] = (1.0, 1.0)) -> CombinedMoments:
    """g = pi_s <x^m>_s + pi_b <x^m>_b,  h = pi_s <x^m>_s - pi_b <x^m>_b."""
    if signal.dim != background.dim:
        raise InputError(f"dimension mismatch: {signal.dim} vs {background.dim}")
    if degree < 0:
        raise InputError("degree must be >= 0")
    ps, pb = priors
    if ps < 0 or pb < 0:
        raise InputError("class priors must be non-negative")
    s2, b2 = signal.upto(2 * degree), background.upto(2 * degree)
    g = ps * s2 + pb * b2
    n_h = basis_size(signal.dim, degree)
    h = ps * s2[:n_h] - pb * b2[:n_h]
    return CombinedMoments(signal.dim, degree, g, h)


def combine_regression(sample: MomentSet, degree: int) -> CombinedMoments:
    """g = <x^m>,  h = <y x^m>."""
    if sample.target is None:
        raise InputError("sample carries no target moments")
    if sample.target_order is None or sample.target_order < degree:
        raise OrderError(f"target moments reach order {sample.target_order}, need {degree}")
    g = sample.upto(2 * degree)
    h = sample.target[: basis_size(sample.dim, degree)]
    return CombinedMoments(sample.dim, degree, g.copy(), h.copy())
