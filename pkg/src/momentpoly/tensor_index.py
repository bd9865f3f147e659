"""Compact storage of symmetric tensors indexed by monomials.

A symmetric tensor of order ``k`` in ``d`` dimensions is stored as one value
per canonical index vector ``(mu_1 <= ... <= mu_k)``, 1-based entries, in
lexical order.  Each canonical index is equivalent to a monomial exponent
vector ``(m_1, ..., m_d)`` where ``m_i`` counts how often ``i`` occurs.

A :class:`Basis` strings the orders ``0..N`` together (order-major, lexical
within an order).  Moment sets, system rows/columns and model coefficients
all share that layout.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CountOverflowError, InvalidIndexError

INT64_MAX = 2**63 - 1


def _checked(value: int) -> int:
    if value > INT64_MAX:
        raise CountOverflowError(f"count {value} exceeds the 64-bit range")
    return value


def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0 or k < 0 or k > n:
        return 0
    return _checked(math.comb(n, k))


def num_free_components(d: int, k: int) -> int:
    """Number of free components of an order-``k`` symmetric tensor in ``d`` dims."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return binom(k + d - 1, k)


def basis_size(d: int, max_order: int) -> int:
    """Number of monomials of total order ``0..max_order`` in ``d`` variables."""
    if d < 1 or max_order < 0:
        raise ValueError(f"need d >= 1 and max_order >= 0, got d={d}, max_order={max_order}")
    # hockey stick: sum_k C(k+d-1, k) = C(N+d, N)
    return binom(max_order + d, max_order)


def _check_canonical(idx: Sequence[int], d: int) -> tuple[int, ...]:
    if d < 1:
        raise InvalidIndexError(f"dimension must be >= 1, got {d}")
    idx = tuple(int(v) for v in idx)
    for i, v in enumerate(idx):
        if not 1 <= v <= d:
            raise InvalidIndexError(f"entry {v} of {idx} outside 1..{d}")
        if i and v < idx[i - 1]:
            raise InvalidIndexError(f"index {idx} is not non-decreasing")
    return idx


def position_of(idx: Sequence[int], d: int) -> int:
    """1-based lexical position of a canonical index vector among all of its order.

    pos(mu) = C(k+d-1, k) - sum_i C((k-i+1) + (d-mu_i) - 1, k-i+1)
    """
    idx = _check_canonical(idx, d)
    k = len(idx)
    pos = binom(k + d - 1, k)
    for i, mu in enumerate(idx, start=1):
        r = k - i + 1
        pos -= binom(r + (d - mu) - 1, r)
    return pos


def index_at(position: int, d: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`position_of`."""
    total = num_free_components(d, k)
    if not 1 <= position <= total:
        raise IndexError(f"position {position} outside 1..{total} for d={d}, k={k}")
    p = position
    idx = []
    v = 1
    for r in range(k, 0, -1):
        # completions of the remaining r-1 slots with values >= v
        while True:
            block = num_free_components(d - v + 1, r - 1)
            if p <= block:
                break
            p -= block
            v += 1
        idx.append(v)
    return tuple(idx)


def monomial_of(idx: Sequence[int], d: int) -> tuple[int, ...]:
    idx = _check_canonical(idx, d)
    m = [0] * d
    for v in idx:
        m[v - 1] += 1
    return tuple(m)


def index_of(m: Sequence[int]) -> tuple[int, ...]:
    """Canonical index vector of a monomial exponent vector."""
    if any(e < 0 for e in m):
        raise InvalidIndexError(f"negative exponent in {tuple(m)}")
    return tuple(v for v, e in enumerate(m, start=1) for _ in range(int(e)))


def multiplicity(m: Sequence[int]) -> int:
    """Multinomial coefficient n! / (m_1! ... m_d!) with n = sum(m)."""
    if any(e < 0 for e in m):
        raise InvalidIndexError(f"negative exponent in {tuple(m)}")
    out = 1
    n = 0
    for e in m:
        n += int(e)
        out = _checked(out * math.comb(n, int(e)))
    return out


def enumerate_indices(d: int, k: int) -> list[tuple[int, ...]]:
    """All canonical order-``k`` index vectors in ``d`` dims, lexical order."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return list(itertools.combinations_with_replacement(range(1, d + 1), k))


@lru_cache(maxsize=64)
def _binom_table(n_max: int) -> np.ndarray:
    table = np.zeros((n_max + 1, n_max + 1), dtype=np.int64)
    for n in range(n_max + 1):
        for k in range(n + 1):
            table[n, k] = binom(n, k)
    table.setflags(write=False)
    return table


def monomial_positions(exponents: np.ndarray) -> np.ndarray:
    """Vectorized :func:`position_of` over an array of exponent vectors.

    ``exponents`` has shape ``(..., d)``; the result (1-based, int64) has the
    leading shape.  The per-entry sum of the position formula is grouped by
    variable, each run collapsed with the hockey-stick identity
    sum_{r=a..b} C(r+c, r) = C(b+c+1, b) - C(a+c, a-1).
    """
    exps = np.asarray(exponents, dtype=np.int64)
    if exps.ndim < 1:
        raise InvalidIndexError("exponents need a trailing dimension axis")
    if np.any(exps < 0):
        raise InvalidIndexError("negative exponent")
    d = exps.shape[-1]
    k = exps.sum(axis=-1)
    table = _binom_table(int(k.max(initial=0)) + d)
    pos = table[k + d - 1, k]
    remaining = k.copy()
    for v in range(1, d):
        c = d - v - 1
        mv = exps[..., v - 1]
        b = remaining
        a = b - mv + 1
        pos = pos - (table[b + c + 1, b] - table[a + c, a - 1])
        remaining = remaining - mv
    return pos


def order_offset(d: int, k: int) -> int:
    """Number of monomials of order strictly below ``k``."""
    return binom(k + d - 1, d)


def global_positions(exponents: np.ndarray) -> np.ndarray:
    """0-based position of each exponent vector in the order-major basis."""
    exps = np.asarray(exponents, dtype=np.int64)
    d = exps.shape[-1]
    k = exps.sum(axis=-1)
    table = _binom_table(int(k.max(initial=0)) + d)
    return table[k + d - 1, d] + monomial_positions(exps) - 1


class Basis:
    """All monomials of order ``0..max_order`` in ``d`` variables.

    Attributes
    ----------
    exponents : (M, d) int array, order-major and lexical within each order.
    orders : (M,) total order of each monomial.
    parent : (M,) global position of the monomial with the last index entry
        dropped (-1 for the constant).
    last_var : (M,) 0-based variable that extends ``parent`` (-1 for the constant).
    """

    def __init__(self, d: int, max_order: int):
        self.dim = d
        self.max_order = max_order
        self.size = basis_size(d, max_order)
        rows = []
        for k in range(max_order + 1):
            rows.extend(monomial_of(idx, d) for idx in enumerate_indices(d, k))
        self.exponents = np.array(rows, dtype=np.int64).reshape(self.size, d)
        self.orders = self.exponents.sum(axis=1)
        self.slices = [
            slice(order_offset(d, k), order_offset(d, k + 1)) for k in range(max_order + 1)
        ]
        parent = np.full(self.size, -1, dtype=np.int64)
        last_var = np.full(self.size, -1, dtype=np.int64)
        if self.size > 1:
            exps = self.exponents[1:]
            # canonical index is sorted, so its last entry is the highest used variable
            last = d - 1 - np.argmax(exps[:, ::-1] > 0, axis=1)
            reduced = exps.copy()
            reduced[np.arange(len(exps)), last] -= 1
            parent[1:] = global_positions(reduced)
            last_var[1:] = last
        self.parent = parent
        self.last_var = last_var
        for arr in (self.exponents, self.orders, self.parent, self.last_var):
            arr.setflags(write=False)

    def __repr__(self):
        return f"Basis(d={self.dim}, max_order={self.max_order}, size={self.size})"

    def truncated(self, max_order: int) -> int:
        """Number of leading basis entries with order <= ``max_order``."""
        return basis_size(self.dim, max_order)

    def powers(self, z: np.ndarray, max_order: int | None = None) -> np.ndarray:
        """Monomial values for each row of ``z``: shape (n, M).

        Each order is obtained from the previous one by one multiplication
        per monomial, never by independent ``pow`` calls.
        """
        z = np.asarray(z, dtype=float)
        if z.ndim != 2 or z.shape[1] != self.dim:
            raise ValueError(f"expected shape (n, {self.dim}), got {z.shape}")
        top = self.max_order if max_order is None else max_order
        size = basis_size(self.dim, top)
        out = np.empty((z.shape[0], size))
        out[:, 0] = 1.0
        for k in range(1, top + 1):
            sl = self.slices[k]
            out[:, sl] = out[:, self.parent[sl]] * z[:, self.last_var[sl]]
        return out


@lru_cache(maxsize=32)
def get_basis(d: int, max_order: int) -> Basis:
    return Basis(d, max_order)
