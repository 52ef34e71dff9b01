"""The countable candidate class: quantized factors and their code lengths.

Each factor entry is either zero or one of ``L_lev`` uniformly spaced levels
``c * (2k / (L_lev - 1) - 1)``, ``k = 0 .. L_lev-1``, spanning ``[-c, c]``
with both endpoints included.

A factor with ``N`` slots is encoded as a header carrying its nonzero count
(``ceil(log2(N + 1))`` bits) followed, for each nonzero, by its location
(``log2 L_loc`` bits) and amplitude (``log2 L_lev`` bits). Without the count
header the per-nonzero codes are not uniquely decodable and the Kraft sum
exceeds one; ``count_header=False`` keeps that bare form for comparison.
The header is the same for every candidate of a given shape, so it never
changes which candidate minimizes the penalized likelihood.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .model import MAX_NORM_SLACK, as_matrix, exceeds, max_norm, product

DEFAULT_CAP = 10**6


class ClassTooLarge(ValueError):
    """The candidate class exceeds the enumeration cap."""


def _ceil_log2(x: float) -> int:
    # guard so that exact powers of two are not bumped up by round-off
    return math.ceil(math.log2(x) - 1e-12)


def levels(n1: int, n2: int, beta: float) -> int:
    """Number of amplitude levels, ``2 ** ceil(log2(max(n1, n2) ** beta))``."""
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    return 2 ** max(math.ceil(beta * math.log2(max(n1, n2)) - 1e-12), 0)


def location_levels(slots: int) -> int:
    """``2 ** ceil(log2(slots))``: code-space size for one entry location."""
    if slots < 1:
        raise ValueError("a factor needs at least one slot")
    return 2 ** _ceil_log2(slots)


def count_header_bits(slots: int) -> int:
    return _ceil_log2(slots + 1)


def level_values(c: float, l_lev: int) -> np.ndarray:
    if l_lev < 2:
        raise ValueError("need at least two levels")
    k = np.arange(l_lev)
    return c * (2.0 * k / (l_lev - 1) - 1.0)


@dataclass(frozen=True)
class DiscretizationScheme:
    """Level and location code sizes for a (r1 x r, r x r2) factor pair."""

    l_lev: int
    r1: int
    r: int
    r2: int
    q_max: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if self.l_lev < 2 or self.l_lev & (self.l_lev - 1):
            raise ValueError(f"l_lev must be a power of two >= 2, got {self.l_lev}")

    @classmethod
    def from_problem(cls, n1, n2, r1, r, r2, beta, q_max=1.0) -> "DiscretizationScheme":
        return cls(levels(n1, n2, beta), r1, r, r2, q_max=q_max, beta=beta)

    @property
    def l_loc_p(self) -> int:
        return location_levels(self.r1 * self.r)

    @property
    def l_loc_q(self) -> int:
        return location_levels(self.r * self.r2)

    @property
    def bits_per_nonzero_p(self) -> float:
        return math.log2(self.l_loc_p * self.l_lev)

    @property
    def bits_per_nonzero_q(self) -> float:
        return math.log2(self.l_loc_q * self.l_lev)

    @property
    def header_bits(self) -> int:
        return count_header_bits(self.r1 * self.r) + count_header_bits(self.r * self.r2)

    def p_values(self) -> np.ndarray:
        return level_values(1.0, self.l_lev)

    def q_values(self) -> np.ndarray:
        return level_values(self.q_max, self.l_lev)

    def class_size(self) -> int:
        return (self.l_lev + 1) ** (self.r1 * self.r) * (self.l_lev + 1) ** (self.r * self.r2)


def quantize_factor(M, c: float, l_lev: int) -> np.ndarray:
    """Map each nonzero entry to its nearest level in ``[-c, c]``; keep zeros.

    Ties go to the level closer to zero. Raises if an entry lies outside the range.
    """
    M = as_matrix(M, "factor")
    if exceeds(max_norm(M), c):
        raise ValueError(f"entry magnitude {max_norm(M)} outside [-{c}, {c}]")
    vals = level_values(c, l_lev)
    if c == 0:
        return np.zeros_like(M)
    t = (np.clip(M, -c, c) + c) / (2 * c) * (l_lev - 1)
    lo = np.clip(np.floor(t).astype(np.int64), 0, l_lev - 1)
    hi = np.clip(lo + 1, 0, l_lev - 1)
    d_lo = np.abs(M - vals[lo])
    d_hi = np.abs(M - vals[hi])
    pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (np.abs(vals[hi]) < np.abs(vals[lo])))
    out = np.where(pick_hi, vals[hi], vals[lo])
    return np.where(M == 0, 0.0, out)


def _factor_bits(nnz, slots: int, bits_per_nonzero: float, count_header: bool):
    header = count_header_bits(slots) if count_header else 0
    return header + nnz * bits_per_nonzero


def penalty(P, Q, scheme: DiscretizationScheme, count_header: bool = True) -> float:
    """Code length ``pen(X)`` in bits for the candidate ``A P Q B``; at least 1."""
    P = np.asarray(P)
    Q = np.asarray(Q)
    if P.shape != (scheme.r1, scheme.r) or Q.shape != (scheme.r, scheme.r2):
        raise ValueError(f"factor shapes {P.shape}, {Q.shape} do not match the scheme")
    bits = _factor_bits(np.count_nonzero(P), P.size, scheme.bits_per_nonzero_p, count_header) + _factor_bits(
        np.count_nonzero(Q), Q.size, scheme.bits_per_nonzero_q, count_header
    )
    return max(float(bits), 1.0)


def factor_candidates(shape: tuple[int, int], values: np.ndarray) -> np.ndarray:
    """All matrices of ``shape`` with entries in ``{0} ∪ values``, stacked.

    Order is lexicographic over row-major entries with the alphabet
    ``(0, values[0], values[1], ...)``.
    """
    alphabet = np.concatenate([[0.0], np.asarray(values, dtype=np.float64)])
    slots = shape[0] * shape[1]
    idx = np.array(list(itertools.product(range(len(alphabet)), repeat=slots)), dtype=np.int64)
    return alphabet[idx].reshape(-1, *shape)


def _check_cap(scheme: DiscretizationScheme, cap: int) -> None:
    size = scheme.class_size()
    if size > cap:
        raise ClassTooLarge(f"class has {size} candidates, cap is {cap}")


def kraft_sum(scheme: DiscretizationScheme, cap: int = DEFAULT_CAP, count_header: bool = True) -> float:
    """Exhaustive ``sum over (P, Q) of 2 ** -pen`` for the scheme's class."""
    _check_cap(scheme, cap)
    pc = factor_candidates((scheme.r1, scheme.r), scheme.p_values())
    qc = factor_candidates((scheme.r, scheme.r2), scheme.q_values())
    bits_p = _factor_bits(np.count_nonzero(pc, axis=(1, 2)), scheme.r1 * scheme.r, scheme.bits_per_nonzero_p, count_header)
    bits_q = _factor_bits(np.count_nonzero(qc, axis=(1, 2)), scheme.r * scheme.r2, scheme.bits_per_nonzero_q, count_header)
    pen = np.maximum(bits_p[:, None] + bits_q[None, :], 1.0)
    return math.fsum(np.exp2(-pen).ravel())


def enumerate_class(A, B, scheme: DiscretizationScheme, x_max: float, cap: int = DEFAULT_CAP) -> Iterator[tuple]:
    """Yield every ``(P, Q, X)`` in the class with ``||X||_max <= x_max``.

    P varies slowest; both follow :func:`factor_candidates` order.
    """
    _check_cap(scheme, cap)
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    pc = factor_candidates((scheme.r1, scheme.r), scheme.p_values())
    qc = factor_candidates((scheme.r, scheme.r2), scheme.q_values())
    limit = x_max * (1 + MAX_NORM_SLACK)
    for P in pc:
        for Q in qc:
            X = product(A, P, Q, B)
            if max_norm(X) <= limit:
                yield P, Q, X
