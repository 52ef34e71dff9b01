"""Bernoulli observation masks and noisy observation sets.

Randomness
----------
Every random draw goes through ``numpy.random.Generator`` backed by PCG64.
Seeds for independent streams are derived with :func:`derive_seed`, which
feeds ``(master_seed, *keys)`` through ``numpy.random.SeedSequence``; string
keys (stream labels) are mapped to integers with CRC-32. The mapping depends
only on the inputs, never on scheduling order or platform.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .noise import NoiseModel


def _key_to_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    key = int(key)
    if key < 0:
        raise ValueError("seed keys must be non-negative")
    return key


def derive_seed(master_seed: int, *keys) -> int:
    """Deterministic 63-bit seed for the stream named by ``keys``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def check_budget(n1: int, n2: int, m: int) -> None:
    if n1 < 1 or n2 < 1:
        raise ValueError(f"dimensions must be positive, got {n1}x{n2}")
    if not 4 <= m <= n1 * n2:
        raise ValueError(f"need 4 <= m <= n1*n2 = {n1 * n2}, got m={m}")


def draw_mask(n1: int, n2: int, m: int, seed) -> np.ndarray:
    """Boolean n1 x n2 mask; each entry kept independently with probability m/(n1 n2)."""
    check_budget(n1, n2, m)
    gamma = m / (n1 * n2)
    return make_rng(seed).random((n1, n2)) < gamma


@dataclass(frozen=True)
class ObservationSet:
    """Observed entries ``y`` at ``(rows, cols)`` of an n1 x n2 matrix.

    ``m`` is the nominal sampling budget, so ``gamma = m / (n1 n2)``; the
    realized count ``len(self)`` generally differs from ``m``.
    """

    n1: int
    n2: int
    rows: np.ndarray
    cols: np.ndarray
    y: np.ndarray
    m: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if not (len(rows) == len(cols) == len(y)):
            raise ValueError("rows, cols and y must have equal length")
        if len(rows):
            if rows.min() < 0 or rows.max() >= self.n1 or cols.min() < 0 or cols.max() >= self.n2:
                raise IndexError("observation index out of range")
            flat = rows * self.n2 + cols
            if len(np.unique(flat)) != len(flat):
                raise ValueError("duplicate observation indices")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def gamma(self) -> float:
        return self.m / (self.n1 * self.n2)

    @property
    def mask(self) -> np.ndarray:
        M = np.zeros((self.n1, self.n2), dtype=bool)
        M[self.rows, self.cols] = True
        return M

    def filled(self) -> np.ndarray:
        """Zero-filled n1 x n2 matrix of observations."""
        Y = np.zeros((self.n1, self.n2))
        Y[self.rows, self.cols] = self.y
        return Y


def _mask_indices(mask, shape) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.shape != shape:
            raise IndexError(f"mask shape {arr.shape} does not match matrix {shape}")
        return np.nonzero(arr)
    arr = arr.reshape(-1, 2).astype(np.int64)
    rows, cols = arr[:, 0], arr[:, 1]
    if len(rows) and (rows.min() < 0 or rows.max() >= shape[0] or cols.min() < 0 or cols.max() >= shape[1]):
        raise IndexError("mask index out of range")
    return rows, cols


def observe(x_true, mask, noise: NoiseModel, seed, m: int | None = None) -> ObservationSet:
    """Draw ``y_ij ~ p_{x_ij}`` independently at each masked location.

    ``mask`` is a boolean array shaped like ``x_true`` or a sequence of
    ``(i, j)`` pairs. ``m`` defaults to the realized number of observations.
    """
    x_true = np.asarray(x_true, dtype=np.float64)
    rows, cols = _mask_indices(mask, x_true.shape)
    y = noise.sample(x_true[rows, cols], make_rng(seed))
    n1, n2 = x_true.shape
    return ObservationSet(n1, n2, rows, cols, y, m=len(rows) if m is None else int(m))


# --- CSV ------------------------------------------------------------------

def write_observations(obs: ObservationSet, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("i,j,y\n")
        for i, j, y in zip(obs.rows, obs.cols, obs.y):
            fh.write(f"{i},{j},{y:.17g}\n")


def read_observations(path, n1: int, n2: int, m: int | None = None) -> ObservationSet:
    rows, cols, ys = [], [], []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["i", "j", "y"]:
            raise ValueError(f"expected header 'i,j,y', got {header}")
        for rec in reader:
            if not rec:
                continue
            rows.append(int(rec[0]))
            cols.append(int(rec[1]))
            ys.append(float(rec[2]))
    return ObservationSet(n1, n2, rows, cols, ys, m=len(rows) if m is None else m)
