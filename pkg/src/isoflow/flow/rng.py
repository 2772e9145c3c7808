"""Reproducible parallel random streams.

Streams are counter-based (Philox) and derived splittably: an ensemble
label is hashed into a spawn key, and replications are grouped into
fixed-size blocks, each owning an independent child stream.  The noise an
ensemble consumes is therefore a pure function of (base_seed, label,
block index, step), independent of worker count and execution order.

With `BLOCK_SIZE` fixed, the first k*BLOCK_SIZE replications of a large
ensemble are bit-identical to a standalone run with k*BLOCK_SIZE
replications and the same seed.
"""

from __future__ import annotations

import zlib

import numpy as np

BLOCK_SIZE = 10_000


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def ensemble_root(base_seed: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(_label_key(label),))


def block_stream(base_seed: int, label: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        entropy=base_seed, spawn_key=(_label_key(label), block)
    )
    return np.random.Generator(np.random.Philox(ss))


def replication_stream(base_seed: int, label: str, replication: int) -> np.random.Generator:
    """Stream owned by a single replication (used by path-level APIs)."""
    ss = np.random.SeedSequence(
        entropy=base_seed, spawn_key=(_label_key(label), 0x7265706C, replication)
    )
    return np.random.Generator(np.random.Philox(ss))


class BlockNoise:
    """Per-step standard-normal noise for m replications in fixed blocks.

    With antithetic pairing, replication block_lo + j and replication
    block_lo + size/2 + j receive mirrored draws, so pairs always live in
    the same block.  `cols` extra trailing dimensions are drawn per
    replication (one column per particle).
    """

    def __init__(self, base_seed: int, label: str, m: int, cols: int | None = None,
                 antithetic: bool = True, block_size: int = BLOCK_SIZE):
        if m <= 0:
            raise ValueError("m must be positive")
        self.m = int(m)
        self.cols = cols
        self.antithetic = bool(antithetic)
        self.block_size = int(block_size)
        bounds = list(range(0, self.m, self.block_size)) + [self.m]
        self._blocks = list(zip(bounds[:-1], bounds[1:]))
        if self.antithetic:
            for lo, hi in self._blocks:
                if (hi - lo) % 2:
                    raise ValueError(
                        "antithetic pairing needs an even number of "
                        f"replications per block; block [{lo}, {hi}) is odd"
                    )
        self._streams = [
            block_stream(base_seed, label, b) for b in range(len(self._blocks))
        ]

    def pair_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays (first, mirrored) of the antithetic pairs."""
        first, second = [], []
        for lo, hi in self._blocks:
            half = (hi - lo) // 2
            first.append(np.arange(lo, lo + half))
            second.append(np.arange(lo + half, hi))
        return np.concatenate(first), np.concatenate(second)

    def draw(self, n_steps: int) -> np.ndarray:
        """Noise for `n_steps` consecutive steps: shape (n_steps, m[, cols])."""
        shape = (n_steps, self.m) if self.cols is None else (n_steps, self.m, self.cols)
        out = np.empty(shape, dtype=np.float64)
        for (lo, hi), gen in zip(self._blocks, self._streams):
            if self.antithetic:
                half = (hi - lo) // 2
                z = gen.standard_normal(out[:, lo : lo + half].shape)
                out[:, lo : lo + half] = z
                out[:, lo + half : hi] = -z
            else:
                out[:, lo:hi] = gen.standard_normal(out[:, lo:hi].shape)
        return out


def antithetic_units(values: np.ndarray, block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Collapse per-replication values into independent antithetic pair means.

    `values` is indexed by replication (leading axis, block layout as
    produced by BlockNoise); the result has half the length and i.i.d.
    entries, suitable for standard-error estimation.
    """
    m = values.shape[0]
    out = []
    for lo in range(0, m, block_size):
        hi = min(lo + block_size, m)
        half = (hi - lo) // 2
        out.append(0.5 * (values[lo : lo + half] + values[lo + half : hi]))
    return np.concatenate(out)
