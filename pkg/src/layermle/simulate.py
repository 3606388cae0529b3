"""Synthetic layer-count data and its reduction to sufficient statistics.

Two independently coded sampling mechanisms are provided:

* :func:`simulate_direct` draws each layer count straight from its
  marginal Poisson law (the layer counts of one replication are jointly
  independent Poissons);
* :func:`simulate_mechanistic` draws a beam total, splits it over modes
  multinomially, and pushes each mode's packet through the layers with
  per-layer binomial absorption.

The two are distributionally identical; the test suite checks that
empirically.  Both honour the same reproducibility contract: the count
row of replication ``j`` is a deterministic function of
``(seed, stream_id, j)`` alone, so serial and parallel generation agree
bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .model import BeamConfig, ModelParams, _forward_moments

# Poisson means above this are rejected rather than risking int64 overflow.
POISSON_MEAN_LIMIT = float(2**62)

_U64 = 2**64


@dataclass(frozen=True)
class RngSeed:
    """Root of a reproducible family of random streams.

    ``seed`` and ``stream_id`` are both 64-bit; identical values
    reproduce identical output bit-exactly.  Replication ``j`` of any
    consumer draws from its own substream (see :class:`ReplicationStreams`),
    so thread count and execution order never change the result.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v < _U64):
                raise ValidationError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def with_offset(self, offset: int) -> "RngSeed":
        """Same seed, shifted stream id (for carving out stream ranges)."""
        return RngSeed(self.seed, (self.stream_id + offset) % _U64)


class ReplicationStreams:
    """Per-replication substreams of one counter-based (Philox) stream.

    The 128-bit Philox key is ``(stream_id << 64) | seed``; replication
    ``j`` draws from counter block ``j``, which is exactly the state
    reached by ``Philox(key).jumped(j)``.  Blocks are 2**128 steps apart,
    so substreams never overlap and can be visited in any order.
    Seeking via the state dict avoids constructing a bit generator per
    replication, which dominates runtime in large Monte Carlo studies.
    """

    def __init__(self, seed: RngSeed):
        self._bitgen = np.random.Philox(key=(seed.stream_id << 64) | seed.seed)
        self._gen = np.random.Generator(self._bitgen)

    def replication(self, j: int) -> np.random.Generator:
        """Generator positioned at the start of substream ``j``."""
        if not 0 <= j < _U64:
            raise ValidationError(f"replication index out of range: {j}")
        state = self._bitgen.state
        counter = state["state"]["counter"]
        counter[:] = 0
        counter[2] = j
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        self._bitgen.state = state
        return self._gen


@dataclass(frozen=True)
class CountMatrix:
    """Raw data: absorbed counts, one row per replication, one column per layer."""

    counts: np.ndarray
    config: BeamConfig

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise DimensionError(f"counts must be 2-d, got shape {counts.shape}")
        if counts.shape != (self.config.n, self.config.k):
            raise DimensionError(
                f"counts shape {counts.shape} does not match config "
                f"(n={self.config.n}, k={self.config.k})"
            )
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValidationError("counts must be integers")
            counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        counts = np.ascontiguousarray(counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class SufficientStats:
    """Normalized layer means ``b_hat`` and their tail sums ``a_hat``.

    ``a_hat`` has one more entry than ``b_hat``; ``a_hat[0] == 1`` by
    definition and ``a_hat[i+1] = a_hat[i] - b_hat[i]``.  Entries of
    ``a_hat`` may be negative for extreme data; the solver decides what
    to do with them.
    """

    b_hat: np.ndarray
    a_hat: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b_hat))
        a = np.atleast_1d(np.asarray(self.a_hat))
        if a.size != b.size + 1:
            raise DimensionError(
                f"a_hat must have one more entry than b_hat, got {a.size} and {b.size}"
            )
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b_hat", b)
        object.__setattr__(self, "a_hat", a)

    @classmethod
    def from_power_sums(cls, a) -> "SufficientStats":
        """Statistics that an infinite sample would produce.

        ``a`` are exact power sums (any float dtype, preserved); used to
        exercise the solver on noise-free input.
        """
        a = np.asarray(a)
        return cls(b_hat=a[:-1] - a[1:], a_hat=a)

    def to_dict(self) -> dict:
        return {
            "b_hat": [float(v) for v in self.b_hat],
            "a_hat": [float(v) for v in self.a_hat],
        }


def _check_means(means: np.ndarray):
    if means.size and float(means.max()) > POISSON_MEAN_LIMIT:
        raise ValidationError(
            f"expected count {means.max():.3e} exceeds the Poisson sampler range"
        )


def simulate_direct(params: ModelParams, config: BeamConfig, seed: RngSeed) -> CountMatrix:
    """Sample layer counts from their joint law: independent Poissons.

    Row ``j`` holds one replication; entry ``(j, i)`` is Poisson with
    mean ``lambda_t * m_i`` and all entries are independent.
    """
    means = config.lambda_t * _forward_moments(params.q, params.p, config.k)
    _check_means(means)
    counts = np.empty((config.n, config.k), dtype=np.int64)
    streams = ReplicationStreams(seed)
    for j in range(config.n):
        counts[j] = streams.replication(j).poisson(means)
    return CountMatrix(counts=counts, config=config)


def simulate_mechanistic(params: ModelParams, config: BeamConfig, seed: RngSeed) -> CountMatrix:
    """Sample layer counts by simulating the physical chain.

    Per replication: draw the beam total, split it over modes
    multinomially, then march each mode's packet through the layers,
    absorbing survivors independently with probability ``1 - p_r`` at
    every layer.  Only per-layer mode totals are materialized, so the
    cost is O(n*k*s) rather than O(beam size).  Draw order within a
    replication is fixed (total, split, then modes outer / layers
    inner); changing it would change the output for a given seed.
    """
    if config.lambda_t > POISSON_MEAN_LIMIT:
        raise ValidationError(
            f"lambda_t {config.lambda_t:.3e} exceeds the Poisson sampler range"
        )
    q = params.q
    p = params.p
    s = params.s
    counts = np.zeros((config.n, config.k), dtype=np.int64)
    streams = ReplicationStreams(seed)
    for j in range(config.n):
        gen = streams.replication(j)
        total = int(gen.poisson(config.lambda_t))
        split = gen.multinomial(total, q)
        for r in range(s):
            surviving = int(split[r])
            absorb = 1.0 - p[r]
            for layer in range(config.k):
                if surviving == 0:
                    break
                taken = int(gen.binomial(surviving, absorb))
                counts[j, layer] += taken
                surviving -= taken
    return CountMatrix(counts=counts, config=config)


def sufficient_stats(data: CountMatrix) -> SufficientStats:
    """Reduce a count matrix to the statistics the solver consumes.

    ``b_hat[i] = sum_j x[j, i] / (n * lambda_t)`` (the layer sums are
    accumulated in exact integer arithmetic) and ``a_hat`` is built by
    sequential subtraction so the telescoping identity holds bit-exactly.
    """
    if data.config.lambda_t <= 0:
        raise ValidationError("sufficient statistics require lambda_t > 0")
    scale = data.config.n * data.config.lambda_t
    layer_sums = data.counts.sum(axis=0, dtype=np.int64)
    b_hat = layer_sums / scale
    a_hat = np.empty(data.config.k + 1, dtype=np.float64)
    a_hat[0] = 1.0
    for i in range(data.config.k):
        a_hat[i + 1] = a_hat[i] - b_hat[i]
    return SufficientStats(b_hat=b_hat, a_hat=a_hat)


# ---------------------------------------------------------------------------
# File formats: counts as CSV (header rep,layer_1,...,layer_k), stats as JSON.

def write_counts_csv(data: CountMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rep"] + [f"layer_{i + 1}" for i in range(data.config.k)])
        for j, row in enumerate(data.counts, start=1):
            writer.writerow([j] + [int(v) for v in row])


def read_counts_csv(path) -> np.ndarray:
    """Read a counts CSV back into an (n, k) integer array."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "rep" or len(header) < 2:
            raise ValidationError(f"{path}: not a counts CSV (bad header {header})")
        rows = [[int(v) for v in row[1:]] for row in reader if row]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.int64)


def write_stats_json(stats: SufficientStats, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2)
        fh.write("\n")


def read_stats_json(path) -> SufficientStats:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return SufficientStats(
        b_hat=np.asarray(doc["b_hat"], dtype=np.float64),
        a_hat=np.asarray(doc["a_hat"], dtype=np.float64),
    )
