"""Parameter space and forward maps of the multimode thinning model.

A beam mixes ``s`` particle species.  Species ``r`` occurs with
probability ``q_r`` (the mode distribution, a pmf) and survives one
absorbing layer with transmission probability ``p_r``.  The expected
count absorbed at layer ``i``, per unit of beam intensity, is

    m_i = sum_r (1 - p_r) * p_r**(i-1) * q_r

and the associated power sums are ``a_i = sum_r q_r * p_r**(i-1)``,
which telescope as ``a_{i+1} = a_i - m_i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Strictness thresholds for the parameter space.  Below these gaps the
# moment solver is numerically meaningless.
SIMPLEX_TOL = 1e-12
GAP_TOL = 1e-10


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-constraint outcome of a parameter-space membership check."""

    sums_to_one: bool
    q_positive: bool
    p_in_unit_interval: bool
    p_strictly_decreasing: bool

    @property
    def feasible(self) -> bool:
        return (
            self.sums_to_one
            and self.q_positive
            and self.p_in_unit_interval
            and self.p_strictly_decreasing
        )

    def failures(self) -> tuple[str, ...]:
        """Names of the violated constraints, empty when feasible."""
        out = []
        if not self.sums_to_one:
            out.append("q must sum to 1")
        if not self.q_positive:
            out.append("every q_r must be strictly positive")
        if not self.p_in_unit_interval:
            out.append("every p_r must lie strictly inside (0, 1)")
        if not self.p_strictly_decreasing:
            out.append("p must be strictly decreasing")
        return tuple(out)


def validate_feasible(
    q,
    p,
    *,
    simplex_tol: float = SIMPLEX_TOL,
    gap_tol: float = GAP_TOL,
) -> FeasibilityReport:
    """Check whether ``(q, p)`` lies in the model's parameter space.

    Reports pass/fail per constraint instead of raising, so callers can
    classify finite-sample estimates that drift outside the space.

    Parameters
    ----------
    q, p : array-like, same length s >= 1
        Candidate mode distribution and transmission probabilities.
    simplex_tol : float
        Allowed deviation of ``sum(q)`` from 1.
    gap_tol : float
        Minimum gap for "strictly decreasing" (and distance of each
        ``p_r`` from the interval endpoints 0 and 1).
    """
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if q.ndim != 1 or p.ndim != 1 or q.shape != p.shape or q.size < 1:
        raise ValidationError(
            f"q and p must be 1-d vectors of equal length >= 1, "
            f"got shapes {q.shape} and {p.shape}"
        )
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise ValidationError("q and p must be finite")
    sums_to_one = abs(float(q.sum()) - 1.0) <= simplex_tol
    q_positive = bool(np.all(q > 0.0))
    p_in_range = bool(np.all(p > gap_tol) and np.all(p < 1.0 - gap_tol))
    descending = bool(p.size == 1 or np.all(p[:-1] - p[1:] > gap_tol))
    return FeasibilityReport(sums_to_one, q_positive, p_in_range, descending)


def _as_readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelParams:
    """A point of the parameter space: mode distribution and transmissions.

    Immutable after construction; construction validates membership in
    the parameter space and raises :class:`ValidationError` naming the
    violated constraint otherwise.
    """

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _as_readonly(self.q))
        object.__setattr__(self, "p", _as_readonly(self.p))
        report = validate_feasible(self.q, self.p)
        if not report.feasible:
            raise ValidationError("invalid model parameters: " + "; ".join(report.failures()))

    @property
    def s(self) -> int:
        """Number of modes."""
        return int(self.q.size)


@dataclass(frozen=True)
class BeamConfig:
    """Experiment geometry: beam intensity, replications, layer count.

    ``lambda_t`` is the expected number of beam particles per
    replication (intensity times exposure).  ``k = 2s - 1`` is required
    by the solver but is validated at estimation time, not here.
    """

    lambda_t: float
    n: int
    k: int

    def __post_init__(self):
        if not (math.isfinite(self.lambda_t) and self.lambda_t >= 0):
            raise ValidationError(f"lambda_t must be finite and >= 0, got {self.lambda_t}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        if int(self.k) != self.k or self.k < 1:
            raise ValidationError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))


def _forward_moments(q, p, k: int, dtype=np.float64) -> np.ndarray:
    """Layer moments from raw vectors, no parameter-space validation."""
    q = np.asarray(q, dtype=dtype)
    p = np.asarray(p, dtype=dtype)
    i = np.arange(1, k + 1)[:, None]
    return ((1 - p[None, :]) * p[None, :] ** (i - 1) * q[None, :]).sum(axis=1)


def _power_sums(q, p, length: int, dtype=np.float64) -> np.ndarray:
    """Power sums from raw vectors, no parameter-space validation."""
    q = np.asarray(q, dtype=dtype)
    p = np.asarray(p, dtype=dtype)
    i = np.arange(1, length + 1)[:, None]
    return (q[None, :] * p[None, :] ** (i - 1)).sum(axis=1)


def forward_moments(params: ModelParams, k: int, dtype=np.float64) -> np.ndarray:
    """Expected absorbed count per unit beam intensity at layers 1..k.

    Every entry is strictly positive and the entries sum to less than 1
    (the remainder is the fraction transmitted past layer k).

    Parameters
    ----------
    params : ModelParams
    k : int
        Number of layers, >= 1.
    dtype : numpy dtype
        Working precision; pass ``np.longdouble`` when the result feeds
        a high-precision verification.
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")
    return _forward_moments(params.q, params.p, int(k), dtype)


def power_sums(params: ModelParams, length: int, dtype=np.float64) -> np.ndarray:
    """Power sums ``a_i = sum_r q_r p_r**(i-1)`` for i = 1..length.

    ``a_1`` equals 1 (up to the simplex tolerance of ``params``) and the
    sequence is strictly decreasing and positive.
    """
    if int(length) != length or length < 1:
        raise ValidationError(f"length must be a positive integer, got {length}")
    return _power_sums(params.q, params.p, int(length), dtype)


# ---------------------------------------------------------------------------
# Parameter files: JSON with fields s, q, p, lambda_t, n, k.

def model_config_from_dict(doc: dict) -> tuple[ModelParams, BeamConfig]:
    """Build (ModelParams, BeamConfig) from a parameter-file dictionary."""
    try:
        s = int(doc["s"])
        q = doc["q"]
        p = doc["p"]
        lambda_t = float(doc["lambda_t"])
        n = int(doc["n"])
        k = int(doc["k"])
    except KeyError as exc:
        raise ValidationError(f"parameter file is missing field {exc}") from exc
    if len(q) != s or len(p) != s:
        raise ValidationError(
            f"parameter file declares s={s} but q has length {len(q)} and p {len(p)}"
        )
    return ModelParams(q=q, p=p), BeamConfig(lambda_t=lambda_t, n=n, k=k)


def model_config_to_dict(params: ModelParams, beam: BeamConfig) -> dict:
    return {
        "s": params.s,
        "q": [float(v) for v in params.q],
        "p": [float(v) for v in params.p],
        "lambda_t": float(beam.lambda_t),
        "n": beam.n,
        "k": beam.k,
    }


def load_model_config(path) -> tuple[ModelParams, BeamConfig]:
    """Read a JSON parameter file from ``path``."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_config_from_dict(doc)
