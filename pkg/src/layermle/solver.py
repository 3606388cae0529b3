"""Closed-form solver for the layer-moment system.

Recovering ``s`` weights and ``s`` nodes from 2s power sums is the
classical Sylvester/Ramanujan (Prony) problem: the generating function
``sum_i a_i theta**(i-1)`` is rational with denominator
``prod_r (1 - z_r theta)``, so

1. a Hankel-structured linear solve yields the denominator coefficients
   ``c`` (the power sums satisfy the linear recurrence
   ``u_{s+i} + c_1 u_{s+i-1} + ... + c_s u_i = 0``),
2. the nodes ``z`` are the roots of the monic reversal
   ``w**s + c_1 w**(s-1) + ... + c_s`` (companion-matrix eigenvalues,
   Newton-refined),
3. the weights ``y`` come out of the partial-fraction decomposition.

All granular steps preserve the dtype of their inputs;
:func:`solve_moment_system` runs them in extended precision
(``np.longdouble``) because the map from power sums to parameters has
condition number up to ~1e8 within the admissible space, which double
precision inputs alone can exhaust.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._linalg import solve_partial_pivot
from .errors import (
    ComplexRootsError,
    DegenerateDegreeError,
    DimensionError,
    IllSeparatedNodesError,
    SingularHankelError,
)
from .model import FeasibilityReport, validate_feasible
from .simulate import SufficientStats

# |det C| <= DET_REL_TOL * ||C||_F**s, or a condition estimate beyond
# COND_LIMIT, is treated as singular: recovered roots would be noise.
DET_REL_TOL = 1e-12
COND_LIMIT = 1e12
# Imaginary parts below IMAG_TOL * (1 + |Re|) are rounding debris and are
# discarded; anything larger means the statistics admit no real solution.
IMAG_TOL = 1e-7
# Minimum node spacing for a meaningful partial-fraction decomposition.
SEPARATION_TOL = 1e-6
# Leading-coefficient threshold: below it the denominator degree drops.
DEGREE_TOL = 1e-12
# Feasibility of a finite-sample solution is judged at this simplex slack.
SOLUTION_SIMPLEX_TOL = 1e-8


@dataclass(frozen=True)
class HankelSystem:
    """The linear system behind the denominator coefficients.

    ``C[i, j] = u[s + i - j]`` (1-based; constant along diagonals) and
    ``D`` is strictly lower triangular with ``D[i, j] = u[i - j]``.
    ``rhs_tail`` holds ``u_{s+1..2s}``, ``head`` holds ``u_{1..s}``.
    """

    s: int
    C: np.ndarray
    D: np.ndarray
    rhs_tail: np.ndarray
    head: np.ndarray


@dataclass(frozen=True)
class RationalFn:
    """Moment generating function as a ratio of polynomials.

    Denominator ``1 + c_1 theta + ... + c_s theta**s``; numerator
    ``d_1 + d_2 theta + ... + d_s theta**(s-1)``.
    """

    c: np.ndarray
    d: np.ndarray


class RootResult(NamedTuple):
    z: np.ndarray
    max_imag_discarded: float


@dataclass(frozen=True)
class SolverDiagnostics:
    det_C: float
    cond_C: float
    max_imag_discarded: float
    root_separation: float

    def to_dict(self) -> dict:
        # root_separation is +inf for s = 1; JSON gets null there.
        sep = self.root_separation
        return {
            "det_C": self.det_C,
            "cond_C": self.cond_C,
            "max_imag_discarded": self.max_imag_discarded,
            "root_separation": sep if np.isfinite(sep) else None,
        }


@dataclass(frozen=True)
class MomentSolution:
    """Raw solver output: weights ``y``, nodes ``z`` (descending), flags.

    ``feasible`` records whether the ordered pair lies in the parameter
    space; infeasible finite-sample solutions are returned as-is so the
    caller can decide policy (see :func:`clamp_to_feasible`).
    """

    y: np.ndarray
    z: np.ndarray
    feasible: bool
    diagnostics: SolverDiagnostics

    @property
    def s(self) -> int:
        return int(self.y.size)

    def report(self) -> FeasibilityReport:
        return validate_feasible(self.y, self.z, simplex_tol=SOLUTION_SIMPLEX_TOL)

    def to_dict(self) -> dict:
        return {
            "q": [float(v) for v in self.y],
            "p": [float(v) for v in self.z],
            "feasible": bool(self.feasible),
            "diagnostics": self.diagnostics.to_dict(),
        }


def _is_feasible(y: np.ndarray, z: np.ndarray) -> bool:
    """Parameter-space membership of a raw solution; never raises."""
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
        return False
    return validate_feasible(y, z, simplex_tol=SOLUTION_SIMPLEX_TOL).feasible


def build_hankel(a_hat, s: int) -> HankelSystem:
    """Lay out the coefficient system from the first 2s power-sum entries."""
    u = np.asarray(a_hat)
    if int(s) != s or s < 1:
        raise DimensionError(f"s must be a positive integer, got {s}")
    s = int(s)
    if u.ndim != 1 or u.size < 2 * s:
        raise DimensionError(
            f"need at least 2s = {2 * s} power-sum entries, got {u.size}"
        )
    rows = np.arange(s)[:, None]
    cols = np.arange(s)[None, :]
    C = u[s - 1 + rows - cols]
    lower = rows - cols - 1
    D = np.where(lower >= 0, u[np.clip(lower, 0, None)], u.dtype.type(0))
    return HankelSystem(s=s, C=C, D=D, rhs_tail=u[s : 2 * s].copy(), head=u[:s].copy())


def _condition(system: HankelSystem) -> tuple[float, float]:
    C64 = system.C.astype(np.float64)
    det = float(np.linalg.det(C64))
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(C64))
    return det, cond


def solve_coefficients(system: HankelSystem) -> RationalFn:
    """Denominator and numerator coefficients of the generating function.

    The denominator annihilates the moment recurrence:
    ``u_{s+i} + c_1 u_{s+i-1} + ... + c_s u_i = 0`` for i = 1..s, hence
    ``c`` solves ``C c = -rhs_tail``.  The numerator follows as
    ``d = head + D c`` (so ``d_1 = u_1`` always, ``D`` having a zero
    first row).

    Raises
    ------
    SingularHankelError
        If ``C`` is singular or too ill-conditioned to invert; carries
        the determinant and condition estimates.
    """
    det, cond = _condition(system)
    norm = float(np.sqrt((system.C.astype(np.float64) ** 2).sum()))
    if not np.isfinite(det) or abs(det) <= DET_REL_TOL * norm**system.s or cond >= COND_LIMIT:
        raise SingularHankelError(det=det, cond=cond)
    try:
        c = -solve_partial_pivot(system.C, system.rhs_tail)
    except np.linalg.LinAlgError:
        raise SingularHankelError(det=det, cond=cond) from None
    d = system.head + system.D @ c
    return RationalFn(c=c, d=d)


def denominator_roots(c) -> RootResult:
    """Nodes ``z`` (descending): reciprocal roots of the denominator.

    Computed as companion-matrix eigenvalues of the monic reversal
    ``w**s + c_1 w**(s-1) + ... + c_s``, whose roots are the ``z_r``
    directly, then polished with a few Newton steps in the input
    precision.

    Raises
    ------
    DegenerateDegreeError
        If ``c_s`` vanishes (a node at zero: effective degree < s).
    ComplexRootsError
        If any root keeps an imaginary part above tolerance.
    """
    c = np.atleast_1d(np.asarray(c))
    s = c.size
    scale = 1.0 + float(np.abs(c).max())
    if abs(float(c[-1])) <= DEGREE_TOL * scale:
        raise DegenerateDegreeError(
            f"leading denominator coefficient {float(c[-1]):.3e} is numerically zero; "
            "the system degenerates to fewer than s modes"
        )
    monic = np.concatenate(([1.0], c.astype(np.float64)))
    raw = np.atleast_1d(np.roots(monic))
    imag = np.abs(raw.imag)
    bad = imag > IMAG_TOL * (1.0 + np.abs(raw.real))
    if np.any(bad):
        raise ComplexRootsError(max_imag=float(imag.max()))
    max_imag = float(imag.max()) if raw.size else 0.0
    z = raw.real.astype(c.dtype)
    # Newton refinement recovers the precision the double-only companion
    # step cannot deliver when the input is longdouble.
    coeffs = np.concatenate((np.ones(1, dtype=c.dtype), c))
    deriv = coeffs[:-1] * np.arange(s, 0, -1, dtype=c.dtype)
    for _ in range(3):
        values = np.polyval(coeffs, z)
        slopes = np.polyval(deriv, z)
        safe = np.abs(slopes) > 0
        z = np.where(safe, z - values / np.where(safe, slopes, 1), z)
    order = np.argsort(-z)
    return RootResult(z=z[order], max_imag_discarded=max_imag)


def partial_fraction_residues(fn: RationalFn, z) -> np.ndarray:
    """Weights ``y`` of the decomposition ``sum_r y_r / (1 - z_r theta)``.

    Uses the pole-cleared residue formula
    ``y_r = P(z_r) / prod_{j != r} (z_r - z_j)`` with
    ``P(w) = d_1 w**(s-1) + ... + d_s``, which avoids dividing by a node.
    The weights always satisfy ``sum(y) == d_1`` up to rounding.

    Raises
    ------
    IllSeparatedNodesError
        If two nodes are closer than the separation threshold.
    """
    z = np.atleast_1d(np.asarray(z))
    d = np.atleast_1d(np.asarray(fn.d))
    if z.size != d.size:
        raise DimensionError(f"got {z.size} nodes for a degree-{d.size} numerator")
    s = z.size
    if s > 1:
        gaps = np.abs(z[:, None] - z[None, :])[np.triu_indices(s, k=1)]
        min_gap = float(gaps.min())
        if min_gap <= SEPARATION_TOL:
            raise IllSeparatedNodesError(min_gap=min_gap)
    y = np.empty(s, dtype=np.result_type(z.dtype, d.dtype))
    for r in range(s):
        others = np.delete(z, r)
        y[r] = np.polyval(d, z[r]) / np.prod(z[r] - others) if s > 1 else d[0]
    return y


def solve_moment_system(stats: SufficientStats, s: int) -> MomentSolution:
    """Full pipeline from sufficient statistics to ``(q, p)`` estimates.

    Requires ``k = 2s - 1`` layers, i.e. exactly 2s power-sum entries.
    The returned pair is ordered by descending node; its ``feasible``
    flag reports membership in the parameter space but infeasible
    solutions are returned rather than projected.

    Raises all granular solver errors, plus :class:`DimensionError`
    when the layer count does not match ``s``.
    """
    a_hat = np.asarray(stats.a_hat)
    if int(s) != s or s < 1:
        raise DimensionError(f"s must be a positive integer, got {s}")
    s = int(s)
    if a_hat.size != 2 * s:
        raise DimensionError(
            f"solving for s={s} modes needs k = 2s-1 = {2 * s - 1} layers "
            f"(a_hat of length {2 * s}), got length {a_hat.size}"
        )
    work = a_hat.astype(np.longdouble)
    system = build_hankel(work, s)
    det, cond = _condition(system)
    fn = solve_coefficients(system)
    z, max_imag = denominator_roots(fn.c)
    y = partial_fraction_residues(fn, z)
    y64 = y.astype(np.float64)
    z64 = z.astype(np.float64)
    separation = float(np.min(z64[:-1] - z64[1:])) if s > 1 else float("inf")
    feasible = _is_feasible(y64, z64)
    diagnostics = SolverDiagnostics(
        det_C=det,
        cond_C=cond,
        max_imag_discarded=max_imag,
        root_separation=separation,
    )
    return MomentSolution(y=y64, z=z64, feasible=feasible, diagnostics=diagnostics)


def clamp_to_feasible(solution: MomentSolution, eps: float = 1e-6) -> MomentSolution:
    """Heuristic repair of an infeasible finite-sample solution.

    Clamps nodes into ``(eps, 1 - eps)``, re-sorts the pairs by
    descending node and renormalizes the weights to sum to one.  This is
    a post-process without inferential guarantees; the feasibility flag
    of the result is re-evaluated honestly and may still be False.
    """
    if not 0 < eps < 0.5:
        raise ValidationError(f"eps must lie in (0, 0.5), got {eps}")
    z = np.clip(solution.z, eps, 1.0 - eps)
    order = np.argsort(-z)
    z = z[order]
    y = solution.y[order]
    total = float(y.sum())
    if total > 0:
        y = y / total
    return MomentSolution(
        y=y, z=z, feasible=_is_feasible(y, z), diagnostics=solution.diagnostics
    )
