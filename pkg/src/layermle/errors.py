"""Exception hierarchy.

Validation problems (bad parameters, shape mismatches) derive from
``ValueError`` so they behave as scikit-learn users expect; numerical
failures of the moment solver form their own branch so callers can map
them to a distinct exit code.
"""

from __future__ import annotations


class LayerMleError(Exception):
    """Base class for all package errors."""


class ValidationError(LayerMleError, ValueError):
    """Input violates a documented constraint; the message names it."""


class DimensionError(ValidationError):
    """Shape/length mismatch, e.g. layer count not equal to 2s - 1."""


class SolverError(LayerMleError):
    """Numerical failure inside the moment solver."""


class SingularHankelError(SolverError):
    """Hankel coefficient matrix is singular or too ill-conditioned."""

    def __init__(self, det: float, cond: float):
        self.det = float(det)
        self.cond = float(cond)
        super().__init__(
            f"Hankel system is numerically singular (det={det:.3e}, cond={cond:.3e})"
        )


class ComplexRootsError(SolverError):
    """Denominator roots have non-negligible imaginary parts."""

    def __init__(self, max_imag: float):
        self.max_imag = float(max_imag)
        super().__init__(
            f"denominator has complex roots (max |imag| = {max_imag:.3e}); "
            "no real solution exists for these statistics"
        )


class DegenerateDegreeError(SolverError):
    """Leading denominator coefficient vanishes: effective degree < s."""


class IllSeparatedNodesError(SolverError):
    """Two recovered nodes are too close for residue extraction."""

    def __init__(self, min_gap: float):
        self.min_gap = float(min_gap)
        super().__init__(f"nodes are ill-separated (min gap = {min_gap:.3e})")


class SingularJacobianError(SolverError):
    """System Jacobian is numerically singular at the given parameters."""


class InfeasibleSolutionError(LayerMleError, ValueError):
    """Operation requires a feasible parameter estimate."""
