"""Small dense linear solves in arbitrary float precision.

LAPACK only handles float32/float64; the moment solver wants its
2s x 2s systems (s <= ~8) in ``np.longdouble``, so elimination is done
by hand.  Partial pivoting is all that is needed at these sizes.
"""

from __future__ import annotations

import numpy as np


def solve_partial_pivot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Preserves the dtype of ``a``.  Raises ``numpy.linalg.LinAlgError`` on a
    zero pivot (exactly singular in the working precision).
    """
    a = np.array(a, copy=True)
    b = np.array(b, dtype=a.dtype, copy=True)
    n = b.shape[0]
    if a.shape != (n, n):
        raise np.linalg.LinAlgError(f"expected square system, got {a.shape}")
    for col in range(n - 1):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        if a[col, col] == 0:
            raise np.linalg.LinAlgError("singular matrix")
        factors = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col + 1 :] -= factors[:, None] * a[col, col + 1 :]
        b[col + 1 :] -= factors * b[col]
    x = np.empty_like(b)
    for row in range(n - 1, -1, -1):
        if a[row, row] == 0:
            raise np.linalg.LinAlgError("singular matrix")
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x
