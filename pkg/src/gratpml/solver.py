"""Sparse direct solution of the reduced system with health reporting.

The reduced matrices are complex symmetric (not Hermitian) and indefinite,
so a general sparse LU (SuperLU via scipy) is the right tool.  Besides the
solution we report the relative residual, the LU fill-in, and the smallest
pivot scaled by the matrix magnitude; a vanishing pivot signals a discrete
resonance (the truncated problem can be singular for unlucky parameter
combinations even when the continuous one is well posed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from .assembly import SparseSystem

__all__ = ["SolverError", "SolveReport", "solve_system"]

#: Pivot threshold relative to max |A_ij| below which the factorization is
#: treated as numerically singular.
PIVOT_RTOL = 1e-14

#: Relative residual above which the report is flagged as suspect.
RESIDUAL_RTOL = 1e-10


class SolverError(RuntimeError):
    """The reduced system is numerically singular or the solve failed."""


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of one sparse direct solve."""

    n: int
    nnz: int
    lu_nnz: int
    residual: float
    pivot_ratio: float
    ok: bool

    @property
    def fill_factor(self) -> float:
        return self.lu_nnz / max(self.nnz, 1)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        flag = "ok" if self.ok else "SUSPECT"
        return (
            f"n={self.n} nnz={self.nnz} fill={self.fill_factor:.1f}x "
            f"residual={self.residual:.2e} min_pivot={self.pivot_ratio:.2e} "
            f"[{flag}]"
        )


def solve_system(system: SparseSystem) -> tuple[np.ndarray, SolveReport]:
    """LU-factor and solve ``system``; raise SolverError when singular.

    Returns
    -------
    (x, report)
        Solution vector of length ``system.n`` and the diagnostics record.
        ``report.ok`` is False when the relative residual exceeds
        ``RESIDUAL_RTOL`` (the solution is still returned).
    """
    a = system.matrix.tocsc()
    b = system.rhs
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex), SolveReport(0, 0, 0, 0.0, np.inf, True)
    scale = np.abs(a.data).max() if a.nnz else 0.0
    if scale == 0.0:
        raise SolverError("assembled matrix is identically zero")

    try:
        lu = splu(a)
    except RuntimeError as exc:  # SuperLU signals exact singularity this way
        raise SolverError(f"sparse factorization failed: {exc}") from exc

    pivots = np.abs(lu.U.diagonal())
    pivot_ratio = float(pivots.min() / scale)
    if pivot_ratio <= PIVOT_RTOL:
        raise SolverError(
            "numerically singular system (min |pivot| = "
            f"{pivots.min():.3e} vs scale {scale:.3e}); the discrete problem "
            "appears resonant -- perturb the frequency or refine the mesh"
        )

    x = lu.solve(b)
    norm_b = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(a @ x - b))
    if norm_b > 0.0:
        residual /= norm_b
    report = SolveReport(
        n=a.shape[0],
        nnz=int(a.nnz),
        lu_nnz=int(lu.L.nnz + lu.U.nnz),
        residual=residual,
        pivot_ratio=pivot_ratio,
        ok=residual <= RESIDUAL_RTOL,
    )
    return x, report
