"""Numerical tolerances shared across the engines."""
from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    """Default tolerances, sized for dense double-precision work at dim <= ~64.

    tol_op          absolute Frobenius tolerance for operator identities
    cluster_tol     eigenvalue gap below which eigenvalues share a projector
    feasibility_tol least-squares residual above which a linear record search
                    is declared infeasible (stacked systems condition worse
                    than single-matrix checks, hence looser than tol_op)
    tol_idem        idempotency residual accepted by the heuristic search
    tol_prob        probability normalization / certainty tolerance
    n_restarts      random restarts for the heuristic record search
    """

    tol_op: float = 1e-9
    cluster_tol: float = 1e-7
    feasibility_tol: float = 1e-7
    tol_idem: float = 1e-8
    tol_prob: float = 1e-9
    n_restarts: int = 32

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()
