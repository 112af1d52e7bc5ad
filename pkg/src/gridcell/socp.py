"""Solver-agnostic second-order cone programming interface.

Problems are stated over real variables x as

    minimize    c' x
    subject to  h_i - G_i x  in  SOC(dim_i)   for every cone block i
                A x = b

where the first coordinate of each cone block is the scalar part.  The
default backend is cvxopt's interior-point cone LP solver; anything meeting
the same tolerance contract can be dropped in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from cvxopt import matrix, solvers

from .errors import InfeasibleError, SolverFailureError

RELATIVE_GAP_LIMIT = 1e-7

# tried in order; a breakdown at one level falls through to the next, and the
# relative-gap contract is re-checked on whatever solution is accepted
_TOLERANCE_LADDER = (
    {"abstol": 1e-11, "reltol": 1e-9, "feastol": 1e-9},
    {"abstol": 1e-10, "reltol": 1e-8, "feastol": 1e-8},
    {"abstol": 1e-9, "reltol": 5e-8, "feastol": 1e-7},
    {"abstol": 1e-9, "reltol": 1e-7, "feastol": 1e-6},
)

_SOLVER_OPTIONS = {
    "show_progress": False,
    "maxiters": 200,
}


@dataclass(frozen=True)
class ConeBlock:
    """One second-order cone constraint h - Gx in SOC."""

    G: np.ndarray  # (dim, n)
    h: np.ndarray  # (dim,)


@dataclass(frozen=True)
class SocpProblem:
    c: np.ndarray                     # (n,)
    blocks: tuple[ConeBlock, ...]
    A: np.ndarray | None = None       # (p, n) equality lhs
    b: np.ndarray | None = None       # (p,)


@dataclass(frozen=True)
class SocpSolution:
    x: np.ndarray
    objective: float
    relative_gap: float


def solve_socp(problem: SocpProblem) -> SocpSolution:
    """Solve a standard-form SOCP.

    Raises InfeasibleError on a primal infeasibility certificate and
    SolverFailureError on numerical breakdown, so callers can treat only the
    former as a legitimate search outcome.
    """
    n = problem.c.shape[0]
    G = np.vstack([blk.G for blk in problem.blocks])
    h = np.concatenate([blk.h for blk in problem.blocks])
    dims = {"l": 0, "q": [blk.h.shape[0] for blk in problem.blocks], "s": []}

    kwargs = {}
    if problem.A is not None:
        kwargs["A"] = matrix(np.asarray(problem.A, dtype=float))
        kwargs["b"] = matrix(np.asarray(problem.b, dtype=float))

    old = dict(solvers.options)
    sol = None
    last_exc = None
    try:
        for level in _TOLERANCE_LADDER:
            solvers.options.clear()
            solvers.options.update(old)
            solvers.options.update(_SOLVER_OPTIONS)
            solvers.options.update(level)
            try:
                sol = solvers.conelp(
                    matrix(problem.c.astype(float)), matrix(G), matrix(h),
                    dims, **kwargs)
            except (ValueError, ArithmeticError) as exc:
                last_exc = exc
                continue
            if sol["status"] in ("optimal", "primal infeasible", "dual infeasible"):
                break
    finally:
        solvers.options.clear()
        solvers.options.update(old)
    if sol is None:
        raise SolverFailureError(f"cone solver raised: {last_exc}") from last_exc

    status = sol["status"]
    if status == "primal infeasible":
        raise InfeasibleError("SINR targets unattainable under the power budgets")
    if status not in ("optimal", "unknown"):
        raise SolverFailureError(f"cone solver status: {status}")

    rel_gap = sol["relative gap"]
    rel_gap = np.inf if rel_gap is None else float(rel_gap)
    if status == "unknown" and not rel_gap <= RELATIVE_GAP_LIMIT:
        raise SolverFailureError(
            f"cone solver did not converge (relative gap {rel_gap})")
    if rel_gap > RELATIVE_GAP_LIMIT:
        raise SolverFailureError(f"duality gap above contract: {rel_gap}")

    x = np.array(sol["x"]).ravel()[:n]
    return SocpSolution(x=x, objective=float(problem.c @ x), relative_gap=rel_gap)
