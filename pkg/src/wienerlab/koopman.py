"""Koopman-von Neumann equivalence for measure sequences.

For a bounded nonnegative ``f``, the averages ``integral f dnu_N`` tend to
zero exactly when ``f`` tends to zero along the filter of density-one sets.
The filter side is probed one threshold at a time: ``f -> 0`` along the
filter iff every superlevel set ``{f >= eps}`` has density zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BoundViolationError
from .sequences import (
    DEFAULT_SCHEDULE,
    DEFAULT_TOL,
    ConvergenceVerdict,
    MeasureSequence,
    assess,
    validate_schedule,
)
from .sets import BoundedFunction

DEFAULT_EPS = (1e-1, 1e-2, 1e-3)
BOUND_SLACK = 1e-12


class Equivalence(str, Enum):
    BOTH_ZERO = "both-zero"
    BOTH_NONZERO = "both-nonzero"
    INCONSISTENT = "inconsistent"
    UNDECIDED = "undecided"


def _guarded(f: BoundedFunction, M: float):
    def g(points):
        vals = f(points)
        if vals.size and (np.min(vals) < 0 or np.max(vals) > M + BOUND_SLACK):
            raise BoundViolationError(
                f"{f.name} takes values in [{np.min(vals):.6g}, {np.max(vals):.6g}], outside [0, {M}]"
            )
        return vals
    return g


def _bound(f: BoundedFunction, M: float | None) -> float:
    return float(f.bound if M is None else M)


def kvn_lhs(f: BoundedFunction, nu: MeasureSequence, schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL,
            M: float | None = None) -> ConvergenceVerdict:
    """Averages ``integral f dnu_N`` along the schedule."""
    sched = validate_schedule(schedule)
    vals = nu.partial_integrals(_guarded(f, _bound(f, M)), sched)
    return assess([(N, v.real) for N, v in zip(sched, vals)], tol)


def _check_eps(eps_list) -> list[float]:
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0 for e in eps):
        raise ValueError(f"thresholds must be positive, got {eps}")
    asc = all(a < b for a, b in zip(eps, eps[1:]))
    desc = all(a > b for a, b in zip(eps, eps[1:]))
    if not (asc or desc):
        raise ValueError(f"thresholds must be sorted, got {eps}")
    return eps


def kvn_superlevel_densities(f: BoundedFunction, nu: MeasureSequence, eps_list=DEFAULT_EPS,
                             schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL,
                             M: float | None = None) -> list:
    """``(eps, verdict of nu_N({f >= eps}))`` for each threshold."""
    sched = validate_schedule(schedule)
    guarded = _guarded(f, _bound(f, M))
    out = []
    for eps in _check_eps(eps_list):
        vals = nu.partial_integrals(lambda h, e=eps: (guarded(h) >= e).astype(np.float64), sched)
        out.append((eps, assess([(N, v.real) for N, v in zip(sched, vals)], tol)))
    return out


@dataclass
class KvnReport:
    cesaro_side: ConvergenceVerdict
    filter_side: list
    equivalence_verdict: Equivalence
    bound: float
    chebyshev_ok: bool
    reverse_ok: bool
    details: str = ""


def kvn_report(f: BoundedFunction, M: float | None, nu: MeasureSequence, eps_list=DEFAULT_EPS,
               schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL) -> KvnReport:
    """Both sides of the equivalence plus the two finite-N inequalities behind its proof."""
    M = _bound(f, M)
    lhs = kvn_lhs(f, nu, schedule, tol, M)
    dens = kvn_superlevel_densities(f, nu, eps_list, schedule, tol, M)

    chebyshev_ok = True
    reverse_ok = True
    for eps, dv in dens:
        for (_, a), (_, d) in zip(lhs.values, dv.values):
            # nu_N({f >= eps}) <= (1/eps) int f dnu_N
            if d > a / eps + BOUND_SLACK:
                chebyshev_ok = False
            # int f dnu_N <= eps + M nu_N({f >= eps})
            if a > eps + M * d + BOUND_SLACK:
                reverse_ok = False

    lhs_zero = lhs.tends_to_zero(tol)
    lhs_nonzero = lhs.converged and abs(lhs.limit) >= tol
    dens_zero = [dv.tends_to_zero(tol) for _, dv in dens]
    dens_nonzero = [dv.converged and dv.limit >= tol for _, dv in dens]

    if lhs_zero and all(dens_zero):
        verdict, details = Equivalence.BOTH_ZERO, ""
    elif lhs_nonzero and any(dens_nonzero):
        verdict, details = Equivalence.BOTH_NONZERO, ""
    elif lhs_zero and any(dens_nonzero):
        bad = [e for (e, _), nz in zip(dens, dens_nonzero) if nz]
        verdict = Equivalence.INCONSISTENT
        details = f"averages vanish but superlevel sets at eps={bad} keep positive density"
    elif lhs_nonzero and all(dens_zero):
        eps_min, d_min = min((e, dv.last) for e, dv in dens)
        if lhs.limit > eps_min + M * d_min + tol:
            verdict = Equivalence.INCONSISTENT
            details = f"superlevel densities vanish but averages stay at {lhs.limit:.6g}"
        else:
            verdict = Equivalence.UNDECIDED
            details = "average below the smallest threshold; refine eps_list"
    else:
        verdict, details = Equivalence.UNDECIDED, "some side did not settle on the schedule"
    return KvnReport(lhs, dens, verdict, M, chebyshev_ok, reverse_ok, details)
