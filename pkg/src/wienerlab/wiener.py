"""Wiener's lemma for measure sequences, as executable checks.

The central quantity is the Wiener norm ``||mu^||_N^2 = integral of
|mu^(h)|^2 nu_N(dh)``.  Its limit along a good sequence equals the double
integral of ``c_nu(g0 g1^-1)`` against ``mu x conj(mu)``; for ergodic
sequences that is the sum of squared atom masses.  Everything here compares
such limits at schedule scale and reports booleans, with ``None`` wherever a
limit could not be decided.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import groups as gr
from .errors import NotGoodError, StructuralError
from .measures import ComplexMeasure, fourier_array, total_variation
from .sequences import (
    DEFAULT_SCHEDULE,
    DEFAULT_TOL,
    ConvergenceVerdict,
    MeasureSequence,
    assess,
    c_estimate,
    ergodicity_probe,
    validate_schedule,
)

TOL_EXTREMAL = 1e-3


def _check_compatible(mu: ComplexMeasure, nu: MeasureSequence) -> None:
    if mu.pair != nu.pair:
        raise StructuralError(f"measure lives on {mu.pair} but the sequence on {nu.pair}")


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


def wiener_norm_fubini(mu: ComplexMeasure, nu: MeasureSequence, N: int) -> float:
    """``sum_{i,j} w_i conj(w_j) integral <g_i g_j^-1, h> nu_N(dh)`` for discrete ``mu``."""
    _check_compatible(mu, nu)
    if not mu.is_discrete:
        raise StructuralError("the double-atom form needs a purely atomic measure")
    total = 0j
    for gi, wi in mu.atoms:
        for gj, wj in mu.atoms:
            total += wi * np.conj(wj) * nu.character_integral(gr.quotient(mu.pair, gi, gj), N)
    return total.real


def wiener_norm(mu: ComplexMeasure, nu: MeasureSequence, N: int) -> float:
    """``integral of |mu^(h)|^2 nu_N(dh)``.

    Discrete sequences sum over their support.  Lebesgue sequences use the
    closed-form character integrals when ``mu`` is atomic and quadrature
    otherwise.
    """
    _check_compatible(mu, nu)
    if not nu.exact and mu.is_discrete:
        return wiener_norm_fubini(mu, nu, N)
    return nu.integrate(N, lambda h: _abs2(fourier_array(mu, h))).real


def wiener_partials(mu: ComplexMeasure, nu: MeasureSequence, schedule) -> list:
    _check_compatible(mu, nu)
    sched = validate_schedule(schedule)
    if not nu.exact and mu.is_discrete:
        return [wiener_norm_fubini(mu, nu, N) for N in sched]
    return [v.real for v in nu.partial_integrals(lambda h: _abs2(fourier_array(mu, h)), sched)]


def wiener_lhs(mu: ComplexMeasure, nu: MeasureSequence, schedule=DEFAULT_SCHEDULE,
               tol: float = DEFAULT_TOL) -> ConvergenceVerdict:
    sched = validate_schedule(schedule)
    return assess(list(zip(sched, wiener_partials(mu, nu, sched))), tol)


def wiener_rhs_atomic(mu: ComplexMeasure) -> float:
    """Sum of squared atom moduli."""
    return float(_abs2(mu.weights).sum()) if mu.atoms else 0.0


def _atom_quotient_c(mu, nu, schedule, tol):
    """c-verdicts for every ordered pair of atoms, computed once per distinct quotient."""
    cache: list = []
    table = {}
    for i, (gi, _) in enumerate(mu.atoms):
        for j, (gj, _) in enumerate(mu.atoms):
            q = gr.quotient(mu.pair, gi, gj)
            for qq, v in cache:
                if qq == q:
                    break
            else:
                v = c_estimate(nu, q, schedule, tol)
                cache.append((q, v))
            table[i, j] = v
    return table


def wiener_rhs_pairing(mu: ComplexMeasure, nu: MeasureSequence, schedule=DEFAULT_SCHEDULE,
                       tol: float = DEFAULT_TOL) -> complex:
    """``sum_{i,j} c_nu(g_i g_j^-1) w_i conj(w_j)`` from converged c-values."""
    _check_compatible(mu, nu)
    if not mu.is_discrete:
        raise StructuralError("the pairing sum needs a purely atomic measure")
    table = _atom_quotient_c(mu, nu, validate_schedule(schedule), tol)
    total = 0j
    w = mu.weights
    for (i, j), v in table.items():
        if not v.converged:
            g = gr.quotient(mu.pair, mu.atoms[i][0], mu.atoms[j][0])
            raise NotGoodError(
                f"c-value at {gr.format_element(g)} is {v.status.value}; "
                "the sequence is not good on the required set"
            )
        total += v.limit * w[i] * np.conj(w[j])
    return total


@dataclass
class WienerReport:
    lhs: ConvergenceVerdict
    rhs_atomic: float
    rhs_pairing: complex | None
    atom_pair_c: list = field(default_factory=list)  # ((g0, g1), limit or None)
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        """No checked implication of the theorem failed."""
        return all(self.verdicts.get(k) is not False for k in ("pairing", "atomic", "coset", "sufficiency", "dirac"))


def _extremal(lhs: ConvergenceVerdict, tol: float) -> bool | None:
    if not lhs.converged:
        return None
    if abs(lhs.limit - 1.0) >= tol:
        return False
    gaps = [abs(v - 1.0) for _, v in lhs.values[-3:]]
    return all(b <= a + tol / 10 for a, b in zip(gaps, gaps[1:]))


def verify_wiener_theorem(mu: ComplexMeasure, nu: MeasureSequence, schedule=DEFAULT_SCHEDULE,
                          tol: float = DEFAULT_TOL, tol_extremal: float = TOL_EXTREMAL,
                          grid=None) -> WienerReport:
    """Check every part of the generalized Wiener lemma on one (measure, sequence) pair.

    Verdict keys:

    ``pairing``     limit equals the c-weighted double atom sum (discrete mu)
    ``ergodic``     ergodicity probe on the atom quotients (plus ``grid``)
    ``atomic``      limit equals the sum of squared atoms, when ``ergodic``
    ``extremal``    limit is one, for probability measures
    ``atom_pairs``  c equals one on every atom quotient
    ``coset``       extremal implies ``atom_pairs``
    ``sufficiency`` ``atom_pairs`` implies extremal, for discrete probabilities
    ``dirac``       extremal iff Dirac, when ``ergodic``
    """
    sched = validate_schedule(schedule)
    _check_compatible(mu, nu)
    lhs = wiener_lhs(mu, nu, sched, tol)
    report = WienerReport(lhs, wiener_rhs_atomic(mu), None)
    v = report.verdicts
    v["is_dirac"] = mu.is_dirac
    v["probability"] = mu.is_probability

    bound = total_variation(mu) ** 2 + tol
    if any(not (-tol <= x <= bound) for _, x in lhs.values):
        report.notes.append("a partial Wiener norm left [0, ||mu||^2]")

    table = _atom_quotient_c(mu, nu, sched, tol) if mu.atoms else {}
    pair_c = {}
    for (i, j), cv in table.items():
        pair_c[i, j] = cv.limit if cv.converged else None
        report.atom_pair_c.append(((mu.atoms[i][0], mu.atoms[j][0]), pair_c[i, j]))

    if mu.is_discrete and pair_c and all(c is not None for c in pair_c.values()):
        w = mu.weights
        report.rhs_pairing = sum(c * w[i] * np.conj(w[j]) for (i, j), c in pair_c.items())
        v["pairing"] = abs(lhs.limit - report.rhs_pairing) < tol if lhs.converged else None
    elif mu.is_discrete and not pair_c:
        report.rhs_pairing = 0j
        v["pairing"] = abs(lhs.limit) < tol if lhs.converged else None
    else:
        v["pairing"] = None
        if not mu.is_discrete:
            report.notes.append("pairing form skipped: measure has a density")
        else:
            report.notes.append("pairing form skipped: some atom quotient c-value undecided")

    probe_grid = [gr.identity(mu.pair)] + [gr.quotient(mu.pair, a, b)
                                           for a, _ in mu.atoms for b, _ in mu.atoms]
    if grid is not None:
        probe_grid += list(grid)
    unique_grid: list = []
    for g in probe_grid:
        if not any(g == u for u in unique_grid):
            unique_grid.append(g)
    ergo = ergodicity_probe(nu, unique_grid, sched, tol)
    if ergo.undecided:
        v["ergodic"] = None
    else:
        v["ergodic"] = ergo.ergodic_consistent
    if v["ergodic"]:
        v["atomic"] = abs(lhs.limit - report.rhs_atomic) < tol if lhs.converged else None
    else:
        v["atomic"] = None

    if mu.is_probability:
        ext = _extremal(lhs, tol_extremal)
        v["extremal"] = ext
        atom_pairs = None
        if pair_c and all(c is not None for c in pair_c.values()):
            atom_pairs = all(abs(c - 1.0) < tol for c in pair_c.values())
        v["atom_pairs"] = atom_pairs
        v["coset"] = None if ext is None or (ext and atom_pairs is None) else (not ext or atom_pairs)
        if mu.is_discrete and atom_pairs is not None:
            v["sufficiency"] = None if (atom_pairs and ext is None) else (not atom_pairs or ext)
        else:
            v["sufficiency"] = None
        v["dirac"] = (ext == mu.is_dirac) if (v["ergodic"] and ext is not None) else None
    else:
        for k in ("extremal", "atom_pairs", "coset", "sufficiency", "dirac"):
            v[k] = None
    return report


@dataclass
class ExtremalityReport:
    grid: list
    violators: list  # (g, c limit, witness ConvergenceVerdict, witness confirmed)
    undecided: list

    @property
    def extremal_for_discrete_consistent(self) -> bool:
        return not self.violators and not self.undecided

    @property
    def witnesses_confirmed(self) -> bool:
        return all(ok for _, _, _, ok in self.violators)


def extremality_check(nu: MeasureSequence, grid, schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL,
                      tol_extremal: float = TOL_EXTREMAL) -> ExtremalityReport:
    """Search the grid for ``g != 1`` with ``c_nu(g) = 1`` and confirm each with a two-atom witness."""
    sched = validate_schedule(schedule)
    grid = list(grid)
    if not any(gr.is_identity(nu.pair, g) for g in grid):
        raise ValueError("the probe grid must contain the identity")
    one = gr.identity(nu.pair)
    violators, undecided = [], []
    for g in grid:
        if gr.is_identity(nu.pair, g):
            continue
        cv = c_estimate(nu, g, sched, tol)
        if not cv.converged:
            undecided.append(g)
            continue
        if abs(cv.limit - 1.0) < tol:
            witness = ComplexMeasure(nu.pair, ((one, 0.5), (g, 0.5)))
            wv = wiener_lhs(witness, nu, sched, tol)
            violators.append((g, cv.limit, wv, bool(_extremal(wv, tol_extremal))))
    return ExtremalityReport(grid, violators, undecided)
