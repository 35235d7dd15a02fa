"""Contraction semigroups on finite-dimensional Hilbert spaces.

Three models are supported:

* :class:`PowerSystem` -- ``n -> T^n`` for ``n`` in the naturals, inside the
  integers, dual to the circle;
* :class:`SampledFlow` -- ``t -> exp(tA)`` for ``t >= 0``, inside the reals;
* :class:`FiniteAction` -- ``j -> U^j`` on ``Z_m`` with ``U^m = I``.

The space splits orthogonally into ``X1``, where the action is unitary, and
``X2``, where it is weakly stable.  ``X1`` is computed twice (from the
isometry kernels and from the unimodular eigenvectors) and the two results
must agree.  The unitary part is then diagonalized into eigenprojections,
each labelled by the character ``a`` of G with ``T_h x = <a, h> x``.

Inner products are linear in the first slot: ``(x|y) = y^H x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.linalg as sla
from scipy.stats import special_ortho_group, unitary_group

from . import groups as gr
from .errors import (
    ClusterAmbiguityError,
    NumericalInstabilityError,
    PreconditionError,
    StructuralError,
    SupportViolationError,
)
from .sequences import (
    DEFAULT_TOL,
    ConvergenceVerdict,
    MeasureSequence,
    UniformCount,
    asymptotic_invariance_probe,
    assess,
    circle_grid,
    dyadic,
    ergodicity_probe,
    validate_schedule,
)
from .sets import PointSet, evens, interval

CONTRACTION_TOL = 1e-8
TOL_UNIMOD = 1e-6
TOL_CLUSTER = 1e-6
KERNEL_RCOND = 1e-8
TOL_CROSSCHECK = 1e-8
TOL_GOLDSTEIN = 1e-2
GOLDSTEIN_SCHEDULE = tuple(dyadic(6, 14))
_BLOCK = 1024


def _matrix(a, name: str) -> np.ndarray:
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise StructuralError(f"{name} must be a nonempty square matrix, got shape {m.shape}")
    return m


@dataclass(eq=False)
class PowerSystem:
    T: np.ndarray

    def __post_init__(self):
        self.T = _matrix(self.T, "T")

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def pair(self):
        return gr.CircleInteger()

    def generators(self) -> list:
        return [self.T]


@dataclass(eq=False)
class SampledFlow:
    """``t -> exp(tA)``; contractive iff the Hermitian part of ``A`` is negative semidefinite."""

    A: np.ndarray

    def __post_init__(self):
        self.A = _matrix(self.A, "A")
        if np.max(np.linalg.eigvals(self.A).real) > CONTRACTION_TOL:
            raise StructuralError("the generator has positive spectral abscissa")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def pair(self):
        return gr.RealReal()

    def at(self, t: float) -> np.ndarray:
        return sla.expm(t * self.A)

    def generators(self) -> list:
        return [self.at(1.0)]


@dataclass(eq=False)
class FiniteAction:
    m: int
    U: np.ndarray

    def __post_init__(self):
        self.U = _matrix(self.U, "U")
        if np.max(np.abs(np.linalg.matrix_power(self.U, self.m) - np.eye(self.dim))) > CONTRACTION_TOL:
            raise StructuralError(f"U^{self.m} differs from the identity")

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def pair(self):
        return gr.CyclicCyclic(self.m)

    def generators(self) -> list:
        return [self.U]


ContractionSystem = Union[PowerSystem, SampledFlow, FiniteAction]


# ---------------------------------------------------------------------------
# Checks and splitting


@dataclass
class ContractionCheck:
    sigma_max: list
    flagged: list

    @property
    def ok(self) -> bool:
        return not any(self.flagged)


def contraction_check(sys: ContractionSystem) -> ContractionCheck:
    """Largest singular value of each generator, flagged above ``1 + 1e-8``."""
    sig = [float(np.linalg.norm(g, 2)) for g in sys.generators()]
    flagged = [s > 1.0 + CONTRACTION_TOL for s in sig]
    if isinstance(sys, SampledFlow):
        herm = 0.5 * (sys.A + sys.A.conj().T)
        flagged = [f or float(np.max(np.linalg.eigvalsh(herm))) > CONTRACTION_TOL for f in flagged]
    return ContractionCheck(sig, flagged)


def orth_complement(Q: np.ndarray, dim: int) -> np.ndarray:
    if Q.shape[1] == 0:
        return np.eye(dim, dtype=np.complex128)
    if Q.shape[1] == dim:
        return np.zeros((dim, 0), dtype=np.complex128)
    return sla.null_space(Q.conj().T)


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle between two column spans (``pi/2`` on a dimension mismatch)."""
    if A.shape[1] != B.shape[1]:
        return float(np.pi / 2)
    if A.shape[1] == 0:
        return 0.0
    return float(np.max(sla.subspace_angles(A, B)))


def isometric_subspace(sys: ContractionSystem) -> np.ndarray:
    """Joint kernel of ``T*^n T^n - I`` and ``T^n T*^n - I`` for ``n = 1..dim``."""
    T = sys.generators()[0]
    d = sys.dim
    eye = np.eye(d)
    blocks = []
    P = eye.astype(np.complex128)
    for _ in range(d):
        P = T @ P
        blocks.append(P.conj().T @ P - eye)
        blocks.append(P @ P.conj().T - eye)
    stack = np.vstack(blocks)
    _, s, vh = np.linalg.svd(stack)
    cutoff = KERNEL_RCOND * max(float(s[0]), 1.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def unimodular_eigenspace(sys: ContractionSystem, tol_unimod: float = TOL_UNIMOD) -> np.ndarray:
    """Orthonormal basis for the span of eigenvectors with ``|lambda| = 1``."""
    T = sys.generators()[0]
    lam, vecs = np.linalg.eig(T)
    sel = np.abs(np.abs(lam) - 1.0) < tol_unimod
    k = int(np.sum(sel))
    if k == 0:
        return np.zeros((sys.dim, 0), dtype=np.complex128)
    u, _, _ = np.linalg.svd(vecs[:, sel], full_matrices=False)
    return u[:, :k]


@dataclass
class SpectralSplit:
    x1_basis: np.ndarray
    x2_basis: np.ndarray
    projections: list = field(default_factory=list)  # (character, P)
    eigenvalues: list = field(default_factory=list)  # operator eigenvalue per projection
    crosscheck_angle: float = 0.0

    @property
    def dim_x1(self) -> int:
        return self.x1_basis.shape[1]

    @property
    def dim_x2(self) -> int:
        return self.x2_basis.shape[1]

    def projector_x1(self) -> np.ndarray:
        return self.x1_basis @ self.x1_basis.conj().T


def snf_decompose(sys: ContractionSystem, tol_crosscheck: float = TOL_CROSSCHECK,
                  tol_unimod: float = TOL_UNIMOD) -> SpectralSplit:
    """Unitary/weakly stable splitting, cross-checked against the unimodular eigenvectors."""
    x1 = isometric_subspace(sys)
    x1_eig = unimodular_eigenspace(sys, tol_unimod)
    angle = principal_angle(x1, x1_eig)
    if angle > tol_crosscheck:
        raise NumericalInstabilityError(
            f"isometric kernel has dimension {x1.shape[1]}, unimodular eigenspace {x1_eig.shape[1]}, "
            f"largest principal angle {angle:.3e} exceeds {tol_crosscheck:.1e}"
        )
    return SpectralSplit(x1, orth_complement(x1, sys.dim), crosscheck_angle=angle)


def _character_for(sys: ContractionSystem, lam: complex):
    if isinstance(sys, PowerSystem):
        theta = (-np.angle(lam) / (2 * np.pi)) % 1.0
        # snap rounding residue so that lambda = 1 reports the identity exactly
        return gr.CirclePoint(0.0 if min(theta, 1.0 - theta) < 1e-14 else theta)
    if isinstance(sys, SampledFlow):
        return gr.Real(-lam.imag / (2 * np.pi))
    k = int(np.rint(np.angle(lam) * sys.m / (2 * np.pi)))
    return gr.Residue(-k, sys.m)


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = list(groups.values())
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            gap = min(abs(values[i] - values[j]) for i in clusters[a] for j in clusters[b])
            if gap < 2 * tol:
                raise ClusterAmbiguityError(
                    f"eigenvalue clusters {gap:.3e} apart, below twice the merge tolerance {tol:.1e}; "
                    "adjust tol_cluster"
                )
    return clusters


def eigenprojections(sys: ContractionSystem, split: SpectralSplit | None = None,
                     tol_cluster: float = TOL_CLUSTER) -> list:
    """``(a, P_a)`` for every character ``a`` with a nonzero joint eigenspace."""
    if split is None:
        split = snf_decompose(sys)
    Q = split.x1_basis
    if Q.shape[1] == 0:
        split.projections, split.eigenvalues = [], []
        return []
    gen = sys.A if isinstance(sys, SampledFlow) else sys.generators()[0]
    B = Q.conj().T @ gen @ Q
    R, Z = sla.schur(B, output="complex")
    lam = np.diag(R)
    out = []
    for idx in _cluster(lam, tol_cluster):
        center = complex(np.mean(lam[idx]))
        if not isinstance(sys, SampledFlow):
            center /= abs(center)
        W = Q @ Z[:, idx]
        out.append((center, _character_for(sys, center), W @ W.conj().T))
    out.sort(key=lambda e: _sort_key(e[1]))
    split.projections = [(a, P) for _, a, P in out]
    split.eigenvalues = [lam_c for lam_c, _, _ in out]
    return list(split.projections)


def _sort_key(a):
    if isinstance(a, gr.CirclePoint):
        return a.theta
    if isinstance(a, gr.Real):
        return a.r
    return a.j


def spectral_split(sys: ContractionSystem, tol_crosscheck: float = TOL_CROSSCHECK,
                   tol_cluster: float = TOL_CLUSTER) -> SpectralSplit:
    split = snf_decompose(sys, tol_crosscheck)
    eigenprojections(sys, split, tol_cluster)
    return split


# ---------------------------------------------------------------------------
# Trajectories


def _trajectory_inner(E: np.ndarray, x: np.ndarray, y: np.ndarray, K: int) -> np.ndarray:
    """``(E^k x | y)`` for ``k = 0..K-1`` in blocks of fixed size, fixed order."""
    d = len(x)
    b = min(_BLOCK, K)
    X = np.empty((d, b), dtype=np.complex128)
    X[:, 0] = x
    for j in range(1, b):
        X[:, j] = E @ X[:, j - 1]
    EB = np.linalg.matrix_power(E, b)
    limit = np.linalg.norm(x) * (1 + 1e-6) + 1e-300
    out = np.empty(K, dtype=np.complex128)
    yh = y.conj()
    pos = 0
    while pos < K:
        take = min(b, K - pos)
        out[pos:pos + take] = yh @ X[:, :take]
        pos += take
        if pos < K:
            X = EB @ X
            if np.max(np.linalg.norm(X, axis=0)) > limit:
                raise NumericalInstabilityError("trajectory norm grew; the action is not contractive")
    return out


def _trajectory_values(sys: ContractionSystem, x, y, points) -> np.ndarray:
    if isinstance(sys, FiniteAction):
        pts = np.mod(np.asarray(points, dtype=np.int64), sys.m)
        traj = _trajectory_inner(sys.U, x, y, sys.m)
        return traj[pts]
    if isinstance(sys, PowerSystem):
        pts = np.asarray(points, dtype=np.int64)
        if pts.size and pts.min() < 0:
            raise SupportViolationError("the sequence charges negative integers, outside the naturals")
        top = int(pts.max()) + 1
        if top <= (1 << 24):
            return _trajectory_inner(sys.T, x, y, top)[pts]
        return np.array([np.vdot(y, np.linalg.matrix_power(sys.T, int(k)) @ x) for k in pts])
    pts = np.asarray(points, dtype=np.float64)
    if pts.size and pts.min() < 0:
        raise SupportViolationError("the sequence charges negative times, outside [0, oo)")
    if pts.size > 1:
        h = pts[1] - pts[0]
        grid = pts[0] + h * np.arange(pts.size)
        if pts[0] == 0.0 and h > 0 and np.allclose(pts, grid, rtol=0, atol=1e-9 * max(1.0, pts[-1])):
            return _trajectory_inner(sys.at(h), x, y, pts.size)
    return np.array([np.vdot(y, sys.at(float(t)) @ x) for t in pts])


def _check_pair(sys: ContractionSystem, nu: MeasureSequence) -> None:
    if nu.pair != sys.pair:
        raise StructuralError(f"the system acts through {sys.pair} but the sequence lives on {nu.pair}")


def _vec(v, dim: int) -> np.ndarray:
    a = np.asarray(v, dtype=np.complex128).ravel()
    if a.shape != (dim,):
        raise StructuralError(f"vector of length {dim} expected, got {a.shape}")
    return a


def goldstein_lhs(sys: ContractionSystem, x, y, nu: MeasureSequence, N: int) -> float:
    """``integral of |(T_m x|y)|^2 nu_N(dm)`` by direct summation over the support."""
    _check_pair(sys, nu)
    x, y = _vec(x, sys.dim), _vec(y, sys.dim)
    pts, w = nu.support(N)
    vals = _trajectory_values(sys, x, y, pts)
    return float(np.sum(w * (vals.real ** 2 + vals.imag ** 2)) / np.sum(w))


def goldstein_partials(sys: ContractionSystem, x, y, nu: MeasureSequence, schedule) -> list:
    sched = validate_schedule(schedule)
    _check_pair(sys, nu)
    if isinstance(nu, UniformCount) and isinstance(sys, PowerSystem):
        x, y = _vec(x, sys.dim), _vec(y, sys.dim)
        traj = _trajectory_inner(sys.T, x, y, sched[-1])
        sq = np.cumsum((traj.real ** 2 + traj.imag ** 2).astype(np.longdouble))
        return [float(sq[n - 1] / n) for n in sched]
    return [goldstein_lhs(sys, x, y, nu, N) for N in sched]


def goldstein_rhs(split: SpectralSplit, x, y) -> float:
    """``sum_a |(P_a x|y)|^2`` over the split's projections."""
    d = split.x1_basis.shape[0]
    x, y = _vec(x, d), _vec(y, d)
    return float(sum(abs(np.vdot(y, P @ x)) ** 2 for _, P in split.projections))


def _default_probe_inputs(sys: ContractionSystem, split: SpectralSplit):
    p = sys.pair
    chars = [a for a, _ in split.projections]
    grid = [gr.identity(p)]
    for a in chars:
        for b in chars:
            grid.append(gr.quotient(p, a, b))
    if isinstance(sys, PowerSystem):
        grid += circle_grid(16)
        shifts = [gr.Integer(1), gr.Integer(2)]
        sets = [evens(), interval(0, 10)]
    elif isinstance(sys, SampledFlow):
        grid += [gr.Real(k / 4) for k in range(-8, 9)]
        shifts = [gr.Real(0.5), gr.Real(1.0)]
        sets = [interval(0.0, 1.0), interval(0.0, 4.0)]
    else:
        grid += [gr.Residue(j, sys.m) for j in range(sys.m)]
        shifts = [gr.Residue(1, sys.m)]
        half = sys.m // 2
        sets = [PointSet(f"[0,{half})", lambda h: np.asarray(h) < half)]
    unique: list = []
    for g in grid:
        if not any(g == u for u in unique):
            unique.append(g)
    return unique, shifts, sets


@dataclass
class GoldsteinReport:
    lhs: ConvergenceVerdict
    rhs: float
    gaps: list  # (N, |lhs - rhs|)
    passed: bool
    split: SpectralSplit
    tol: float
    shrinking: bool


def goldstein_verify(sys: ContractionSystem, x, y, nu: MeasureSequence, schedule=GOLDSTEIN_SCHEDULE,
                     tol: float = TOL_GOLDSTEIN, probe_tol: float = DEFAULT_TOL, probe_schedule=None,
                     grid=None, shifts=None, sets=None, split: SpectralSplit | None = None) -> GoldsteinReport:
    """Compare ``lim int |(T_m x|y)|^2 dnu_N`` with ``sum_a |(P_a x|y)|^2``.

    The sequence must pass the ergodicity probe and the asymptotic
    invariance probe first.  PASS needs the final gap below ``tol`` and the
    gap shrinking across the last three schedule points.
    """
    sched = validate_schedule(schedule)
    _check_pair(sys, nu)
    if split is None:
        split = spectral_split(sys)
    d_grid, d_shifts, d_sets = _default_probe_inputs(sys, split)
    probe_sched = sched if probe_schedule is None else validate_schedule(probe_schedule)
    ergo = ergodicity_probe(nu, d_grid if grid is None else grid, probe_sched, probe_tol)
    if not ergo.ergodic_consistent:
        bad = [gr.format_element(g) for g, _ in ergo.nonvanishing] + [gr.format_element(g) for g in ergo.undecided]
        raise PreconditionError(f"ergodicity_probe failed at {bad}")
    inv = asymptotic_invariance_probe(nu, d_shifts if shifts is None else shifts,
                                      d_sets if sets is None else sets, probe_sched, probe_tol)
    if not inv.invariant:
        bad = [(gr.format_element(s), a) for s, a in inv.failing()]
        raise PreconditionError(f"asymptotic_invariance_probe failed for {bad}")

    rhs = goldstein_rhs(split, x, y)
    vals = goldstein_partials(sys, x, y, nu, sched)
    lhs = assess(list(zip(sched, vals)), probe_tol)
    gaps = [(N, abs(v - rhs)) for N, v in zip(sched, vals)]
    g3 = [g for _, g in gaps[-3:]]
    shrinking = len(g3) == 3 and g3[0] > g3[1] > g3[2]
    passed = g3[-1] < tol and shrinking
    return GoldsteinReport(lhs, rhs, gaps, passed, split, tol, shrinking)


def weak_stability_probe(sys: ContractionSystem, x, y, nu: MeasureSequence, schedule=GOLDSTEIN_SCHEDULE,
                         tol: float = DEFAULT_TOL) -> ConvergenceVerdict:
    """Averages of ``|(T_m x|y)|^2``; they tend to zero iff ``(T_m x|y) -> 0`` along the density filter."""
    sched = validate_schedule(schedule)
    return assess(list(zip(sched, goldstein_partials(sys, x, y, nu, sched))), tol)


# ---------------------------------------------------------------------------
# Planted systems


@dataclass
class PlantedSystem:
    """``T = V diag(unitary block, contraction block) V^H`` with the ground truth kept."""

    system: PowerSystem
    V: np.ndarray
    eigenvalues: np.ndarray  # planted unimodular operator eigenvalues, one per X1 coordinate

    @property
    def n_unit(self) -> int:
        return len(self.eigenvalues)

    @property
    def x1(self) -> np.ndarray:
        return self.V[:, : self.n_unit]

    def true_projections(self) -> list:
        """``(eigenvalue, rank-one projector)``; planted eigenvalues are pairwise distinct."""
        out = []
        for i, lam in enumerate(self.eigenvalues):
            v = self.V[:, i:i + 1]
            out.append((lam, v @ v.conj().T))
        return out


def _spread_angles(rng, k: int, min_gap: float) -> np.ndarray:
    for _ in range(10000):
        a = np.sort(rng.random(k))
        if k < 2:
            return a
        gaps = np.diff(np.append(a, a[0] + 1.0))
        if np.min(gaps) >= min_gap:
            return a
    raise ValueError(f"cannot place {k} angles at mutual distance {min_gap}")


def _chord(gap_in_turns: float) -> float:
    return 2.0 * np.sin(np.pi * gap_in_turns)


def planted_power_system(dim: int, angles=None, n_unit: int | None = None, contraction: float = 0.8,
                         contraction_kind: str = "unitary", seed=None, min_gap: float = 0.05) -> PlantedSystem:
    """Random conjugate of ``diag(exp(2 pi i angles)) + contraction * W``.

    ``angles`` fixes the unimodular eigenvalues; otherwise ``n_unit`` of
    them are drawn with pairwise turn distance at least ``min_gap``.
    ``contraction_kind`` picks ``W``: ``unitary``, ``rotation`` (real
    orthogonal) or ``random`` (a non-normal matrix of norm one).
    """
    rng = np.random.default_rng(seed)
    if angles is None:
        if n_unit is None:
            n_unit = int(rng.integers(1, dim))
        angles = _spread_angles(rng, n_unit, min_gap)
    angles = np.asarray(angles, dtype=np.float64)
    k = len(angles)
    if not 0 <= k <= dim:
        raise ValueError(f"{k} unimodular eigenvalues do not fit in dimension {dim}")
    lam = np.exp(2j * np.pi * angles)
    rest = dim - k
    if rest:
        if contraction_kind == "unitary":
            W = unitary_group.rvs(rest, random_state=rng) if rest > 1 else np.array([[np.exp(2j * np.pi * rng.random())]])
        elif contraction_kind == "rotation":
            W = special_ortho_group.rvs(rest, random_state=rng) if rest > 1 else np.array([[1.0]])
        elif contraction_kind == "random":
            W = rng.normal(size=(rest, rest)) + 1j * rng.normal(size=(rest, rest))
            W /= np.linalg.norm(W, 2)
        else:
            raise ValueError(f"unknown contraction kind {contraction_kind!r}")
        C = contraction * np.asarray(W, dtype=np.complex128)
    else:
        C = np.zeros((0, 0), dtype=np.complex128)
    D = sla.block_diag(np.diag(lam), C).astype(np.complex128)
    V = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.ones((1, 1), dtype=np.complex128)
    T = V @ D @ V.conj().T
    return PlantedSystem(PowerSystem(T), np.asarray(V, dtype=np.complex128), lam)


def random_unit_vector(dim: int, rng) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
