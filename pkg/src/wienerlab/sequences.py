"""Measure sequences on the H side of a dual pair.

A measure sequence is a descriptor ``N -> nu_N`` of probability measures.
Every kind exposes ``support(N)``, a finite list of points with nonnegative
raw weights whose normalization is ``nu_N`` itself for the discrete kinds and
a composite Simpson rule for the Lebesgue kinds.  Integration divides by the
raw weight total, so ``integrate(nu, N, 1)`` is exactly one for every kind.

Limits are never taken: ``c_estimate``, ``density_estimate`` and the probes
evaluate partial values along a schedule of ``N`` and hand them to
:func:`assess`, which applies a Cauchy test on the last three points.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import groups as gr
from .errors import StructuralError, UnboundedFunctionError
from .sets import PointSet, prime_sieve

DEFAULT_TOL = 1e-3
TOL_GAMMA = 1e-3
OVERFLOW_GUARD = 1e150


def dyadic(lo: int = 6, hi: int = 20) -> list[int]:
    return [1 << k for k in range(lo, hi + 1)]


DEFAULT_SCHEDULE = tuple(dyadic())


def validate_schedule(schedule: Sequence[int]) -> list[int]:
    sched = [int(n) for n in schedule]
    if not sched:
        raise ValueError("schedule is empty")
    if sched[0] < 1:
        raise ValueError(f"schedule entries must be positive, got {sched[0]}")
    for a, b in zip(sched, sched[1:]):
        if b <= a:
            raise ValueError(f"schedule must be strictly increasing, got {a} before {b}")
    return sched


# ---------------------------------------------------------------------------
# Convergence verdicts


class Status(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDECIDED = "undecided"


@dataclass
class ConvergenceVerdict:
    values: list
    status: Status
    limit: complex | float | None = None
    residual: float | None = None
    tol: float = DEFAULT_TOL

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def last(self):
        return self.values[-1][1]

    @property
    def schedule(self) -> list[int]:
        return [n for n, _ in self.values]

    def tends_to_zero(self, tol: float | None = None) -> bool:
        """Final value below ``tol`` and the last three moduli not increasing."""
        tol = self.tol if tol is None else tol
        mods = [abs(v) for _, v in self.values[-3:]]
        if mods[-1] >= tol:
            return False
        return self.converged or all(b <= a + tol / 10 for a, b in zip(mods, mods[1:]))

    def summary(self) -> str:
        if self.converged:
            return f"converged to {self.limit:.6g} (residual {self.residual:.3g})"
        return f"{self.status.value} (last value {self.last:.6g})"


def assess(values: list, tol: float = DEFAULT_TOL) -> ConvergenceVerdict:
    """Cauchy test on the last three schedule points.

    Converged when the last three partial values are pairwise within ``tol``;
    the limit estimate is the last value and the residual the last gap.
    Diverged when the spread of the last three is not below half the spread
    of the first three (needs six points); otherwise undecided.
    """
    if len(values) < 3:
        res = abs(values[-1][1] - values[-2][1]) if len(values) == 2 else None
        return ConvergenceVerdict(list(values), Status.UNDECIDED, None, res, tol)
    vs = [v for _, v in values]

    def spread(xs):
        return max(abs(a - b) for i, a in enumerate(xs) for b in xs[i + 1:])

    tail = vs[-3:]
    residual = abs(tail[2] - tail[1])
    if spread(tail) < tol:
        return ConvergenceVerdict(list(values), Status.CONVERGED, tail[2], residual, tol)
    if len(vs) >= 6 and spread(tail) >= 0.5 * spread(vs[:3]):
        return ConvergenceVerdict(list(values), Status.DIVERGED, None, residual, tol)
    return ConvergenceVerdict(list(values), Status.UNDECIDED, None, residual, tol)


# ---------------------------------------------------------------------------
# Subsequence generators


@dataclass(frozen=True)
class KGenerator:
    """Pure integer sequence ``N -> k_N`` for ``N >= 1``, vectorized."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, n) -> np.ndarray:
        return np.asarray(self.func(np.asarray(n, dtype=np.int64)), dtype=np.int64)


def nth_primes(n: np.ndarray) -> np.ndarray:
    top = int(np.max(n)) if np.size(n) else 1
    bound = 16 if top < 6 else int(top * (math.log(top) + math.log(math.log(top)))) + 1
    table = np.flatnonzero(prime_sieve(bound))
    return table[np.asarray(n) - 1]


_ALLOWED_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
                   ast.Pow: np.power, ast.FloorDiv: np.floor_divide, ast.Mod: np.mod}


def _compile_expr(node):
    if isinstance(node, ast.Expression):
        return _compile_expr(node.body)
    if isinstance(node, ast.Name) and node.id == "n":
        return lambda n: n
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        c = node.value
        return lambda n: np.full(np.shape(n), c, dtype=np.int64)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile_expr(node.operand)
        sign = -1 if isinstance(node.op, ast.USub) else 1
        return lambda n: sign * inner(n)
    if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
        op = _ALLOWED_BINOPS[type(node.op)]
        left, right = _compile_expr(node.left), _compile_expr(node.right)
        return lambda n: op(left(n), right(n))
    raise StructuralError(f"unsupported construct in subsequence formula: {ast.dump(node)}")


def parse_k(expr: str) -> KGenerator:
    """Integer formula in ``n`` (``n^2``, ``2n``, ``3n^2+1``, ``n-1``) or ``prime``."""
    text = expr.strip().replace(" ", "")
    if text in ("prime", "primes", "p_n"):
        return KGenerator("prime", nth_primes)
    py = text.replace("^", "**")
    py = re.sub(r"(\d)(n|\()", r"\1*\2", py)
    py = re.sub(r"\)(n|\d|\()", r")*\1", py)
    try:
        tree = ast.parse(py, mode="eval")
    except SyntaxError as exc:
        raise StructuralError(f"cannot parse subsequence formula {expr!r}: {exc.msg}") from None
    return KGenerator(text, _compile_expr(tree))


def polynomial(*coeffs: int) -> KGenerator:
    """``k_n = c0 + c1 n + c2 n^2 + ...``."""
    cs = [int(c) for c in coeffs]
    terms = [f"{c}n^{i}" for i, c in enumerate(cs) if c]
    name = "+".join(terms) if terms else "0"

    def func(n):
        out = np.zeros(np.shape(n), dtype=np.int64)
        for c in reversed(cs):
            out = out * n + c
        return out

    return KGenerator(name, func)


# ---------------------------------------------------------------------------
# Measure sequences


def _raw_integral(points, weights, f) -> complex:
    vals = np.asarray(f(points))
    if vals.shape != np.shape(weights):
        vals = np.broadcast_to(vals, np.shape(weights))
    if not np.all(np.isfinite(vals)) or (vals.size and np.max(np.abs(vals)) > OVERFLOW_GUARD):
        raise UnboundedFunctionError("integrand is not bounded on the support of the measure")
    return complex(np.sum(weights * vals)) / float(np.sum(weights))


class MeasureSequence:
    """Base class; subclasses provide ``support`` and may override the integrals."""

    pair: gr.DualPair = gr.CircleInteger()
    #: support points and weights are the measure itself, not a quadrature
    exact: bool = True
    #: the semigroup containing every support, ``"N"`` or ``"R+"`` or None
    semigroup: str | None = None

    def support(self, N: int):
        raise NotImplementedError

    def integrate(self, N: int, f) -> complex:
        if N < 1:
            raise ValueError(f"N must be positive, got {N}")
        pts, w = self.support(N)
        return _raw_integral(pts, w, f)

    def character_integral(self, g, N: int) -> complex:
        """``integral of <g, h> nu_N(dh)``."""
        gr.check(self.pair, gr.G_SIDE, g)
        if gr.is_exact_identity(g):
            return 1.0 + 0j
        return self.integrate(N, lambda h: gr.character(self.pair, g, h))

    def partial_integrals(self, f, schedule) -> list:
        return [self.integrate(N, f) for N in schedule]

    def partial_characters(self, g, schedule) -> list:
        gr.check(self.pair, gr.G_SIDE, g)
        if gr.is_exact_identity(g):
            return [1.0 + 0j for _ in schedule]
        return self.partial_integrals(lambda h: gr.character(self.pair, g, h), schedule)

    def measure_of(self, N: int, s: PointSet) -> float:
        return self.integrate(N, s.indicator).real


def _prefix_means(values: np.ndarray, schedule) -> list:
    """Means of the first N entries for each N in the schedule (extended precision prefix sums)."""
    n = np.asarray(list(schedule), dtype=np.int64)
    re_ = (np.cumsum(values.real.astype(np.longdouble))[n - 1] / n).astype(np.float64)
    if np.iscomplexobj(values):
        im_ = (np.cumsum(values.imag.astype(np.longdouble))[n - 1] / n).astype(np.float64)
        return [complex(a, b) for a, b in zip(re_.tolist(), im_.tolist())]
    return [complex(a) for a in re_.tolist()]


def _checked(vals) -> np.ndarray:
    vals = np.asarray(vals)
    if not np.all(np.isfinite(vals)) or (vals.size and np.max(np.abs(vals)) > OVERFLOW_GUARD):
        raise UnboundedFunctionError("integrand is not bounded on the support of the measure")
    return vals


class UniformCount(MeasureSequence):
    """``u_N``: uniform on ``{0, ..., N-1}`` in the integers."""

    semigroup = "N"

    def __init__(self):
        self.pair = gr.CircleInteger()

    def support(self, N):
        return np.arange(N, dtype=np.int64), np.ones(N)

    def partial_integrals(self, f, schedule):
        schedule = list(schedule)
        vals = _checked(f(np.arange(schedule[-1], dtype=np.int64)))
        return _prefix_means(vals, schedule)

    def __str__(self):
        return "uniform-count"


class FolnerInterval(MeasureSequence):
    """Normalized Lebesgue measure on ``[0, N]`` in the reals.

    Characters integrate in closed form; other integrands use composite
    Simpson on ``nodes_per_unit`` intervals per unit length.
    """

    exact = False
    semigroup = "R+"

    def __init__(self, nodes_per_unit: int = 64):
        self.pair = gr.RealReal()
        self.nodes_per_unit = int(nodes_per_unit) + int(nodes_per_unit) % 2

    def support(self, N):
        m = self.nodes_per_unit * N
        x = np.linspace(0.0, float(N), m + 1)
        w = np.full(m + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return x, w

    def character_integral(self, g, N):
        gr.check(self.pair, gr.G_SIDE, g)
        r = g.r
        if r == 0.0:
            return 1.0 + 0j
        z = -2j * math.pi * r * N
        if abs(z) < 1e-4:
            # (e^z - 1)/z by its series; dividing by a subnormal z overflows
            return complex(1 + z / 2 + z * z / 6 + z**3 / 24)
        # e^z - 1 from the exactly reduced phase, in half-angle form to avoid cancellation
        f = (g.exact * N) % 1
        phi = -2 * math.pi * float(f - 1 if f >= Fraction(1, 2) else f)
        return complex(-2 * math.sin(phi / 2) ** 2, math.sin(phi)) / z

    def partial_characters(self, g, schedule):
        return [self.character_integral(g, N) for N in schedule]

    def __str__(self):
        return "folner-interval"


class DeltaSubsequence(MeasureSequence):
    """``nu_N = delta_{k_N}`` in the integers."""

    def __init__(self, k: KGenerator | str):
        self.pair = gr.CircleInteger()
        self.k = parse_k(k) if isinstance(k, str) else k

    def support(self, N):
        return self.k(np.array([N])), np.ones(1)

    def __str__(self):
        return f"delta(k={self.k.name})"


class CyclicUniform(MeasureSequence):
    """Uniform measure on ``Z_m`` for every N."""

    def __init__(self, m: int):
        self.pair = gr.CyclicCyclic(m)
        self.m = self.pair.m

    def support(self, N):
        return np.arange(self.m, dtype=np.int64), np.ones(self.m)

    def __str__(self):
        return f"cyclic-uniform({self.m})"


def _merge_integer_support(pts: np.ndarray, w: np.ndarray):
    uniq, inv = np.unique(pts, return_inverse=True)
    return uniq, np.bincount(inv, weights=w)


class CesaroTransform(MeasureSequence):
    """``(C nu)_N = (1/N) sum_{n=1}^N nu_n``."""

    def __init__(self, inner: MeasureSequence):
        self.inner = inner
        self.pair = inner.pair
        self.exact = inner.exact
        self.semigroup = inner.semigroup

    def _cheap_inner_partials(self) -> bool:
        inner = self.inner
        return isinstance(inner, UniformCount) or (
            isinstance(inner, CesaroTransform) and isinstance(inner.inner, DeltaSubsequence))

    def support(self, N):
        if isinstance(self.inner, DeltaSubsequence):
            return self.inner.k(np.arange(1, N + 1)), np.ones(N)
        if isinstance(self.inner, UniformCount):
            # point k carries (1/N) sum_{n=k+1}^N 1/n
            tail = np.cumsum((1.0 / np.arange(N, 0, -1, dtype=np.longdouble)))[::-1]
            return np.arange(N, dtype=np.int64), (tail / N).astype(np.float64)
        chunks, weights = [], []
        for n in range(1, N + 1):
            p, w = self.inner.support(n)
            chunks.append(p)
            weights.append(w / np.sum(w))
        w = np.concatenate(weights)
        if isinstance(chunks[0], tuple):
            pts = tuple(np.concatenate([c[i] for c in chunks]) for i in range(len(chunks[0])))
            return pts, w
        pts = np.concatenate(chunks)
        if pts.dtype.kind == "i":
            return _merge_integer_support(pts, w)
        return pts, w

    def integrate(self, N, f):
        if self.exact:
            return super().integrate(N, f)
        return sum(self.inner.integrate(n, f) for n in range(1, N + 1)) / N

    def character_integral(self, g, N):
        if self.exact:
            return super().character_integral(g, N)
        return sum(self.inner.character_integral(g, n) for n in range(1, N + 1)) / N

    def partial_integrals(self, f, schedule):
        schedule = list(schedule)
        if isinstance(self.inner, DeltaSubsequence):
            vals = _checked(f(self.inner.k(np.arange(1, schedule[-1] + 1))))
            return _prefix_means(vals, schedule)
        if self._cheap_inner_partials():
            inner = np.array(self.inner.partial_integrals(f, range(1, schedule[-1] + 1)))
            return _prefix_means(inner, schedule)
        return super().partial_integrals(f, schedule)

    def partial_characters(self, g, schedule):
        if self._cheap_inner_partials() and not gr.is_exact_identity(g):
            return self.partial_integrals(lambda h: gr.character(self.pair, g, h), schedule)
        if not self.exact:
            schedule = list(schedule)
            inner = np.array([self.inner.character_integral(g, n) for n in range(1, schedule[-1] + 1)])
            return _prefix_means(inner, schedule)
        return super().partial_characters(g, schedule)

    def __str__(self):
        return f"cesaro({self.inner})"


class ProductSequence(MeasureSequence):
    """``(mu x nu)_N = mu_N x nu_N`` on the product pair."""

    def __init__(self, left: MeasureSequence, right: MeasureSequence):
        self.left, self.right = left, right
        self.pair = gr.Product(left.pair, right.pair)
        self.exact = left.exact and right.exact
        self.semigroup = None

    def support(self, N):
        pl, wl = self.left.support(N)
        pr, wr = self.right.support(N)
        nl, nr = gr.n_points(pl), gr.n_points(pr)
        il, ir = np.meshgrid(np.arange(nl), np.arange(nr), indexing="ij")
        il, ir = il.ravel(), ir.ravel()
        return (_take(pl, il), _take(pr, ir)), (wl[il] * wr[ir])

    def integrate_product(self, N, f_left, f_right) -> complex:
        """Integral of ``(x, y) -> f_left(x) f_right(y)`` by Fubini."""
        return self.left.integrate(N, f_left) * self.right.integrate(N, f_right)

    def character_integral(self, g, N):
        gr.check(self.pair, gr.G_SIDE, g)
        return self.left.character_integral(g.items[0], N) * self.right.character_integral(g.items[1], N)

    def partial_characters(self, g, schedule):
        gr.check(self.pair, gr.G_SIDE, g)
        a = self.left.partial_characters(g.items[0], schedule)
        b = self.right.partial_characters(g.items[1], schedule)
        return [x * y for x, y in zip(a, b)]

    def __str__(self):
        return f"product({self.left},{self.right})"


def _take(points, idx):
    if isinstance(points, tuple):
        return tuple(_take(p, idx) for p in points)
    return points[idx]


def cesaro(nu: MeasureSequence) -> CesaroTransform:
    return CesaroTransform(nu)


def product(nu1: MeasureSequence, nu2: MeasureSequence) -> ProductSequence:
    return ProductSequence(nu1, nu2)


def constant_delta(point: int = 0) -> DeltaSubsequence:
    return DeltaSubsequence(KGenerator(str(point), lambda n: np.full(np.shape(n), point, dtype=np.int64)))


def parse_sequence(text: str) -> MeasureSequence:
    """``uniform-count``, ``folner-interval``, ``delta(k=...)``, ``cesaro(<s>)``,
    ``product(<a>,<b>)``, ``cyclic-uniform(m)``."""
    t = text.strip()
    low = t.lower()
    if low == "uniform-count":
        return UniformCount()
    if low == "folner-interval":
        return FolnerInterval()
    if low.startswith("folner-interval(") and low.endswith(")"):
        return FolnerInterval(int(t[len("folner-interval("):-1]))
    if low.startswith("cyclic-uniform(") and low.endswith(")"):
        return CyclicUniform(int(t[len("cyclic-uniform("):-1]))
    if low.startswith("delta(") and low.endswith(")"):
        body = t[len("delta("):-1].strip()
        if not body.startswith("k="):
            raise StructuralError(f"delta sequence needs k=<formula>: {text!r}")
        return DeltaSubsequence(parse_k(body[2:]))
    if low.startswith("cesaro(") and low.endswith(")"):
        return CesaroTransform(parse_sequence(t[len("cesaro("):-1]))
    if low.startswith("product(") and low.endswith(")"):
        parts = gr._split_top(t[len("product("):-1])
        if len(parts) != 2:
            raise StructuralError(f"product sequence needs two factors: {text!r}")
        return ProductSequence(parse_sequence(parts[0]), parse_sequence(parts[1]))
    raise StructuralError(f"unknown measure sequence {text!r}")


# ---------------------------------------------------------------------------
# Operations


def integrate(nu: MeasureSequence, N: int, f) -> complex:
    return nu.integrate(N, f)


def c_estimate(nu: MeasureSequence, g, schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL) -> ConvergenceVerdict:
    """Partial values of ``integral <g, h> nu_N(dh)`` along the schedule."""
    sched = validate_schedule(schedule)
    vals = nu.partial_characters(g, sched)
    return assess(list(zip(sched, vals)), tol)


def density_estimate(nu: MeasureSequence, J: PointSet, schedule=DEFAULT_SCHEDULE,
                     tol: float = DEFAULT_TOL) -> ConvergenceVerdict:
    """Partial values of ``nu_N(J)`` along the schedule."""
    sched = validate_schedule(schedule)
    vals = [v.real for v in nu.partial_integrals(J.indicator, sched)]
    return assess(list(zip(sched, vals)), tol)


@dataclass
class InfinityReport:
    verdicts: list  # (set name, ConvergenceVerdict)
    goes_to_infinity: bool


def goes_to_infinity_probe(nu: MeasureSequence, compacts: Sequence[PointSet], schedule=DEFAULT_SCHEDULE,
                           tol: float = DEFAULT_TOL) -> InfinityReport:
    verdicts = []
    for K in compacts:
        verdicts.append((K.name, density_estimate(nu, K, schedule, tol)))
    return InfinityReport(verdicts, all(v.tends_to_zero() for _, v in verdicts))


@dataclass
class InvarianceReport:
    entries: list  # (shift, set name, ConvergenceVerdict of nu_N(n^-1 A) - nu_N(A))
    invariant: bool

    def failing(self) -> list:
        return [(s, a) for s, a, v in self.entries if not v.tends_to_zero()]


def asymptotic_invariance_probe(nu: MeasureSequence, shifts, sets: Sequence[PointSet], schedule=DEFAULT_SCHEDULE,
                                tol: float = DEFAULT_TOL) -> InvarianceReport:
    sched = validate_schedule(schedule)
    entries = []
    for n in shifts:
        gr.check(nu.pair, gr.H_SIDE, n)
        for A in sets:
            shifted = A.shifted(nu.pair, n)
            diffs = nu.partial_integrals(lambda h: shifted.indicator(h) - A.indicator(h), sched)
            entries.append((n, A.name, assess([(N, d.real) for N, d in zip(sched, diffs)], tol)))
    return InvarianceReport(entries, all(v.tends_to_zero() for _, _, v in entries))


@dataclass
class ErgodicityReport:
    grid: list
    verdicts: list  # (g, ConvergenceVerdict)
    identity_ok: bool
    nonvanishing: list = field(default_factory=list)
    undecided: list = field(default_factory=list)

    @property
    def ergodic_consistent(self) -> bool:
        """Consistent with ergodicity on this grid; never a proof."""
        return self.identity_ok and not self.nonvanishing and not self.undecided


def ergodicity_probe(nu: MeasureSequence, grid, schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL) -> ErgodicityReport:
    grid = list(grid)
    if not any(gr.is_identity(nu.pair, g) for g in grid):
        raise ValueError("the probe grid must contain the identity")
    verdicts, nonvanishing, undecided = [], [], []
    identity_ok = True
    for g in grid:
        v = c_estimate(nu, g, schedule, tol)
        verdicts.append((g, v))
        if gr.is_identity(nu.pair, g):
            identity_ok = identity_ok and v.converged and abs(v.limit - 1) < tol
        elif v.tends_to_zero(tol):
            continue
        elif v.converged:
            nonvanishing.append((g, v.limit))
        else:
            undecided.append(g)
    return ErgodicityReport(grid, verdicts, identity_ok, nonvanishing, undecided)


def gamma_probe(nu: MeasureSequence, grid, schedule=DEFAULT_SCHEDULE, tol: float = DEFAULT_TOL,
                tol_gamma: float = TOL_GAMMA) -> list:
    """Grid points whose c-value converges to the unit circle, with the limits."""
    out = []
    for g in grid:
        v = c_estimate(nu, g, schedule, tol)
        if v.converged and abs(abs(v.limit) - 1.0) < tol_gamma:
            out.append((g, v.limit))
    return out


def circle_grid(q: int) -> list:
    """``k/q`` for ``k = 0..q-1`` on the circle."""
    return [gr.CirclePoint(k / q) for k in range(q)]
