"""Dual pairs of locally compact abelian groups and their pairings.

Four models are supported: the circle against the integers, the reals
against themselves, a cyclic group against itself, and finite products of
these.  For every pair ``p`` the first group is called the G side and the
second the H side; measures live on G and measure sequences on H.

Elements are immutable values.  Circle points are stored as a phase
``theta`` in ``[0, 1)`` standing for ``exp(2 pi i theta)``, so the group law
is exact addition modulo one.  All pairings carry the minus sign of the
convention ``<lambda, n> = lambda ** -n``.

Besides the scalar operations there are vectorized helpers that work on
*point arrays*: a numpy array for a single factor (``int64`` for the
integers and residues, ``float64`` for the reals and the circle) or a tuple
of point arrays for a product.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import StructuralError

TWO_PI = 2.0 * math.pi
CIRCLE_ATOL = 1e-10

G_SIDE = "G"
H_SIDE = "H"


# ---------------------------------------------------------------------------
# Pairs


@dataclass(frozen=True)
class CircleInteger:
    """(T, Z) with <lambda, n> = lambda ** -n."""

    def __str__(self) -> str:
        return "circle-integer"


@dataclass(frozen=True)
class RealReal:
    """(R, R) with <r, s> = exp(-2 pi i r s)."""

    def __str__(self) -> str:
        return "real-real"


@dataclass(frozen=True)
class CyclicCyclic:
    """(Z_m, Z_m) with <j, k> = exp(-2 pi i j k / m)."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise StructuralError(f"cyclic modulus must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    def __str__(self) -> str:
        return f"cyclic:{self.m}"


@dataclass(frozen=True)
class Product:
    """Componentwise product of two pairs; the pairing multiplies."""

    left: "DualPair"
    right: "DualPair"

    def __str__(self) -> str:
        return f"product({self.left},{self.right})"


DualPair = Union[CircleInteger, RealReal, CyclicCyclic, Product]


# ---------------------------------------------------------------------------
# Elements


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    v = float(x)
    if not math.isfinite(v):
        raise StructuralError(f"group element needs a finite number, got {x!r}")
    return Fraction(v)


@dataclass(frozen=True, eq=False)
class CirclePoint:
    """``exp(2 pi i theta)``; the phase is also kept as an exact rational so the group law is exact."""

    theta: float
    exact: Fraction = field(init=False, repr=False)

    def __post_init__(self):
        e = _exact(self.theta) % 1
        object.__setattr__(self, "exact", e)
        object.__setattr__(self, "theta", float(e) if float(e) < 1.0 else 0.0)

    def __eq__(self, other):
        if not isinstance(other, CirclePoint):
            return NotImplemented
        return circle_distance(self.theta, other.theta) < CIRCLE_ATOL

    __hash__ = None

    @property
    def value(self) -> complex:
        return cmath.exp(1j * TWO_PI * self.theta)


@dataclass(frozen=True)
class Integer:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n:
            raise StructuralError(f"integer element needs an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class Real:
    r: float
    exact: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = _exact(self.r)
        object.__setattr__(self, "exact", e)
        object.__setattr__(self, "r", float(e))


@dataclass(frozen=True)
class Residue:
    j: int
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise StructuralError(f"residue modulus must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "j", int(self.j) % self.m)


@dataclass(frozen=True)
class TupleElement:
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


GroupElement = Union[CirclePoint, Integer, Real, Residue, TupleElement]


def circle_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


# ---------------------------------------------------------------------------
# Membership


def belongs(p: DualPair, side: str, x) -> bool:
    if side not in (G_SIDE, H_SIDE):
        raise ValueError(f"side must be 'G' or 'H', got {side!r}")
    if isinstance(p, CircleInteger):
        return isinstance(x, CirclePoint) if side == G_SIDE else isinstance(x, Integer)
    if isinstance(p, RealReal):
        return isinstance(x, Real)
    if isinstance(p, CyclicCyclic):
        return isinstance(x, Residue) and x.m == p.m
    if isinstance(p, Product):
        return (
            isinstance(x, TupleElement)
            and len(x.items) == 2
            and belongs(p.left, side, x.items[0])
            and belongs(p.right, side, x.items[1])
        )
    raise StructuralError(f"unsupported dual pair {p!r}")


def check(p: DualPair, side: str, x) -> None:
    if not belongs(p, side, x):
        raise StructuralError(f"{format_element(x) if _is_element(x) else x!r} is not on the {side} side of {p}")


def _is_element(x) -> bool:
    return isinstance(x, (CirclePoint, Integer, Real, Residue, TupleElement))


def side_of(p: DualPair, x) -> str:
    """Side of ``p`` that ``x`` lives on (G wins for self-dual pairs)."""
    if belongs(p, G_SIDE, x):
        return G_SIDE
    if belongs(p, H_SIDE, x):
        return H_SIDE
    raise StructuralError(f"{x!r} belongs to neither side of {p}")


def identity(p: DualPair, side: str = G_SIDE) -> GroupElement:
    if isinstance(p, CircleInteger):
        return CirclePoint(0.0) if side == G_SIDE else Integer(0)
    if isinstance(p, RealReal):
        return Real(0.0)
    if isinstance(p, CyclicCyclic):
        return Residue(0, p.m)
    if isinstance(p, Product):
        return TupleElement((identity(p.left, side), identity(p.right, side)))
    raise StructuralError(f"unsupported dual pair {p!r}")


def is_identity(p: DualPair, x) -> bool:
    """Identity up to the circle's comparison tolerance; use for grid bookkeeping."""
    return x == identity(p, side_of(p, x))


def is_exact_identity(x) -> bool:
    """Exactly the identity, so every character value at ``x`` is one."""
    if isinstance(x, (CirclePoint, Real)):
        return x.exact == 0
    if isinstance(x, Integer):
        return x.n == 0
    if isinstance(x, Residue):
        return x.j == 0
    return all(is_exact_identity(y) for y in x.items)


# ---------------------------------------------------------------------------
# Group law


def combine(p: DualPair, a, b) -> GroupElement:
    side = side_of(p, a)
    check(p, side, b)
    return _combine(p, a, b)


def _combine(p, a, b):
    if isinstance(a, CirclePoint):
        return CirclePoint(a.exact + b.exact)
    if isinstance(a, Integer):
        return Integer(a.n + b.n)
    if isinstance(a, Real):
        return Real(a.exact + b.exact)
    if isinstance(a, Residue):
        return Residue(a.j + b.j, a.m)
    return TupleElement(
        (_combine(p.left, a.items[0], b.items[0]), _combine(p.right, a.items[1], b.items[1]))
    )


def invert(p: DualPair, a) -> GroupElement:
    side_of(p, a)
    return _invert(a)


def _invert(a):
    if isinstance(a, CirclePoint):
        return CirclePoint(-a.exact)
    if isinstance(a, Integer):
        return Integer(-a.n)
    if isinstance(a, Real):
        return Real(-a.exact)
    if isinstance(a, Residue):
        return Residue(-a.j, a.m)
    return TupleElement(tuple(_invert(x) for x in a.items))


def quotient(p: DualPair, a, b) -> GroupElement:
    """``a * b^-1``."""
    return combine(p, a, invert(p, b))


# ---------------------------------------------------------------------------
# Pairing


def pair(p: DualPair, g, h) -> complex:
    """<g, h> for g on the G side and h on the H side of ``p``."""
    check(p, G_SIDE, g)
    check(p, H_SIDE, h)
    return complex(unit_phase(np.float64(_phase(p, g, h))))


def _phase(p, g, h) -> float:
    if isinstance(p, CircleInteger):
        return float((g.exact * h.n) % 1)
    if isinstance(p, RealReal):
        return float((g.exact * h.exact) % 1)
    if isinstance(p, CyclicCyclic):
        return ((g.j * h.j) % p.m) / p.m
    return (_phase(p.left, g.items[0], h.items[0]) + _phase(p.right, g.items[1], h.items[1])) % 1.0


_QUARTER_TURNS = np.array([1.0, -1j, -1.0, 1j])


def unit_phase(phi):
    """``exp(-2 pi i phi)``, exact at multiples of a quarter turn.

    The phase is split into the nearest quarter turn and a remainder in
    ``[-1/8, 1/8]``, so ``phi = 1/2`` gives exactly ``-1`` rather than
    ``-1 - 1.2e-16 i``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    q = np.rint(phi * 4.0)
    r = phi - q * 0.25
    t = TWO_PI * r
    return _QUARTER_TURNS[np.mod(q, 4).astype(np.int64)] * (np.cos(t) - 1j * np.sin(t))


_LIMB = 26
_MASK = (1 << _LIMB) - 1
_SCALE = float(1 << _LIMB)


def frac_mul(k, theta):
    """Fractional part of ``k * theta`` for integer ``k`` (any int64) and float ``theta``.

    ``k`` is cut into 26-bit limbs and each shifted copy ``frac(2**(26 i) theta)``
    into a 26-bit head and a short tail.  Head products are exact in binary
    floating point, so the absolute error stays within a few ulps of one
    regardless of the size of ``k``.  Broadcasts over arrays of either.
    """
    k = np.asarray(k, dtype=np.int64)
    t = np.mod(np.asarray(theta, dtype=np.float64), 1.0)
    acc = np.zeros(np.broadcast(k, t).shape)
    for i in range(3):
        limb = (k >> (_LIMB * i)) if i == 2 else ((k >> (_LIMB * i)) & _MASK)
        head = np.floor(t * _SCALE) / _SCALE
        tail = t - head
        limb_f = limb.astype(np.float64)
        acc += np.mod(limb_f * head, 1.0)
        acc += np.mod(limb_f * tail, 1.0)
        t = np.mod(t * _SCALE, 1.0)
    return np.mod(acc, 1.0)


def _circle_phase(g: "CirclePoint", hs):
    hs = np.asarray(hs, dtype=np.int64)
    # the stored float differs from the exact phase by at most half an ulp
    resid = float(g.exact - Fraction(g.theta))
    ph = frac_mul(hs, g.theta)
    if resid:
        ph = np.mod(ph + np.mod(hs.astype(np.float64) * resid, 1.0), 1.0)
    return ph


def phase_array(p: DualPair, g, hs):
    """Phases ``phi`` in [0, 1) with ``<g, h> = exp(-2 pi i phi)`` for an H point array."""
    if isinstance(p, CircleInteger):
        return _circle_phase(g, hs)
    if isinstance(p, RealReal):
        return np.mod(g.r * np.asarray(hs, dtype=np.float64), 1.0)
    if isinstance(p, CyclicCyclic):
        return np.mod(g.j * np.asarray(hs, dtype=np.int64), p.m) / p.m
    return np.mod(
        phase_array(p.left, g.items[0], hs[0]) + phase_array(p.right, g.items[1], hs[1]), 1.0
    )


def character(p: DualPair, g, hs) -> np.ndarray:
    """Vectorized ``h -> <g, h>`` over an H point array."""
    check(p, G_SIDE, g)
    return unit_phase(phase_array(p, g, hs))


def character_on_g(p: DualPair, gs, h) -> np.ndarray:
    """Vectorized ``g -> <g, h>`` over a G point array (single-factor pairs only)."""
    check(p, H_SIDE, h)
    if isinstance(p, CircleInteger):
        ph = frac_mul(np.int64(h.n), np.asarray(gs, dtype=np.float64))
    elif isinstance(p, RealReal):
        ph = np.mod(np.asarray(gs, dtype=np.float64) * h.r, 1.0)
    elif isinstance(p, CyclicCyclic):
        ph = np.mod(np.asarray(gs, dtype=np.int64) * h.j, p.m) / p.m
    else:
        raise StructuralError("G point arrays are only supported for single-factor pairs")
    return unit_phase(ph)


# ---------------------------------------------------------------------------
# Point arrays


def to_points(p: DualPair, side: str, elems):
    """Pack a list of elements of one side into a point array."""
    for x in elems:
        check(p, side, x)
    return _pack(p, side, list(elems))


def _pack(p, side, elems):
    if isinstance(p, Product):
        return (
            _pack(p.left, side, [x.items[0] for x in elems]),
            _pack(p.right, side, [x.items[1] for x in elems]),
        )
    if isinstance(p, CircleInteger) and side == G_SIDE:
        return np.array([x.theta for x in elems], dtype=np.float64)
    if isinstance(p, CircleInteger):
        return np.array([x.n for x in elems], dtype=np.int64)
    if isinstance(p, RealReal):
        return np.array([x.r for x in elems], dtype=np.float64)
    return np.array([x.j for x in elems], dtype=np.int64)


def point_at(p: DualPair, side: str, points, i: int) -> GroupElement:
    """Unpack entry ``i`` of a point array into an element."""
    if isinstance(p, Product):
        return TupleElement((point_at(p.left, side, points[0], i), point_at(p.right, side, points[1], i)))
    v = points[i]
    if isinstance(p, CircleInteger):
        return CirclePoint(float(v)) if side == G_SIDE else Integer(int(v))
    if isinstance(p, RealReal):
        return Real(float(v))
    return Residue(int(v), p.m)


def translate(p: DualPair, side: str, n, points):
    """Point array of ``n * x`` for every ``x`` in ``points``."""
    check(p, side, n)
    return _translate(p, side, n, points)


def _translate(p, side, n, points):
    if isinstance(p, Product):
        return (
            _translate(p.left, side, n.items[0], points[0]),
            _translate(p.right, side, n.items[1], points[1]),
        )
    if isinstance(n, CirclePoint):
        return np.mod(np.asarray(points, dtype=np.float64) + n.theta, 1.0)
    if isinstance(n, Integer):
        return np.asarray(points, dtype=np.int64) + n.n
    if isinstance(n, Real):
        return np.asarray(points, dtype=np.float64) + n.r
    return np.mod(np.asarray(points, dtype=np.int64) + n.j, n.m)


def n_points(points) -> int:
    if isinstance(points, tuple):
        return n_points(points[0])
    return len(points)


# ---------------------------------------------------------------------------
# Text syntax


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    return float(text)


def _split_top(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise StructuralError(f"unbalanced parentheses in {text!r}")
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise StructuralError(f"unbalanced parentheses in {text!r}")
    parts.append(text[start:])
    return [s.strip() for s in parts]


def parse_element(text: str) -> GroupElement:
    """Parse ``circle:0.25``, ``int:3``, ``real:1.5``, ``mod:2/5`` or ``tuple:(a, b)``."""
    text = text.strip()
    kind, sep, body = text.partition(":")
    if not sep:
        raise StructuralError(f"element {text!r} lacks a 'kind:' prefix")
    kind = kind.strip().lower()
    body = body.strip()
    try:
        if kind == "circle":
            return CirclePoint(_number(body))
        if kind == "int":
            return Integer(int(body))
        if kind == "real":
            return Real(_number(body))
        if kind == "mod":
            j, slash, m = body.partition("/")
            if not slash:
                raise StructuralError(f"residue {text!r} must read mod:j/m")
            return Residue(int(j), int(m))
        if kind == "tuple":
            if not (body.startswith("(") and body.endswith(")")):
                raise StructuralError(f"tuple {text!r} must be parenthesized")
            return TupleElement(tuple(parse_element(s) for s in _split_top(body[1:-1])))
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, StructuralError):
            raise
        raise StructuralError(f"malformed element {text!r}: {exc}") from None
    raise StructuralError(f"unknown element kind {kind!r} in {text!r}")


def format_element(x) -> str:
    if isinstance(x, CirclePoint):
        return f"circle:{x.theta!r}"
    if isinstance(x, Integer):
        return f"int:{x.n}"
    if isinstance(x, Real):
        return f"real:{x.r!r}"
    if isinstance(x, Residue):
        return f"mod:{x.j}/{x.m}"
    if isinstance(x, TupleElement):
        return "tuple:(" + ",".join(format_element(y) for y in x.items) + ")"
    raise StructuralError(f"not a group element: {x!r}")


_CYCLIC_RE = re.compile(r"^cyclic:(\d+)$")


def parse_pair(text: str) -> DualPair:
    """Parse ``circle-integer``, ``real-real``, ``cyclic:m`` or ``product(a,b)``."""
    t = text.strip().lower().replace(" ", "")
    if t == "circle-integer":
        return CircleInteger()
    if t == "real-real":
        return RealReal()
    mo = _CYCLIC_RE.match(t)
    if mo:
        return CyclicCyclic(int(mo.group(1)))
    if t.startswith("product(") and t.endswith(")"):
        parts = _split_top(t[len("product("):-1])
        if len(parts) != 2:
            raise StructuralError(f"product pair needs two factors: {text!r}")
        return Product(parse_pair(parts[0]), parse_pair(parts[1]))
    raise StructuralError(f"unknown dual pair {text!r}")
