"""Named indicator sets and bounded functions on the H side.

Everything here is vectorized over point arrays.  Sets return boolean
arrays, functions return float arrays.  Functions carry the bound ``M`` the
Koopman-von Neumann machinery needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import groups as gr


@dataclass(frozen=True)
class PointSet:
    name: str
    contains: Callable[[object], np.ndarray]
    bounded: bool = False

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.contains(points), dtype=bool)

    def indicator(self, points) -> np.ndarray:
        return self(points).astype(np.float64)

    def shifted(self, pair, n) -> "PointSet":
        """The set ``n^-1 A = {x : n x in A}``."""
        return PointSet(
            f"{gr.format_element(n)}^-1({self.name})",
            lambda pts: self.contains(gr.translate(pair, gr.H_SIDE, n, pts)),
            self.bounded,
        )


@dataclass(frozen=True)
class BoundedFunction:
    name: str
    func: Callable[[object], np.ndarray]
    bound: float

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.func(points), dtype=np.float64)


def everything() -> PointSet:
    return PointSet("everything", lambda x: np.ones(gr.n_points(x), dtype=bool))


def nothing() -> PointSet:
    return PointSet("empty", lambda x: np.zeros(gr.n_points(x), dtype=bool), bounded=True)


def residue_class(r: int, q: int) -> PointSet:
    return PointSet(f"{r} mod {q}", lambda x: np.mod(np.asarray(x, dtype=np.int64), q) == r % q)


def evens() -> PointSet:
    return PointSet("evens", residue_class(0, 2).contains)


def odds() -> PointSet:
    return PointSet("odds", residue_class(1, 2).contains)


def interval(a: float, b: float) -> PointSet:
    """Closed interval ``[a, b]`` of integers or reals."""
    return PointSet(f"[{a},{b}]", lambda x: (np.asarray(x) >= a) & (np.asarray(x) <= b), bounded=True)


def _isqrt_array(x: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(x.astype(np.float64))).astype(np.int64)
    # float sqrt can be off by one near perfect squares above 2**52
    r = np.where(r * r > x, r - 1, r)
    r = np.where((r + 1) * (r + 1) <= x, r + 1, r)
    return r


def _is_square(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros(x.shape, dtype=bool)
    nonneg = x >= 0
    r = _isqrt_array(np.where(nonneg, x, 0))
    out[nonneg] = (r * r == x)[nonneg]
    return out


def squares() -> PointSet:
    return PointSet("squares", _is_square)


@lru_cache(maxsize=8)
def prime_sieve(limit: int) -> np.ndarray:
    """Boolean array ``is_prime[0..limit]``."""
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return sieve


def _is_prime(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros(x.shape, dtype=bool)
    if x.size == 0:
        return out
    top = int(x.max())
    if top < 2:
        return out
    sieve = prime_sieve(1 << max(4, top.bit_length()))
    ok = x >= 0
    out[ok] = sieve[x[ok]]
    return out


def primes() -> PointSet:
    return PointSet("primes", _is_prime)


def powers_of_two() -> PointSet:
    def contains(x):
        x = np.asarray(x, dtype=np.int64)
        return (x > 0) & ((x & (x - 1)) == 0)

    return PointSet("powers-of-2", contains)


def from_indicator(s: PointSet) -> BoundedFunction:
    return BoundedFunction(f"1[{s.name}]", s.indicator, 1.0)


def harmonic() -> BoundedFunction:
    """``n -> 1/(n+1)`` on the nonnegative integers."""
    return BoundedFunction("1/(n+1)", lambda x: 1.0 / (np.asarray(x, dtype=np.float64) + 1.0), 1.0)


def raised_cosine(alpha: float, beta: float = 0.0) -> BoundedFunction:
    """``(1 + cos(2 pi (alpha n + beta))) / 2``, the real part of a character made nonnegative."""
    return BoundedFunction(
        f"raised-cos({alpha},{beta})",
        lambda x: 0.5 * (1.0 + np.cos(2.0 * np.pi * (gr.frac_mul(x, alpha) + beta))),
        1.0,
    )


def zero() -> BoundedFunction:
    return BoundedFunction("0", lambda x: np.zeros(gr.n_points(x)), 1.0)


def power_decay(p: float) -> BoundedFunction:
    """``n -> (n+1)^-p``."""
    return BoundedFunction(f"(n+1)^-{p}", lambda x: (np.asarray(x, dtype=np.float64) + 1.0) ** -p, 1.0)


BUILTIN_SETS = {
    "everything": everything,
    "empty": nothing,
    "evens": evens,
    "odds": odds,
    "squares": squares,
    "primes": primes,
    "powers-of-2": powers_of_two,
}


def parse_set(text: str) -> PointSet:
    """``evens``, ``squares``, ``mod(r,q)``, ``interval(a,b)`` and the other built-in names."""
    t = text.strip().lower().replace(" ", "")
    if t in BUILTIN_SETS:
        return BUILTIN_SETS[t]()
    if t.startswith("mod(") and t.endswith(")"):
        r, q = (int(v) for v in t[4:-1].split(","))
        return residue_class(r, q)
    if t.startswith("interval(") and t.endswith(")"):
        a, b = (float(v) for v in t[9:-1].split(","))
        return interval(a, b)
    raise ValueError(f"unknown set {text!r}")


def parse_function(text: str) -> BoundedFunction:
    """``indicator(<set>)``, ``harmonic``, ``zero``, ``raised-cos(alpha,beta)``, ``decay(p)``."""
    t = text.strip().lower().replace(" ", "")
    if t == "harmonic":
        return harmonic()
    if t == "zero":
        return zero()
    if t.startswith("indicator(") and t.endswith(")"):
        return from_indicator(parse_set(t[10:-1]))
    if t.startswith("raised-cos(") and t.endswith(")"):
        args = [float(v) for v in t[11:-1].split(",")]
        return raised_cosine(*args)
    if t.startswith("decay(") and t.endswith(")"):
        return power_decay(float(t[6:-1]))
    raise ValueError(f"unknown function {text!r}")
