"""Finite complex measures on the G side of a dual pair.

A measure is stored as a finite list of atoms plus an optional absolutely
continuous part.  On the circle the density is taken against normalized
arc length; on the reals it is taken against Lebesgue measure and must have
compact support.  Singular continuous parts are not representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import groups as gr
from .errors import OscillationError, StructuralError

PROBABILITY_ATOL = 1e-10
_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class Density:
    """Absolutely continuous part of a measure.

    ``func`` maps a float array of G points to density values.  Fourier
    evaluation at frequency ``h`` uses ``nodes_per_unit * (1 + |h|)`` nodes
    per unit length (periodic trapezoid on the circle, composite 16-point
    Gauss-Legendre on a real interval) and refuses ``|h| > band_limit``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (0.0, 1.0)
    band_limit: float = 4096.0
    tag: str = "custom"
    nodes_per_unit: int = 64
    quad_tol: float = 1e-10

    @staticmethod
    def haar() -> "Density":
        """Normalized arc length on the circle."""
        return Density(lambda t: np.ones_like(t), tag="haar")

    @staticmethod
    def cosine(k: int, amplitude: float) -> "Density":
        """``1 + amplitude * cos(2 pi k theta)`` on the circle."""
        return Density(
            lambda t: 1.0 + amplitude * np.cos(2.0 * np.pi * k * t),
            tag=f"cosine({k},{amplitude})",
        )

    @staticmethod
    def uniform(a: float, b: float, band_limit: float = 4096.0) -> "Density":
        """Normalized Lebesgue measure on ``[a, b]``."""
        if not b > a:
            raise StructuralError(f"empty interval [{a}, {b}]")
        w = 1.0 / (b - a)
        return Density(lambda s: np.full_like(s, w), support=(a, b), band_limit=band_limit,
                       tag=f"uniform({a},{b})")

    @staticmethod
    def sampled(values: Sequence[float], band_limit: float = 4096.0) -> "Density":
        """Periodic piecewise-linear interpolation of samples on a uniform circle grid."""
        v = np.asarray(values, dtype=np.float64)
        grid = np.arange(len(v) + 1) / len(v)
        vv = np.append(v, v[0])
        return Density(lambda t: np.interp(np.mod(t, 1.0), grid, vv), band_limit=band_limit,
                       tag=f"sampled({len(v)})")

    def nodes(self, pair, freq: float = 0.0):
        """Quadrature nodes and weights resolving frequency ``freq``."""
        per_unit = self.nodes_per_unit * (1 + int(math.ceil(abs(freq))))
        if isinstance(pair, gr.CircleInteger):
            m = per_unit
            return np.arange(m) / m, np.full(m, 1.0 / m)
        a, b = self.support
        panels = max(1, int(math.ceil((b - a) * per_unit / _GL_ORDER)))
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        return x, w

    def scaled(self, c: complex) -> "Density":
        f = self.func
        return Density(lambda t: c * f(t), self.support, self.band_limit,
                       f"{c}*{self.tag}", self.nodes_per_unit, self.quad_tol)


def _sum_densities(p: Density, q: Density) -> Density:
    f, g = p.func, q.func
    lo = min(p.support[0], q.support[0])
    hi = max(p.support[1], q.support[1])

    def func(t):
        t = np.asarray(t, dtype=np.float64)
        # a real density vanishes off its support
        fv = np.where((t >= p.support[0]) & (t <= p.support[1]), f(t), 0.0)
        gv = np.where((t >= q.support[0]) & (t <= q.support[1]), g(t), 0.0)
        return fv + gv

    return Density(func, (lo, hi), min(p.band_limit, q.band_limit), f"{p.tag}+{q.tag}",
                   max(p.nodes_per_unit, q.nodes_per_unit), max(p.quad_tol, q.quad_tol))


@dataclass(frozen=True, eq=False)
class ComplexMeasure:
    """Atomic part plus an optional density; duplicate atoms are merged on construction."""

    pair: gr.DualPair
    atoms: tuple = ()
    density: Density | None = None

    def __post_init__(self):
        merged: list[list] = []
        for point, weight in self.atoms:
            gr.check(self.pair, gr.G_SIDE, point)
            for entry in merged:
                if entry[0] == point:
                    entry[1] += complex(weight)
                    break
            else:
                merged.append([point, complex(weight)])
        atoms = tuple((pt, w) for pt, w in merged if w != 0)
        object.__setattr__(self, "atoms", atoms)
        if self.density is not None and not isinstance(self.pair, (gr.CircleInteger, gr.RealReal)):
            raise StructuralError(f"densities are only supported on the circle and the reals, not {self.pair}")

    @classmethod
    def dirac(cls, pair, point) -> "ComplexMeasure":
        return cls(pair, ((point, 1.0),))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=np.complex128)

    @property
    def points(self) -> list:
        return [a for a, _ in self.atoms]

    @property
    def is_discrete(self) -> bool:
        return self.density is None

    @property
    def is_dirac(self) -> bool:
        return self.density is None and len(self.atoms) == 1 and abs(self.atoms[0][1] - 1.0) <= PROBABILITY_ATOL

    def mass(self) -> complex:
        total = complex(self.weights.sum()) if self.atoms else 0j
        if self.density is not None:
            x, w = self.density.nodes(self.pair)
            total += complex(np.sum(w * self.density.func(x)))
        return total

    @property
    def is_probability(self) -> bool:
        w = self.weights
        if len(w) and (np.any(w.imag != 0) or np.any(w.real < 0)):
            return False
        if self.density is not None:
            x, _ = self.density.nodes(self.pair)
            vals = np.asarray(self.density.func(x))
            if np.iscomplexobj(vals) and np.any(vals.imag != 0):
                return False
            if np.any(np.real(vals) < 0):
                return False
        return abs(self.mass() - 1.0) <= PROBABILITY_ATOL

    def __add__(self, other: "ComplexMeasure") -> "ComplexMeasure":
        if not isinstance(other, ComplexMeasure):
            return NotImplemented
        if other.pair != self.pair:
            raise StructuralError(f"cannot add measures on {self.pair} and {other.pair}")
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            dens = _sum_densities(self.density, other.density)
        return ComplexMeasure(self.pair, self.atoms + other.atoms, dens)

    def __rmul__(self, c) -> "ComplexMeasure":
        c = complex(c)
        dens = None if self.density is None else self.density.scaled(c)
        return ComplexMeasure(self.pair, tuple((a, c * w) for a, w in self.atoms), dens)

    __mul__ = __rmul__


def atoms(mu: ComplexMeasure) -> list:
    return list(mu.atoms)


def total_variation(mu: ComplexMeasure) -> float:
    tv = float(np.abs(mu.weights).sum()) if mu.atoms else 0.0
    if mu.density is not None:
        x, w = mu.density.nodes(mu.pair, freq=15)
        tv += float(np.sum(w * np.abs(mu.density.func(x))))
    return tv


def _frequency(pair, h) -> float:
    return float(h.n) if isinstance(pair, gr.CircleInteger) else float(h.r)


def _density_fourier(mu: ComplexMeasure, h) -> complex:
    dens = mu.density
    freq = _frequency(mu.pair, h)
    if abs(freq) > dens.band_limit:
        raise OscillationError(
            f"frequency {freq} exceeds the band limit {dens.band_limit} of density {dens.tag}"
        )
    x, w = dens.nodes(mu.pair, freq)
    if isinstance(mu.pair, gr.CircleInteger):
        m = len(x)
        k = np.arange(m, dtype=np.int64)
        chi = gr.unit_phase(np.mod(k * (h.n % m), m) / m)
    else:
        chi = gr.character_on_g(mu.pair, x, h)
    return complex(np.sum(w * dens.func(x) * chi))


def fourier(mu: ComplexMeasure, h) -> complex:
    """``mu^(h) = integral of <g, h> mu(dg)``."""
    gr.check(mu.pair, gr.H_SIDE, h)
    total = 0j
    for a, w in mu.atoms:
        total += w * gr.pair(mu.pair, a, h)
    if mu.density is not None:
        total += _density_fourier(mu, h)
    return total


def fourier_array(mu: ComplexMeasure, hs) -> np.ndarray:
    """Vectorized Fourier transform over an H point array."""
    size = gr.n_points(hs)
    out = np.zeros(size, dtype=np.complex128)
    for a, w in mu.atoms:
        out += w * gr.character(mu.pair, a, hs)
    if mu.density is not None:
        if isinstance(hs, tuple):
            raise StructuralError("densities on product groups are not supported")
        for i in range(size):
            out[i] += _density_fourier(mu, gr.point_at(mu.pair, gr.H_SIDE, hs, i))
    return out
