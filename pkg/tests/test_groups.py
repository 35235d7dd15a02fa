import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wienerlab import groups as gr
from wienerlab.errors import StructuralError

CI, RR = gr.CircleInteger(), gr.RealReal()

thetas = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)
ints = st.integers(min_value=-10**6, max_value=10**6)
reals = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def test_pair_examples():
    assert abs(gr.pair(CI, gr.CirclePoint(0.25), gr.Integer(1)) - (-1j)) < 1e-15
    assert abs(gr.pair(RR, gr.Real(0.5), gr.Real(1.0)) - (-1)) < 1e-15
    for p, h in [(CI, gr.Integer(17)), (RR, gr.Real(3.7)), (gr.CyclicCyclic(5), gr.Residue(3, 5))]:
        assert gr.pair(p, gr.identity(p), h) == 1


def test_cyclic_pairing_sign():
    # <j, k> = exp(-2 pi i jk/m)
    z = gr.pair(gr.CyclicCyclic(4), gr.Residue(1, 4), gr.Residue(1, 4))
    assert abs(z - (-1j)) < 1e-15


def test_product_pairing_factorizes():
    p = gr.Product(CI, gr.CyclicCyclic(3))
    g = gr.TupleElement((gr.CirclePoint(0.3), gr.Residue(2, 3)))
    h = gr.TupleElement((gr.Integer(5), gr.Residue(1, 3)))
    expect = gr.pair(CI, g.items[0], h.items[0]) * gr.pair(gr.CyclicCyclic(3), g.items[1], h.items[1])
    assert abs(gr.pair(p, g, h) - expect) < 1e-15


def test_combine_examples():
    assert gr.combine(CI, gr.CirclePoint(0.75), gr.CirclePoint(0.5)) == gr.CirclePoint(0.25)
    assert gr.combine(CI, gr.Integer(3), gr.Integer(-3)) == gr.Integer(0)
    m3 = gr.CyclicCyclic(3)
    assert gr.combine(m3, gr.Residue(2, 3), gr.Residue(2, 3)) == gr.Residue(1, 3)


def test_invert_examples():
    assert gr.invert(CI, gr.CirclePoint(0.3)) == gr.CirclePoint(0.7)
    assert gr.invert(RR, gr.Real(2.5)) == gr.Real(-2.5)
    for p in (CI, RR, gr.CyclicCyclic(7)):
        assert gr.is_identity(p, gr.invert(p, gr.identity(p)))


def test_normalization():
    assert gr.CirclePoint(1.25).theta == 0.25
    assert gr.CirclePoint(-0.25).theta == 0.75
    assert gr.Residue(-1, 5).j == 4


def test_circle_equality_wraps_around():
    assert gr.CirclePoint(1e-12) == gr.CirclePoint(1 - 1e-12)
    assert gr.CirclePoint(0.1) != gr.CirclePoint(0.1 + 1e-9)


def test_mismatch_is_structural_error():
    with pytest.raises(StructuralError):
        gr.pair(CI, gr.Real(0.5), gr.Integer(1))
    with pytest.raises(StructuralError):
        gr.combine(CI, gr.Integer(1), gr.CirclePoint(0.5))
    with pytest.raises(StructuralError):
        gr.pair(gr.CyclicCyclic(3), gr.Residue(1, 4), gr.Residue(1, 3))


def test_cyclic_modulus_must_be_positive():
    with pytest.raises((StructuralError, ValueError)):
        gr.CyclicCyclic(0)


@pytest.mark.parametrize("text", ["circle:0.25", "int:-3", "real:1.5", "mod:2/5", "tuple:(circle:0.5,int:2)"])
def test_element_syntax_roundtrip(text):
    x = gr.parse_element(text)
    assert gr.parse_element(gr.format_element(x)) == x


def test_fraction_syntax():
    assert gr.parse_element("circle:1/3") == gr.CirclePoint(1 / 3)


@pytest.mark.parametrize("text", ["circle-integer", "real-real", "cyclic:6", "product(circle-integer,cyclic:3)"])
def test_pair_syntax(text):
    assert str(gr.parse_pair(text)) == text


@pytest.mark.parametrize("bad", ["circle", "mod:3", "tuple:circle:0", "foo:1"])
def test_bad_element_syntax(bad):
    with pytest.raises(StructuralError):
        gr.parse_element(bad)


@given(thetas, thetas, ints)
def test_character_law_circle(a, b, n):
    g, g2, h = gr.CirclePoint(a), gr.CirclePoint(b), gr.Integer(n)
    lhs = gr.pair(CI, gr.combine(CI, g, g2), h)
    assert abs(lhs - gr.pair(CI, g, h) * gr.pair(CI, g2, h)) < 1e-12


@given(reals, reals, st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_character_law_reals(a, b, s):
    g, g2, h = gr.Real(a), gr.Real(b), gr.Real(s)
    lhs = gr.pair(RR, gr.combine(RR, g, g2), h)
    # the oracle multiplies the exponentials directly
    rhs = cmath.exp(-2j * math.pi * a * s) * cmath.exp(-2j * math.pi * b * s)
    assert abs(lhs - gr.pair(RR, g, h) * gr.pair(RR, g2, h)) < 1e-12
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs((a + b) * s))


@given(thetas, ints)
def test_conjugation_law(a, n):
    g, h = gr.CirclePoint(a), gr.Integer(n)
    assert abs(gr.pair(CI, gr.invert(CI, g), h) - gr.pair(CI, g, h).conjugate()) < 1e-12


@given(st.integers(1, 40), st.integers(), st.integers(), st.integers())
def test_character_law_cyclic(m, j1, j2, k):
    p = gr.CyclicCyclic(m)
    a, b, h = gr.Residue(j1, m), gr.Residue(j2, m), gr.Residue(k, m)
    assert abs(gr.pair(p, gr.combine(p, a, b), h) - gr.pair(p, a, h) * gr.pair(p, b, h)) < 1e-12
    assert abs(abs(gr.pair(p, a, h)) - 1) < 1e-12


@given(thetas, ints)
def test_unit_modulus(a, n):
    assert abs(abs(gr.pair(CI, gr.CirclePoint(a), gr.Integer(n))) - 1) < 1e-12


@given(thetas, st.lists(st.integers(-2**62, 2**62), min_size=1, max_size=20))
def test_vectorized_character_matches_scalar(a, ns):
    import numpy as np

    vec = gr.character(CI, gr.CirclePoint(a), np.array(ns, dtype=np.int64))
    scal = [gr.pair(CI, gr.CirclePoint(a), gr.Integer(n)) for n in ns]
    assert np.max(np.abs(vec - np.array(scal))) < 1e-6
