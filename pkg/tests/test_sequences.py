import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wienerlab import groups as gr
from wienerlab import sequences as sq
from wienerlab.errors import StructuralError, UnboundedFunctionError
from wienerlab.sets import evens, everything, interval, odds, squares

CI = gr.CircleInteger()
u = sq.UniformCount()


def circ(t):
    return gr.CirclePoint(t)


# -- integrate ---------------------------------------------------------------


def test_integrate_examples():
    assert u.integrate(4, lambda n: n.astype(float)) == 1.5
    assert abs(sq.FolnerInterval().integrate(2, lambda s: s) - 1.0) < 1e-12


@pytest.mark.parametrize("nu", [
    sq.UniformCount(), sq.FolnerInterval(), sq.DeltaSubsequence("n^2"), sq.cesaro(sq.DeltaSubsequence("2n")),
    sq.CyclicUniform(5), sq.product(sq.UniformCount(), sq.UniformCount()), sq.cesaro(sq.cesaro(sq.DeltaSubsequence("n-1"))),
])
def test_probability(nu):
    for N in (1, 7, 64):
        assert nu.integrate(N, lambda h: np.ones(gr.n_points(h))) == 1


def test_unbounded_integrand_detected():
    with pytest.raises(UnboundedFunctionError), np.errstate(divide="ignore"):
        u.integrate(8, lambda n: 1.0 / (n - 3.0))
    with pytest.raises(UnboundedFunctionError):
        u.partial_integrals(lambda n: np.exp(n * 10.0), [64])


def test_invalid_N():
    with pytest.raises(ValueError):
        u.integrate(0, lambda n: n)


# -- schedules and verdicts --------------------------------------------------


def test_validate_schedule():
    assert sq.validate_schedule([1, 2, 5]) == [1, 2, 5]
    for bad in ([8, 4], [], [0, 3], [4, 4]):
        with pytest.raises(ValueError):
            sq.validate_schedule(bad)


def test_default_schedule_is_dyadic():
    assert sq.DEFAULT_SCHEDULE[0] == 64 and sq.DEFAULT_SCHEDULE[-1] == 2**20 and len(sq.DEFAULT_SCHEDULE) == 15


def test_assess_converged():
    v = sq.assess([(1, 0.3), (2, 0.5), (3, 0.5004), (4, 0.5001), (5, 0.5002)])
    assert v.converged and v.limit == 0.5002 and abs(v.residual - 1e-4) < 1e-12


def test_assess_diverged():
    vals = [(k, (-1) ** k) for k in range(8)]
    assert sq.assess(vals).status is sq.Status.DIVERGED


def test_assess_undecided_never_has_limit():
    v = sq.assess([(1, 1.0), (2, 0.5), (3, 0.25), (4, 0.125)])
    assert v.status is sq.Status.UNDECIDED and v.limit is None
    assert sq.assess([(1, 0.0), (2, 0.0)]).status is sq.Status.UNDECIDED


# -- c_estimate ----------------------------------------------------------------


def test_c_identity_exact():
    v = sq.c_estimate(u, circ(0))
    assert v.converged and all(z == 1 for _, z in v.values)


def test_c_half_geometric_oracle():
    sched = [64, 65, 128, 129, 256, 1000, 1001]
    v = sq.c_estimate(u, circ(0.5), sched)
    for N, z in v.values:
        oracle = sum((-1) ** n for n in range(N)) / N
        assert abs(z - oracle) < 1e-15
        if N % 2 == 0:
            assert z == 0


def test_c_weyl_squares_sqrt2():
    theta = math.sqrt(2) % 1
    sched = [250_000, 500_000, 1_000_000]
    v = sq.c_estimate(sq.cesaro(sq.DeltaSubsequence("n^2")), circ(theta), sched, tol=1e-2)
    # oracle: direct Weyl sum with exact integer squares reduced in extended precision
    n = np.arange(1, 1_000_001, dtype=np.int64)
    sq_mod = (n * n) % (1 << 40)
    phase = np.mod(sq_mod.astype(np.longdouble) * np.longdouble(theta), 1)
    oracle = np.mean(np.exp(-2j * np.pi * phase.astype(np.float64)))
    assert v.converged and abs(v.limit) < 1e-2
    assert abs(v.last - oracle) < 1e-6


def test_c_folner_closed_form():
    nu = sq.FolnerInterval()
    r, N = 0.37, 50
    z = nu.character_integral(gr.Real(r), N)
    # oracle: fine Riemann sum of exp(-2 pi i r s) on [0, N]
    s = (np.arange(2_000_000) + 0.5) * (N / 2_000_000)
    assert abs(z - np.mean(np.exp(-2j * np.pi * r * s))) < 1e-8


def test_c_folner_quadrature_agrees_with_closed_form():
    nu = sq.FolnerInterval()
    g = gr.Real(0.3)
    quad = sq.MeasureSequence.character_integral(nu, g, 10)
    assert abs(quad - nu.character_integral(g, 10)) < 1e-8


# -- density -----------------------------------------------------------------


def test_density_evens_counting_oracle():
    v = sq.density_estimate(u, evens())
    for N, d in v.values:
        assert d == math.ceil(N / 2) / N
    assert v.converged and abs(v.limit - 0.5) < 1e-12


def test_density_squares_counting_oracle():
    sched = [10, 100, 1000, 4097]
    v = sq.density_estimate(u, squares(), sched)
    for N, d in v.values:
        count = sum(1 for k in range(N) if math.isqrt(k) ** 2 == k)
        assert d == count / N


def test_density_everything():
    v = sq.density_estimate(u, everything(), [3, 17, 100])
    assert all(d == 1 for _, d in v.values)


# -- cesaro ------------------------------------------------------------------


def test_cesaro_of_shifted_delta_is_uniform():
    c = sq.cesaro(sq.DeltaSubsequence("n-1"))
    fs = [evens().indicator, squares().indicator, lambda h: gr.character(CI, circ(0.3), h)]
    for N in range(1, 65):
        for f in fs:
            assert abs(c.integrate(N, f) - u.integrate(N, f)) < 1e-14


def test_cesaro_of_constant_sequence():
    c = sq.cesaro(sq.constant_delta(5))
    f = lambda h: np.sin(np.asarray(h, dtype=float))
    for N in (1, 2, 10):
        assert c.integrate(N, f) == np.sin(5.0)


def test_double_cesaro_hand_expansion():
    cc = sq.cesaro(sq.cesaro(sq.DeltaSubsequence("n-1")))
    assert abs(cc.integrate(3, lambda n: n.astype(float)) - 0.5) < 1e-15


def test_cesaro_integration_identity():
    inner = sq.DeltaSubsequence("3n^2+1")
    c = sq.cesaro(inner)
    f = lambda h: np.cos(np.asarray(h, dtype=float))
    for N in (1, 5, 40):
        direct = sum(inner.integrate(n, f) for n in range(1, N + 1)) / N
        assert abs(c.integrate(N, f) - direct) < 1e-14


def test_cesaro_of_folner_matches_average():
    c = sq.cesaro(sq.FolnerInterval())
    g = gr.Real(0.2)
    direct = sum(sq.FolnerInterval().character_integral(g, n) for n in range(1, 9)) / 8
    assert abs(c.character_integral(g, 8) - direct) < 1e-15
    assert abs(c.partial_characters(g, [8])[0] - direct) < 1e-15


@pytest.mark.parametrize("nu,theta", [
    (sq.UniformCount(), 0.3),
    (sq.UniformCount(), 0.0),
    (sq.cesaro(sq.DeltaSubsequence("2n")), 0.5),
    (sq.cesaro(sq.DeltaSubsequence("2n")), 0.25),
])
def test_cesaro_consistency(nu, theta):
    sched = sq.dyadic(6, 14)
    v = sq.c_estimate(nu, circ(theta), sched)
    assert v.converged
    w = sq.c_estimate(sq.cesaro(nu), circ(theta), sched + [2**15])
    assert abs(w.last - v.limit) <= max(v.tol, 2 * v.residual)


# -- product -------------------------------------------------------------------


def test_product_factorizes_exactly():
    p = sq.product(sq.UniformCount(), sq.UniformCount())
    g = gr.TupleElement((circ(0.3), circ(0.71)))
    for N in (1, 5, 64, 100):
        brute = p.integrate(N, lambda h: gr.character(p.pair, g, h))
        fact = u.character_integral(circ(0.3), N) * u.character_integral(circ(0.71), N)
        assert p.character_integral(g, N) == fact
        assert abs(brute - fact) < 1e-13


def test_product_hand_sum():
    p = sq.product(sq.UniformCount(), sq.UniformCount())
    assert p.integrate(2, lambda h: (h[0] * h[1]).astype(float)) == 0.25


def test_product_with_constant_delta_embeds():
    p = sq.product(sq.UniformCount(), sq.constant_delta(0))
    f = lambda h: np.cos(np.asarray(h[0], dtype=float)) * (h[1] == 0)
    for N in (3, 10):
        assert abs(p.integrate(N, f) - u.integrate(N, lambda n: np.cos(n.astype(float)))) < 1e-14


# -- probes --------------------------------------------------------------------


def test_goes_to_infinity_examples():
    sched = [64, 128, 256, 512]
    rep = sq.goes_to_infinity_probe(u, [interval(0, 9)], sched)
    assert [d for _, d in rep.verdicts[0][1].values] == [10 / N for N in sched]
    rep = sq.goes_to_infinity_probe(sq.CyclicUniform(6), [everything()], sched)
    assert not rep.goes_to_infinity
    rep = sq.goes_to_infinity_probe(sq.DeltaSubsequence("n^2"), [interval(0, 100)], [11, 20, 40])
    assert rep.goes_to_infinity and all(d == 0 for _, d in rep.verdicts[0][1].values)


def test_asymptotic_invariance_examples():
    sched = sq.dyadic(6, 12)
    rep = sq.asymptotic_invariance_probe(u, [gr.Integer(1)], [evens()], sched)
    assert rep.invariant
    for N, d in rep.entries[0][2].values:
        assert abs(d) <= 1 / N
    rep = sq.asymptotic_invariance_probe(u, [gr.Integer(0)], [evens(), squares()], sched)
    assert all(d == 0 for _, _, v in rep.entries for _, d in v.values)
    rep = sq.asymptotic_invariance_probe(sq.DeltaSubsequence("2n"), [gr.Integer(1)], [evens()], sched)
    assert not rep.invariant
    assert all(d == -1 for _, d in rep.entries[0][2].values)


def test_shifted_set_semantics():
    # n^-1 A = {x : n + x in A}
    s = evens().shifted(CI, gr.Integer(1))
    assert list(s(np.arange(4))) == [False, True, False, True]
    assert list(odds()(np.arange(4))) == [False, True, False, True]


def test_ergodicity_examples():
    grid = sq.circle_grid(100)
    assert sq.ergodicity_probe(u, grid, sq.dyadic(6, 14)).ergodic_consistent
    rep = sq.ergodicity_probe(sq.cesaro(sq.DeltaSubsequence("2n")), sq.circle_grid(4), sq.dyadic(6, 14))
    assert not rep.ergodic_consistent
    assert [(g.theta, c) for g, c in rep.nonvanishing] == [(0.5, 1)]
    rep = sq.ergodicity_probe(sq.constant_delta(0), sq.circle_grid(8), sq.dyadic(6, 10))
    assert len(rep.nonvanishing) == 7


def test_ergodicity_needs_identity():
    with pytest.raises(ValueError):
        sq.ergodicity_probe(u, [circ(0.5)])


def test_gamma_probe_examples():
    sched = sq.dyadic(6, 14)
    assert [g.theta for g, _ in sq.gamma_probe(u, sq.circle_grid(32), sched)] == [0.0]
    found = sq.gamma_probe(sq.cesaro(sq.DeltaSubsequence("2n")), sq.circle_grid(32), sched)
    assert [g.theta for g, _ in found] == [0.0, 0.5]
    # closed under the group law
    a = found[1][0]
    assert gr.combine(CI, a, a) == found[0][0]
    assert len(sq.gamma_probe(sq.constant_delta(0), sq.circle_grid(32), sched)) == 32


# -- parsers -------------------------------------------------------------------


@pytest.mark.parametrize("expr,expect", [
    ("n^2", [1, 4, 9]), ("2n", [2, 4, 6]), ("3n^2+1", [4, 13, 28]), ("n-1", [0, 1, 2]), ("prime", [2, 3, 5]),
    ("2(n+1)", [4, 6, 8]),
])
def test_parse_k(expr, expect):
    assert list(sq.parse_k(expr)(np.array([1, 2, 3]))) == expect


def test_parse_k_rejects_code():
    with pytest.raises(StructuralError):
        sq.parse_k("__import__('os')")


def test_polynomial_generator():
    assert list(sq.polynomial(1, 0, 3)(np.array([0, 1, 2]))) == [1, 4, 13]


@pytest.mark.parametrize("text", [
    "uniform-count", "folner-interval", "delta(k=n^2)", "cesaro(delta(k=2n))", "cyclic-uniform(7)",
    "product(uniform-count,uniform-count)",
])
def test_parse_sequence(text):
    assert str(sq.parse_sequence(text)) == text


def test_nth_primes():
    assert list(sq.nth_primes(np.array([1, 10, 100, 1000]))) == [2, 29, 541, 7919]


# -- properties ----------------------------------------------------------------

sequences_ci = st.sampled_from([
    sq.UniformCount(), sq.DeltaSubsequence("n^2"), sq.cesaro(sq.DeltaSubsequence("2n")),
    sq.cesaro(sq.DeltaSubsequence("prime")),
])


@given(sequences_ci, st.floats(0, 1, exclude_max=True), st.integers(1, 3000))
def test_partial_c_bounded_and_conjugate(nu, theta, N):
    g = circ(theta)
    z = nu.character_integral(g, N)
    assert abs(z) <= 1 + 1e-12
    assert abs(nu.character_integral(gr.invert(CI, g), N) - z.conjugate()) < 1e-12


@given(st.floats(-50, 50), st.integers(1, 500))
def test_folner_conjugation(r, N):
    nu = sq.FolnerInterval()
    z = nu.character_integral(gr.Real(r), N)
    assert abs(z) <= 1 + 1e-12
    assert abs(nu.character_integral(gr.Real(-r), N) - z.conjugate()) < 1e-12


@given(st.integers(1, 12), st.integers(0, 11), st.integers(1, 5))
def test_cyclic_uniform_characters(m, j, N):
    nu = sq.CyclicUniform(m)
    z = nu.character_integral(gr.Residue(j, m), N)
    assert abs(z - (1.0 if j % m == 0 else 0.0)) < 1e-12


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_partials_match_pointwise_integrals(a, b):
    sched = [5, 17, 64]
    for nu in (u, sq.cesaro(sq.DeltaSubsequence("n^2"))):
        parts = nu.partial_characters(circ(a), sched)
        for N, z in zip(sched, parts):
            assert abs(z - nu.integrate(N, lambda h: gr.character(CI, circ(a), h))) < 1e-12


def test_tiny_nonzero_point_is_not_treated_as_identity():
    # equal to 0 under the grid tolerance, but its characters are not all one
    a = 2.0**-52
    nu = sq.cesaro(sq.DeltaSubsequence("n^2"))
    z = nu.partial_characters(circ(a), [64])[0]
    weights = nu.support(64)[1]
    oracle = np.sum(weights * np.exp(-2j * np.pi * a * nu.support(64)[0])) / np.sum(weights)
    assert abs(z.imag) > 1e-13 and abs(z - oracle) < 1e-15
    assert nu.character_integral(circ(0), 64) == 1


def _series_oracle(z: complex, terms: int = 40) -> complex:
    # (e^z - 1)/z = sum z^k / (k+1)!
    total, term = 0j, 1 + 0j
    for k in range(terms):
        total += term
        term *= z / (k + 2)
    return total


@pytest.mark.parametrize("r,N", [(1e-300, 1), (2.2250738585e-313, 3), (1.5e-5, 1), (1.6e-5, 1), (3e-5, 7), (0.02, 5)])
def test_folner_small_frequency(r, N):
    z = -2j * math.pi * r * N
    got = sq.FolnerInterval().character_integral(gr.Real(r), N)
    assert abs(got - _series_oracle(z)) < 1e-15
