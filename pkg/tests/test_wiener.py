import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wienerlab import groups as gr
from wienerlab import sequences as sq
from wienerlab import wiener as wn
from wienerlab.errors import NotGoodError, StructuralError
from wienerlab.measures import ComplexMeasure, Density, total_variation

CI, RR = gr.CircleInteger(), gr.RealReal()
u = sq.UniformCount()
even_cesaro = sq.cesaro(sq.DeltaSubsequence("2n"))
SCHED = sq.dyadic(6, 14)


def atoms_measure(*pairs):
    return ComplexMeasure(CI, tuple((gr.CirclePoint(t), w) for t, w in pairs))


def test_dirac_is_exactly_one():
    for nu in (u, sq.FolnerInterval(), even_cesaro, sq.cesaro(sq.DeltaSubsequence("n^2"))):
        pt = gr.Real(0.37) if nu.pair == RR else gr.CirclePoint(0.37)
        mu = ComplexMeasure.dirac(nu.pair, pt)
        for N in (1, 7, 64, 1000):
            assert wn.wiener_norm(mu, nu, N) == 1.0


def test_two_point_at_n2():
    mu = atoms_measure((0, 0.5), (0.5, 0.5))
    assert wn.wiener_norm(mu, u, 2) == 0.5


def test_arc_length_orthogonality_oracle():
    mu = ComplexMeasure(CI, (), Density.haar())
    for N in (1, 5, 40):
        assert abs(wn.wiener_norm(mu, u, N) - 1 / N) < 1e-12


def test_rhs_atomic_examples():
    assert wn.wiener_rhs_atomic(ComplexMeasure.dirac(CI, gr.CirclePoint(0.2))) == 1.0
    assert abs(wn.wiener_rhs_atomic(atoms_measure((0, 0.3), (0.25, 0.7))) - 0.58) < 1e-15
    assert wn.wiener_rhs_atomic(ComplexMeasure(CI, (), Density.haar())) == 0.0


def test_two_atoms_on_u_against_period_four_oracle():
    # |0.3 + 0.7 (-i)^n|^2 cycles through 1, 0.58, 0.16, 0.58
    mu = atoms_measure((0, 0.3), (0.25, 0.7))
    cycle = [1.0, 0.58, 0.16, 0.58]
    for N in (4, 100, 100_000, 100_003):
        oracle = sum(cycle[n % 4] for n in range(N)) / N
        assert abs(wn.wiener_norm(mu, u, N) - oracle) < 1e-12
    rep = wn.verify_wiener_theorem(mu, u, SCHED)
    assert rep.lhs.converged and abs(rep.lhs.limit - 0.58) < 1e-3
    assert rep.verdicts["atomic"] and rep.verdicts["pairing"] and rep.consistent
    assert rep.verdicts["extremal"] is False and rep.verdicts["dirac"] is True


def test_pairing_rhs_examples():
    mu = atoms_measure((0, 0.3), (0.25, 0.5j), (0.6, -0.2))
    assert abs(wn.wiener_rhs_pairing(mu, u, SCHED) - wn.wiener_rhs_atomic(mu)) < 1e-3
    witness = atoms_measure((0, 0.5), (0.5, 0.5))
    assert abs(wn.wiener_rhs_pairing(witness, even_cesaro, SCHED) - 1) < 1e-12
    assert wn.wiener_rhs_pairing(ComplexMeasure.dirac(CI, gr.CirclePoint(0.9)), u, SCHED) == 1


def test_pairing_rhs_not_good():
    # delta_N itself has no c-value at an irrational-ish angle
    nu = sq.DeltaSubsequence("n")
    mu = atoms_measure((0, 0.5), (0.3, 0.5))
    with pytest.raises(NotGoodError):
        wn.wiener_rhs_pairing(mu, nu, SCHED)


def test_pairing_rhs_needs_discrete():
    with pytest.raises(StructuralError):
        wn.wiener_rhs_pairing(ComplexMeasure(CI, (), Density.haar()), u, SCHED)


def test_pair_mismatch():
    with pytest.raises(StructuralError):
        wn.wiener_norm(ComplexMeasure.dirac(RR, gr.Real(0)), u, 4)


def test_non_dirac_extremal_for_even_cesaro():
    witness = atoms_measure((0, 0.5), (0.5, 0.5))
    rep = wn.verify_wiener_theorem(witness, even_cesaro, SCHED, grid=sq.circle_grid(8))
    assert rep.lhs.converged and abs(rep.lhs.limit - 1) < 1e-3
    v = rep.verdicts
    assert v["extremal"] and not v["is_dirac"] and v["atom_pairs"] and v["coset"]
    assert v["ergodic"] is False and v["dirac"] is None and rep.consistent


def test_dirac_report():
    rep = wn.verify_wiener_theorem(ComplexMeasure.dirac(CI, gr.CirclePoint(0.3)), u, SCHED)
    assert all(x == 1 for _, x in rep.lhs.values)
    assert rep.verdicts["dirac"] is True and rep.verdicts["extremal"] is True


def test_density_measure_report_skips_pairing():
    mu = 0.5 * ComplexMeasure(CI, (), Density.haar()) + 0.5 * ComplexMeasure.dirac(CI, gr.CirclePoint(0.1))
    rep = wn.verify_wiener_theorem(mu, u, [16, 32, 64, 128])
    assert rep.verdicts["pairing"] is None and rep.notes
    # transform is 1 at n = 0 and the lone atom's 1/2 character elsewhere
    for N, x in rep.lhs.values:
        assert abs(x - (0.25 + 0.75 / N)) < 1e-12


def test_extremality_examples():
    grid = sq.circle_grid(32)
    assert wn.extremality_check(u, grid, SCHED).extremal_for_discrete_consistent
    rep = wn.extremality_check(even_cesaro, grid, SCHED)
    assert [g.theta for g, *_ in rep.violators] == [0.5]
    assert rep.witnesses_confirmed
    rep = wn.extremality_check(sq.constant_delta(0), grid, sq.dyadic(6, 9))
    assert len(rep.violators) == 31 and rep.witnesses_confirmed


def test_extremality_grid_needs_identity():
    with pytest.raises(ValueError):
        wn.extremality_check(u, [gr.CirclePoint(0.5)])


atom_specs = st.lists(st.tuples(st.integers(0, 255), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=5)


def _measure(entries):
    return ComplexMeasure(CI, tuple((gr.CirclePoint(k / 256), complex(a, b)) for k, a, b in entries))


@given(atom_specs, st.sampled_from([u, even_cesaro, sq.cesaro(sq.DeltaSubsequence("n^2"))]),
       st.sampled_from([16, 256, 4096]))
def test_fubini_identity(entries, nu, N):
    mu = _measure(entries)
    assert abs(wn.wiener_norm(mu, nu, N) - wn.wiener_norm_fubini(mu, nu, N)) < 1e-10


@given(atom_specs, st.integers(1, 3000))
def test_norm_bounds(entries, N):
    mu = _measure(entries)
    w = wn.wiener_norm(mu, u, N)
    assert -1e-12 <= w <= total_variation(mu) ** 2 + 1e-3


@given(st.lists(st.tuples(st.integers(0, 63), st.floats(0.01, 1)), min_size=1, max_size=5))
def test_probability_limit_at_most_one(entries):
    total = sum(w for _, w in entries)
    mu = ComplexMeasure(CI, tuple((gr.CirclePoint(k / 64), w / total) for k, w in entries))
    v = wn.wiener_lhs(mu, even_cesaro, SCHED)
    if v.converged:
        assert v.limit <= 1 + 1e-3
    assert wn.wiener_rhs_atomic(mu) <= 1 + 1e-12


def test_atomic_equivalence_on_u_random():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        k = int(rng.integers(1, 6))
        q = int(rng.integers(2, 97))
        pts = rng.choice(q, size=min(k, q), replace=False)
        w = rng.random(len(pts))
        mu = ComplexMeasure(CI, tuple((gr.CirclePoint(int(p) / q), x / w.sum()) for p, x in zip(pts, w)))
        assert abs(wn.wiener_norm(mu, u, 2**16) - wn.wiener_rhs_atomic(mu)) < 1e-2


def test_reals_two_atoms_closed_form():
    mu = ComplexMeasure(RR, ((gr.Real(0.0), 0.5), (gr.Real(1.0), 0.5)))
    nu = sq.FolnerInterval()
    for N in (1, 3, 100):
        # (1/N) int_0^N |1 + e^{-2 pi i s}|^2 / 4 ds = 1/2 for integer N
        assert abs(wn.wiener_norm(mu, nu, N) - 0.5) < 1e-12
    mu2 = ComplexMeasure(RR, ((gr.Real(0.0), 0.5), (gr.Real(0.3), 0.5)))
    s = (np.arange(400_000) + 0.5) * (10 / 400_000)
    oracle = np.mean(np.abs(0.5 + 0.5 * np.exp(-2j * np.pi * 0.3 * s)) ** 2)
    assert abs(wn.wiener_norm(mu2, nu, 10) - oracle) < 1e-9
