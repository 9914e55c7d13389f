import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsionlab.cusp_geometry import (BasedComplexR, TorusBundle, boundary_torsion, check_cover_degree_bound,
                                      check_cover_product_bound, check_side_covolumes, cheeger_consistency, cheeger_product,
                                      covolume, harmonic_complex, hermite_sublattices, period_integral_minus,
                                      period_integral_plus, period_matrix_rank, pm_split,
                                      random_based_complex, reidemeister_torsion, torus_cohomology,
                                      torus_volumes)
from torsionlab.quad_arith import ideal, ring_of_integers

BASES = [(1, (1, 0), (0, 1)), (1, (1, 1), (-1, 1)), (3, (1, 0), (0, 1))]


def bundle(D, g1, g2, m, dual="contragredient"):
    R = ring_of_integers(D)
    return TorusBundle(D, R(*g1), R(*g2), m, dual)


@pytest.mark.parametrize("D,g1,g2", BASES)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_rank_pattern(D, g1, g2, m):
    T = bundle(D, g1, g2, m)
    for f in ("E", "E*"):
        assert torus_cohomology(T, f).complex_ranks == (1, 2, 1)


def test_koszul_is_a_complex():
    T = bundle(1, (1, 0), (0, 1), 3)
    for f in ("E", "E*"):
        d0, d1 = T.koszul(f)
        assert not np.any(d1.dot(d0))


def test_periods_closed_forms():
    R = ring_of_integers(1)
    g = R(2, 1)
    plus = period_integral_plus(2, g)
    assert plus[2] == g.to_field().conj() and plus[0].is_zero() and plus[1].is_zero()
    minus = period_integral_minus(2, g)
    z = g.to_field()
    assert minus[0] == z and minus[1] == z * z and minus[2] == z * z * z * Fraction(1, 3)


@pytest.mark.parametrize("D,g1,g2", BASES)
@pytest.mark.parametrize("m", [1, 2])
def test_pm_projections(D, g1, g2, m):
    T = bundle(D, g1, g2, m)
    for f in ("E", "E*"):
        s = pm_split(T, f)
        P, Q = np.array(s.pr_plus, dtype=object), np.array(s.pr_minus, dtype=object)
        assert all(isinstance(x, Fraction) for x in P.flat)
        assert np.array_equal(P.dot(P), P) and np.array_equal(Q.dot(Q), Q)
        assert not np.any(P.dot(Q)) and np.array_equal(P + Q, np.eye(4, dtype=object))


def test_pm_split_rejects_weight_zero():
    with pytest.raises(ValueError):
        pm_split(bundle(1, (1, 0), (0, 1), 0))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_period_matrix_nondegenerate(m):
    for D, g1, g2 in BASES:
        T = bundle(D, g1, g2, m)
        assert period_matrix_rank(T, "E") == 4 and period_matrix_rank(T, "E*") == 4


@pytest.mark.parametrize("D,g1,g2", BASES)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_volume_identities(D, g1, g2, m):
    tv = torus_volumes(bundle(D, g1, g2, m))
    assert tv.full(0).squared * tv.full(2).squared == 1
    assert tv.full(1).squared == 1
    assert tv.side("plus").squared * tv.side("minus").squared >= 1


def test_inverse_transpose_dual_breaks_h1_volume_at_weight_two():
    tv = torus_volumes(bundle(1, (1, 0), (0, 1), 2, dual="inverse_transpose"))
    assert tv.full(1).squared != 1
    tv = torus_volumes(bundle(1, (1, 0), (0, 1), 1, dual="inverse_transpose"))
    assert tv.full(1).squared == 1


@pytest.mark.parametrize("D", [1, 3])
@pytest.mark.parametrize("m", [1, 2])
def test_doubling_power_law(D, m):
    R = ring_of_integers(D)
    base = TorusBundle(D, R(1), R.w(), m)
    cov = base.scaled(2)
    assert cov.vol_squared == 16 * base.vol_squared
    vb, vc = torus_volumes(base), torus_volumes(cov)
    # b_0 = b_2 = 4: H^0 grows by 4^(b_0/2), H^2 shrinks by the same factor
    assert vc.full(0).squared == vb.full(0).squared * 4 ** 4
    assert vc.full(2).squared * 4 ** 4 == vb.full(2).squared
    assert vc.full(1).squared == vb.full(1).squared


@pytest.mark.parametrize("D,g1,g2", BASES)
def test_cover_bounds_index_four(D, g1, g2):
    base = bundle(D, g1, g2, 2)
    bv = torus_volumes(base)
    for a, b, d in hermite_sublattices(4):
        cov = base.sublattice(a, b, d)
        for q in (0, 1, 2):
            assert check_cover_degree_bound(base, cov, q, 4, bv).holds
        assert check_cover_product_bound(base, cov, 4, bv).holds


def test_hermite_sublattice_counts():
    # sigma_1(n) sublattices of index n in Z^2
    assert len(hermite_sublattices(4)) == 7 and len(hermite_sublattices(9)) == 13


@pytest.mark.parametrize("D,g1,g2", BASES)
def test_side_covolume_constant_and_sublattice_bounds(D, g1, g2):
    rep = check_side_covolumes(bundle(D, g1, g2, 1), ms=(1, 2, 3))
    assert rep.holds and rep.C_P > 0


def test_covolume_helper():
    assert covolume([[1, 0], [0, 2]], [[1, 0], [0, 1]]) == pytest.approx(2)
    with pytest.raises(ValueError):
        covolume([[1, 1], [2, 2]], [[1, 0], [0, 1]])


def test_torsion_of_multiplication_by_k():
    for k in (1, 2, 5, 12):
        C = BasedComplexR([1, 1], [[[k]]], [[], []])
        assert abs(reidemeister_torsion(C, squared=True) - k) < 1e-30
        assert cheeger_consistency(C)


def test_random_based_complexes():
    rng = random.Random(0)
    for _ in range(30):
        C = random_based_complex(rng)
        C.check()
        assert cheeger_consistency(C)


@given(st.integers(0, 2 ** 32))
def test_random_based_complexes_property(seed):
    C = random_based_complex(random.Random(seed))
    assert cheeger_consistency(C)


@pytest.mark.parametrize("D", [1, 3])
@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_boundary_torsion_is_one(D, m):
    R = ring_of_integers(D)
    tau, C = boundary_torsion(TorusBundle(D, R(1), R.w(), m))
    assert abs(tau - 1) < 1e-9
    assert cheeger_consistency(C)


@given(st.floats(0, 6.28), st.floats(0, 6.28), st.floats(0, 6.28))
def test_boundary_torsion_unitary_invariance(a, b, c):
    # a random element of U(2) mixing the plus and minus lines
    u = [[mpmath.expj(a) * mpmath.cos(b), -mpmath.expj(c) * mpmath.sin(b)],
         [mpmath.expj(-c) * mpmath.sin(b), mpmath.expj(-a) * mpmath.cos(b)]]
    R = ring_of_integers(1)
    tau, _ = boundary_torsion(TorusBundle(1, R(1), R.w(), 1), unitary=u)
    assert abs(tau - 1) < 1e-9


def test_single_factor_torsion_matches_volumes():
    R = ring_of_integers(1)
    T = TorusBundle(1, R(1, 1), R(-1, 1), 2)
    C = harmonic_complex(T, "E")
    assert cheeger_consistency(C)
    tv = torus_volumes(T)
    coh = torus_cohomology(T, "E")
    expected = (tv.E[0].squared * tv.E[2].squared / tv.E[1].squared) * \
        Fraction(coh.torsion[1], coh.torsion[0] * coh.torsion[2]) ** 2
    assert abs(cheeger_product(C) - mpmath.mpf(expected.numerator) / expected.denominator) < 1e-20


def test_w_p():
    R = ring_of_integers(1)
    assert TorusBundle(1, R(1), R.w(), 1).w_P == 1
