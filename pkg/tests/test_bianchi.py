import random

import pytest
from hypothesis import given, strategies as st

from torsionlab.bianchi import (SL2Mat, SubgroupSpec, builtin_presentation, check_int2, coset_table,
                                cusp_words, cusps, evaluate, invert_word, is_member, is_torsion_free,
                                parse_subgroup, principal, reidemeister_schreier, schreier_generators,
                                transversal_matrices, unimodular_shape)
from torsionlab.integer_homology import GroupAction, fox_complex, group_homology
from torsionlab.quad_arith import congruence_index, ideal, ideals_up_to, ring_of_integers

DS = (1, 2, 3, 7, 11)


@pytest.mark.parametrize("D", DS)
def test_builtin_presentations_evaluate_to_identity(D):
    P = builtin_presentation(D)
    assert P.check()
    for r in P.relators:
        assert evaluate(r, P.generator_matrices).is_identity()


@pytest.mark.parametrize("D,expected", [(1, (0, (2, 2))), (2, (1, (6,))), (3, (0, (3,))),
                                        (7, (1, (4,))), (11, (1, (3,)))])
def test_abelianisations(D, expected):
    P = builtin_presentation(D)
    H = group_homology(P, GroupAction.trivial(P.generator_count), 1)
    assert (H.free_rank, H.torsion_factors) == expected


def test_sl2mat_rejects_bad_determinant():
    R = ring_of_integers(1)
    with pytest.raises(ValueError):
        SL2Mat.of(R, 2, 0, 0, 1)


@pytest.mark.parametrize("D", (1, 2, 3))
def test_coset_index_equals_congruence_index(D):
    R = ring_of_integers(D)
    P = builtin_presentation(D)
    for a in ideals_up_to(R, 50):
        if a.norm() > 30 and D != 1:
            continue
        T = coset_table(P, principal(a))
        assert T.index == congruence_index(a)


def _random_member(P, T, rng, length=4):
    gens = list(schreier_generators(P, T))
    g = gens[0] * gens[0].inv()
    for _ in range(length):
        h = rng.choice(gens)
        g = g * (h if rng.random() < 0.5 else h.inv())
    return g


@pytest.mark.parametrize("D,gen", [(1, (2, 1)), (3, (2, 1)), (2, (1, 1))])
def test_principal_subgroup_is_normal(D, gen):
    R = ring_of_integers(D)
    a = ideal(R, R(*gen))
    S = principal(a)
    P = builtin_presentation(D)
    T = coset_table(P, S)
    rng = random.Random(5)
    for _ in range(20):
        g = _random_member(P, T, rng)
        assert is_member(g, S)
        for x in P.generator_matrices:
            assert is_member(x * g * x.inv(), S)


def test_hecke_intersection_lies_in_hecke():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    S = parse_subgroup("hecke-intersect:1+i:base=2+i", 1)
    H = SubgroupSpec("hecke", S.ideal)
    T = coset_table(P, S)
    rng = random.Random(2)
    for _ in range(20):
        g = _random_member(P, T, rng)
        assert is_member(g, S) and is_member(g, H)


def test_schreier_generators_count_and_membership():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    S = principal(ideal(R, R(2, 1)))
    T = coset_table(P, S)
    SP = reidemeister_schreier(P, T)
    assert SP.generator_count == T.index * P.generator_count - (T.index - 1)
    for g in SP.generator_matrices:
        assert is_member(g, S)
    assert SP.check()


def test_rewrite_round_trip():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    T = coset_table(P, principal(ideal(R, R(2, 1))))
    SP = reidemeister_schreier(P, T)
    # a relator conjugated by a transversal word lies in the subgroup
    tw = T.transversal_word(7)
    word = tw + P.relators[1] + invert_word(tw)
    sub = SP.rewrite(word)
    assert evaluate(sub, SP.generator_matrices) == evaluate(word, P.generator_matrices)


@pytest.mark.parametrize("D,gen", [(1, (2, 1)), (3, (2, 1))])
def test_rs_abelianisation_independent_of_transversal(D, gen):
    R = ring_of_integers(D)
    P = builtin_presentation(D)
    S = principal(ideal(R, R(*gen)))
    letters = []
    for j in range(P.generator_count):
        letters += [j + 1, -(j + 1)]
    results = []
    for order in (letters, letters[::-1]):
        T = coset_table(P, S, order=order)
        SP = reidemeister_schreier(P, T)
        H = group_homology(SP, GroupAction.trivial(SP.generator_count), 1)
        results.append((H.free_rank, H.torsion_factors))
    assert results[0] == results[1]


def test_torsion_free_gate():
    R = ring_of_integers(1)
    assert not is_torsion_free(principal(ideal(R, R(1))))
    assert not is_torsion_free(principal(ideal(R, R(2))))
    assert not is_torsion_free(SubgroupSpec("hecke", ideal(R, R(2, 1))))
    assert is_torsion_free(principal(ideal(R, R(2, 1))))


@pytest.mark.parametrize("gen,kappa", [((2, 1), 6), ((3, 1), 18)])
def test_cusp_counts(gen, kappa):
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    S = principal(ideal(R, R(*gen)))
    T = coset_table(P, S)
    cs = cusps(S, T, P)
    assert len(cs) == kappa
    assert sum(c.orbit_size for c in cs) == T.index
    for c in cs:
        assert check_int2(S, T, c.coset)


def test_cusp_words_lie_in_subgroup():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    S = principal(ideal(R, R(2, 1)))
    T = coset_table(P, S)
    for c in cusps(S, T, P):
        for w in cusp_words(P, T, c):
            M = evaluate(w, P.generator_matrices)
            assert is_member(M, S) and M.trace() == R(2)


def test_cusp_shapes_match_ideal_lattice():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    for a in ideals_up_to(R, 10, 5):
        S = principal(a)
        T = coset_table(P, S)
        ref = unimodular_shape(a).tau
        taus = [unimodular_shape(c.parabolic_lattice).tau for c in cusps(S, T, P)]
        assert all(abs(t - ref) < 1e-12 for t in taus)


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(1, 3),
       st.complex_numbers(min_magnitude=0.2, max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_shape_invariant_under_basis_change_and_scaling(p, q, r, s, lam):
    w1, w2 = complex(1, 0.3), complex(0.4, 1.7)
    # unimodular change built from elementary moves
    a, b, c, d = 1, p, 0, 1
    a, b, c, d = a + q * c, b + q * d, c, d
    a, b, c, d = a, b, c + r * a, d + r * b
    v1, v2 = (a * w1 + b * w2) * lam, (c * w1 + d * w2) * lam
    t0 = unimodular_shape((w1, w2)).tau
    t1 = unimodular_shape((v1, v2)).tau
    assert abs(t0 - t1) < 1e-9


def test_exact_shapes():
    for D, expected in [(1, 1j), (3, complex(0.5, 3 ** 0.5 / 2))]:
        R = ring_of_integers(D)
        tau = unimodular_shape(ideal(R, R(1))).tau
        assert abs(tau - expected) < 1e-12
