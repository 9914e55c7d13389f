"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v`; the full suite takes roughly
six minutes on one core; the norm <= 13 growth sweep is the longest part.
"""
import math
import random
import time
from contextlib import contextmanager

import mpmath
import pytest

from torsionlab import growth_lab as gl
from torsionlab.bianchi import (builtin_presentation, check_presentation, coset_table, cusps,
                                is_torsion_free, principal, reidemeister_schreier, schreier_generators)
from torsionlab.cusp_geometry import (TorusBundle, boundary_torsion, check_cover_degree_bound, check_cover_product_bound,
                                      check_side_covolumes, cheeger_consistency, harmonic_complex,
                                      hermite_sublattices, random_based_complex, torus_volumes)
from torsionlab.integer_homology import check_span_certificate, group_homology
from torsionlab.quad_arith import congruence_index, ideals_up_to, reduction_image_size, ring_of_integers
from torsionlab.sym_modules import self_duality

RESULTS = {}


@contextmanager
def criterion(n, title):
    t0 = time.time()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"ACCEPTANCE {n:2d} FAIL  {title}  ({time.time() - t0:.1f}s) {type(exc).__name__}: {exc}"
        RESULTS[n] = line
        print("\n" + line)
        raise
    extra = " ".join(f"{k}={v}" for k, v in detail.items())
    line = f"ACCEPTANCE {n:2d} PASS  {title}  ({time.time() - t0:.1f}s) {extra}".rstrip()
    RESULTS[n] = line
    print("\n" + line)


def _generator_tuples(D):
    return [(g.a, g.b, g.c, g.d) for g in builtin_presentation(D).generator_matrices]


def test_01_index_formula():
    with criterion(1, "congruence index equals brute-force reduction image") as info:
        t0 = time.time()
        count = 0
        for D in (1, 2, 3):
            gens = _generator_tuples(D)
            for a in ideals_up_to(ring_of_integers(D), 50):
                assert reduction_image_size(a, gens) == congruence_index(a), (D, a.label())
                count += 1
        info["ideals"] = count
        assert time.time() - t0 < 120


def test_02_norm_below_index():
    with criterion(2, "N(a) <= [Gamma(D):Gamma(a)]") as info:
        count = 0
        for D in (1, 2, 3, 7, 11):
            gens = _generator_tuples(D)
            for a in ideals_up_to(ring_of_integers(D), 50 if D < 7 else 30):
                assert a.norm() <= reduction_image_size(a, gens) == congruence_index(a)
                count += 1
        # indices read off actual coset tables as well
        P = builtin_presentation(1)
        for a in ideals_up_to(ring_of_integers(1), 20):
            assert a.norm() <= coset_table(P, principal(a)).index
            count += 1
        info["cases"] = count


def test_03_presentations():
    with criterion(3, "built-in presentations evaluate relators to the identity"):
        t0 = time.time()
        for D in (1, 2, 3, 7, 11):
            assert check_presentation(builtin_presentation(D)), D
        assert time.time() - t0 < 1


def test_04_span_certificate():
    with criterion(4, "(m! a) Lambda_m inside span(rho(g) - I), D=1, N(a)<=25, 1<=m<=4") as info:
        t0 = time.time()
        R = ring_of_integers(1)
        P = builtin_presentation(1)
        count = 0
        for a in ideals_up_to(R, 25, 2):
            T = coset_table(P, principal(a))
            gens = list(schreier_generators(P, T))
            for m in range(1, 5):
                cert = check_span_certificate(a, m, gens)
                assert cert.holds, (a.label(), m)
                count += 1
        info["cases"] = count
        assert time.time() - t0 < 300


def test_05_self_duality():
    with criterion(5, "rho_m(A)/delta_D: Lambda_m onto Lambda_m^*, intertwining, m<=6") as info:
        count = 0
        for D in (1, 2, 3):
            for m in range(0, 7):
                iso = self_duality(m, D)
                assert abs(iso.determinant) == 1 and iso.intertwines, (D, m)
                count += 1
        info["cases"] = count


def test_06_cusp_rank_identity():
    with criterion(6, "rank H_1(Gamma(a); Lambda_m) = 2 kappa, D=1, N(a)<=10, m in {1,2}") as info:
        t0 = time.time()
        R = ring_of_integers(1)
        P = builtin_presentation(1)
        rows = []
        for a in ideals_up_to(R, 10, 2):
            spec = principal(a)
            if not is_torsion_free(spec):
                continue
            T = coset_table(P, spec)
            SP = reidemeister_schreier(P, T)
            kappa = len(cusps(spec, T, P))
            for m in (1, 2):
                H = group_homology(SP, m, 1)
                assert H.free_rank == 2 * kappa, (a.label(), m, H.free_rank, kappa)
                rows.append(f"{a.label()}:m{m}:{H.free_rank}")
        assert rows
        info["cases"] = ",".join(rows)
        assert time.time() - t0 < 600


BASES = {"O_1": (1, (1, 0), (0, 1)), "(1+i)": (1, (1, 1), (-1, 1)), "O_3": (3, (1, 0), (0, 1))}


def _bundle(D, g1, g2, m):
    R = ring_of_integers(D)
    return TorusBundle(D, R(*g1), R(*g2), m)


def test_07_covolume_bounds():
    with criterion(7, "cover covolume bounds, index {1,4,9}, m<=3, and the side covolume identities") as info:
        checks = 0
        for name, (D, g1, g2) in BASES.items():
            for m in (1, 2, 3):
                base = _bundle(D, g1, g2, m)
                bv = torus_volumes(base)
                for k in (1, 4, 9):
                    for a, b, d in hermite_sublattices(k):
                        cov = base.sublattice(a, b, d)
                        for q in (0, 1, 2):
                            assert check_cover_degree_bound(base, cov, q, k, bv).holds, (name, m, k, (a, b, d), q)
                            checks += 1
                        assert check_cover_product_bound(base, cov, k, bv).holds, (name, m, k, (a, b, d))
                        checks += 1
                        cv = torus_volumes(cov)
                        assert cv.full(0).squared * cv.full(2).squared == 1
                        assert cv.side("plus").squared * cv.side("minus").squared >= 1
                        checks += 2
            assert check_side_covolumes(_bundle(D, g1, g2, 1), ms=(1, 2, 3)).holds, name
            checks += 1
        info["checks"] = checks


def test_08_boundary_torsion():
    with criterion(8, "cusp-torus Reidemeister torsion equals 1, m<=3, O_1 and O_3") as info:
        worst = 0.0
        for D in (1, 3):
            R = ring_of_integers(D)
            for m in range(0, 4):
                tau, _ = boundary_torsion(TorusBundle(D, R(1), R.w(), m))
                err = abs(tau - 1)
                worst = max(worst, float(err))
                assert err < 1e-9, (D, m, tau)
        info["max_rel_error"] = f"{worst:.1e}"


def test_09_cheeger_consistency():
    with criterion(9, "determinant torsion equals torsion/covolume product") as info:
        rng = random.Random(20240101)
        for i in range(100):
            C = random_based_complex(rng, max_rank=6)
            assert cheeger_consistency(C, tol=1e-9), i
        tori = 0
        for name, (D, g1, g2) in BASES.items():
            for m in range(0, 4):
                T = _bundle(D, g1, g2, m)
                _, C = boundary_torsion(T)
                assert cheeger_consistency(C, tol=1e-9), (name, m)
                for f in ("E", "E*"):
                    assert cheeger_consistency(harmonic_complex(T, f), tol=1e-9), (name, m, f)
                tori += 3
        info["random"] = 100
        info["cusp_complexes"] = tori


def test_10_constants():
    with criterion(10, "analytic constants"):
        assert abs(gl.c_rho(1) - 1.5 * math.log(2)) < 1e-12
        assert abs(gl.t2_even(1) + 13 / (6 * math.pi)) < 1e-12
        assert abs(gl.humbert_volume(1) - float(mpmath.catalan) / 3) < 1e-8
        b = gl.predicted_bounds(1, 2).predicted_bound
        assert abs(b - 13 / (6 * math.pi) * gl.humbert_volume(1)) < 1e-12
        assert abs(b - 0.2106) < 1e-4


SWEEP = {}


def _norm13_sweep():
    if "records" not in SWEEP:
        t0 = time.time()
        cfg = gl.SweepConfig(1, max_norm=13, m_list=(2,), workers=1)
        SWEEP["records"], SWEEP["failures"] = gl.run_sweep(cfg)
        SWEEP["seconds"] = time.time() - t0
    return SWEEP


def test_11_growth_trend():
    with criterion(11, "growth trend report, D=1, m=2, N(a)<=13") as info:
        s = _norm13_sweep()
        recs = s["records"]
        assert recs
        print()
        print(gl.trend_report(recs))
        for f in s["failures"]:
            print(f"  skipped {f['ideal']}: {f['error']}")
        assert all(r.ratio > 0 for r in recs)
        assert all(r.checks_passed for r in recs), [r.ideal for r in recs if not r.checks_passed]
        assert s["seconds"] < 1800
        sl = {gl.band_position(r.ratio, r.bound_lower, r.bound_upper) for r in recs}
        psl = {gl.band_position(r.ratio_psl, r.bound_lower, r.bound_upper) for r in recs}
        info["records"] = len(recs)
        info["sl_index"] = "/".join(sorted(sl))
        info["psl_index"] = "/".join(sorted(psl))
        info["sweep_seconds"] = f"{s['seconds']:.0f}"


def test_12_determinism(tmp_path):
    with criterion(12, "identical configs give byte-identical CSV") as info:
        paths = []
        for run in ("a", "b"):
            p = tmp_path / f"{run}.csv"
            gl.run_sweep(gl.SweepConfig(1, max_norm=10, m_list=(1, 2), workers=1, csv_path=str(p)))
            paths.append(p)
        first, second = (p.read_bytes() for p in paths)
        assert first == second and len(first.splitlines()) > 1
        info["bytes"] = len(first)


@pytest.fixture(scope="module", autouse=True)
def _summary():
    yield
    print("\n" + "=" * 30 + " acceptance summary " + "=" * 30)
    for n in range(1, 13):
        print(RESULTS.get(n, f"ACCEPTANCE {n:2d} NOT RUN"))
