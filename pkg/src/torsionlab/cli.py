"""Command line entry point: `torsionlab <subcommand> ...`."""
import argparse
import json
import random
import sys
import time

from . import growth_lab as gl
from .bianchi import (builtin_presentation, check_presentation, coset_table, cusps, is_torsion_free,
                      parse_subgroup, principal, reidemeister_schreier, unimodular_shape)
from .integer_homology import group_homology, snf, snf_naive, to_fmpz
from .quad_arith import congruence_index, count_sl2_residue, ideals_up_to, ring_of_integers


def _m_list(text):
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out += list(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def cmd_predict(args):
    c = gl.predicted_bounds(args.D, args.m)
    print(json.dumps({"D": c.D, "m": c.m, "t2_even": c.t2_even, "B_m": c.B_m, "c_rho": c.c_rho,
                      "vol_XD": c.vol_XD, "bound_lower": c.predicted_bound, "bound_upper": c.upper_bound,
                      "odd_band": c.odd_band, "note": c.note}, indent=2))
    return 0


def cmd_homology(args):
    spec = parse_subgroup(args.subgroup, args.D)
    P = builtin_presentation(args.D)
    T = coset_table(P, spec)
    SP = reidemeister_schreier(P, T)
    H = group_homology(SP, args.m, 1)
    row = {"D": args.D, "subgroup": spec.label(), "index": T.index, "m": args.m,
           "h1_rank": H.free_rank, "torsion_factors": list(H.torsion_factors),
           "log_torsion": H.log_torsion_order, "describe": H.describe()}
    if spec.kind != "hecke" and is_torsion_free(spec):
        row["kappa"] = len(cusps(spec, T, P))
    if args.format == "json":
        print(json.dumps(row, indent=2))
    else:
        keys = ["D", "subgroup", "index", "m", "h1_rank", "log_torsion", "describe"]
        print(",".join(keys))
        print(",".join(str(row[k]) for k in keys))
    return 0


def cmd_sweep(args):
    json_path = args.json or (args.out.rsplit(".", 1)[0] + ".json" if args.out else None)
    cfg = gl.SweepConfig(args.D, max_norm=args.max_norm, m_list=tuple(_m_list(args.m)),
                         kind=args.kind, base=args.base, workers=args.workers,
                         csv_path=args.out, json_path=json_path, checks=not args.no_checks)
    t0 = time.time()
    records, failures = gl.run_sweep(cfg)
    if args.out is None:
        sys.stdout.write(gl.records_csv(records))
    print(gl.trend_report(records), file=sys.stderr)
    for f in failures:
        print(f"skipped {f['ideal']} m={f['m']}: {f['error']}", file=sys.stderr)
    print(f"{len(records)} records in {time.time() - t0:.1f}s", file=sys.stderr)
    return 0 if all(r.checks_passed for r in records) else 1


def cmd_weights(args):
    recs = gl.weight_sweep(args.D, args.subgroup, args.m_max)
    text = gl.weights_csv(recs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if recs:
        print(f"band [vol/2pi, vol/pi] = [{recs[0].band_lower:.5f}, {recs[0].band_upper:.5f}]", file=sys.stderr)
    return 0


def cmd_cusp_shapes(args):
    R = ring_of_integers(args.D)
    P = builtin_presentation(args.D)
    print("ideal,norm,index,kappa,tau_re,tau_im")
    for a in ideals_up_to(R, args.max_norm, 2):
        spec = principal(a)
        if not is_torsion_free(spec):
            continue
        T = coset_table(P, spec)
        cs = cusps(spec, T, P)
        shapes = sorted({(round(s.tau.real, 12), round(s.tau.imag, 12))
                         for s in (unimodular_shape(c.parabolic_lattice) for c in cs)})
        for re, im in shapes:
            print(f"{a.label()},{a.norm()},{T.index},{len(cs)},{re},{im}")
    return 0


def _verify_snf():
    rng = random.Random(7)
    for _ in range(30):
        r, c = rng.randint(1, 6), rng.randint(1, 6)
        A = [[rng.randint(-5, 5) for _ in range(c)] for _ in range(r)]
        if snf(to_fmpz(A)).invariant_factors != snf_naive(A).invariant_factors:
            return False
    return True


def _verify_cusp():
    R = ring_of_integers(1)
    P = builtin_presentation(1)
    from .quad_arith import ideal
    a = ideal(R, R(2, 1))
    T = coset_table(P, principal(a))
    return T.index == count_sl2_residue(a) == congruence_index(a) and len(cusps(principal(a), T, P)) == 6


def _verify_torsion():
    from .cusp_geometry import TorusBundle, boundary_torsion, cheeger_consistency, random_based_complex
    rng = random.Random(3)
    ok = all(cheeger_consistency(random_based_complex(rng)) for _ in range(20))
    for D in (1, 3):
        R = ring_of_integers(D)
        tau, C = boundary_torsion(TorusBundle(D, R(1), R.w(), 2))
        ok = ok and abs(tau - 1) < 1e-9 and cheeger_consistency(C)
    return ok


def _verify_bounds():
    from .cusp_geometry import TorusBundle, check_cover_degree_bound, check_cover_product_bound, torus_volumes
    R = ring_of_integers(1)
    base = TorusBundle(1, R(1), R.w(), 2)
    bv = torus_volumes(base)
    ok = True
    for k in (1, 4):
        for a, b, d in [(1, 0, k), (k, 0, 1)]:
            cov = base.sublattice(a, b, d)
            ok = ok and all(check_cover_degree_bound(base, cov, q, k, bv).holds for q in (0, 1, 2))
            ok = ok and check_cover_product_bound(base, cov, k, bv).holds
    return ok


SUITES = {"snf": _verify_snf, "cusp": _verify_cusp, "torsion": _verify_torsion, "bounds": _verify_bounds}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for n in names:
        t0 = time.time()
        res = SUITES[n]()
        ok = ok and res
        print(f"{n:8s} {'PASS' if res else 'FAIL'}  ({time.time() - t0:.1f}s)")
    if args.suite == "all":
        pres = all(check_presentation(builtin_presentation(D)) for D in (1, 2, 3, 7, 11))
        print(f"{'present':8s} {'PASS' if pres else 'FAIL'}")
        ok = ok and pres
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="torsionlab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("predict", help="analytic constants and predicted bounds")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("homology", help="H_1(subgroup; Lambda_m)")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--subgroup", required=True, help="principal:2+i, hecke:1+i, hecke-intersect:3:base=2+i")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_homology)

    s = sub.add_parser("sweep", help="ideal sweep with exact checks")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--max-norm", type=int, required=True)
    s.add_argument("--m", default="2", help="comma list or range, e.g. 1,2 or 1-3")
    s.add_argument("--out", help="CSV path (JSON report written next to it)")
    s.add_argument("--json", help="explicit JSON report path")
    s.add_argument("--kind", default="principal")
    s.add_argument("--base", help="base ideal for hecke-intersect")
    s.add_argument("--workers", type=int, help="overrides TORSIONLAB_THREADS")
    s.add_argument("--no-checks", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("weights", help="fixed subgroup, growing weight")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--subgroup", default="principal:2+i")
    s.add_argument("--m-max", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("cusp-shapes", help="rescaled parabolic lattice shapes")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--max-norm", type=int, required=True)
    s.set_defaults(func=cmd_cusp_shapes)

    s = sub.add_parser("verify", help="quick self-checks")
    s.add_argument("--suite", choices=("all", "snf", "cusp", "torsion", "bounds"), default="all")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
