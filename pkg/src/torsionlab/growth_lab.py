"""Analytic constants, predicted bounds and torsion-growth sweeps."""
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import mpmath
from sympy.functions.combinatorial.numbers import kronecker_symbol

from .bianchi import (CLASS_NUMBER_ONE, SubgroupSpec, builtin_presentation, coset_table, cusps,
                      is_torsion_free, parse_subgroup, principal, reidemeister_schreier,
                      schreier_generators)
from .cusp_geometry import (TorusBundle, boundary_torsion, check_cover_degree_bound, check_cover_product_bound,
                            check_side_covolumes, cheeger_consistency, torus_volumes)
from .integer_homology import check_span_certificate, group_homology
from .quad_arith import _with_generator, ideal_from_json, ideals_up_to, ring_of_integers

CSV_COLUMNS = ["D", "ideal", "norm", "index", "kappa", "m", "h1_rank", "log_torsion", "ratio",
               "ratio_psl", "bound_lower", "bound_upper", "checks_passed"]
CHECK_NAMES = ("span_certificate", "norm_index", "cover_degree", "cover_product", "side_covolumes", "cheeger", "boundary_torsion")
HUMBERT_D = (1, 2, 3, 7, 11, 19, 43, 67, 163)


# ------------------------------------------------------------- constants

def t2_even(l):
    """L^2-torsion of H^3 for the weight 2l representation."""
    if l < 0 or int(l) != l:
        raise ValueError("l must be a nonnegative integer")
    return -(l * (l + 1) + 1 / 6) / math.pi


def B_of_m(m):
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    for k in range(m):
        s = mpmath.mpf(m) / 2 - k
        r = 2 * (1 + k) * (m - k)
        total += mpmath.log((s + mpmath.sqrt(s * s + r)) / (s - 1 + mpmath.sqrt((s - 1) ** 2 + r)))
    return float(total)


def c_rho(m):
    return math.log(m + 1) + B_of_m(m) / 2


def field_discriminant(D):
    return -D if D % 4 == 3 else -4 * D


def dirichlet_L2(d):
    """L(2, chi_d) via Hurwitz zeta over residues mod |d|."""
    mpmath.mp.dps = 30
    q = abs(d)
    total = mpmath.mpf(0)
    for a in range(1, q + 1):
        chi = kronecker_symbol(d, a)
        if chi:
            total += chi * mpmath.zeta(2, mpmath.mpf(a) / q)
    return total / q ** 2


def humbert_volume(D):
    """vol(SL(2,O_D) \\ H^3) = |d|^(3/2) zeta_F(2) / (4 pi^2)."""
    if D not in HUMBERT_D:
        raise ValueError(f"D={D} is not a supported class-number-one field")
    d = field_discriminant(D)
    mpmath.mp.dps = 30
    zF = mpmath.zeta(2) * dirichlet_L2(d)
    return float(mpmath.mpf(abs(d)) ** 1.5 * zF / (4 * mpmath.pi ** 2))


@dataclass
class AnalyticConstants:
    D: int
    m: int
    t2_even: float  # at l = m/2, or the band endpoint values for odd m
    B_m: float
    c_rho: float
    vol_XD: float
    predicted_bound: float  # lower bound -t2 * vol
    upper_bound: float  # twice the lower bound
    odd_band: tuple = None  # (value at m-1, value at m+1) for odd m
    note: str = ""

    def to_json(self):
        return json.dumps(asdict(self))


def predicted_bounds(D, m):
    if m < 1:
        raise ValueError("predicted bounds need m >= 1")
    vol = humbert_volume(D)
    if m % 2 == 0:
        t2 = t2_even(m // 2)
        lower = -t2 * vol
        return AnalyticConstants(D, m, t2, B_of_m(m), c_rho(m), vol, lower, 2 * lower)
    lo = -t2_even((m - 1) // 2) * vol
    hi = -t2_even((m + 1) // 2) * vol
    return AnalyticConstants(D, m, t2_even((m - 1) // 2), B_of_m(m), c_rho(m), vol, lo, 2 * hi,
                             (lo, hi), "odd weight: bracketed by the even neighbours m-1 and m+1")


def weight_band(vol_X):
    return vol_X / (2 * math.pi), vol_X / math.pi


# ------------------------------------------------------------ experiments

@dataclass
class ExperimentRecord:
    D: int
    ideal: str
    norm: int
    index: int
    kappa: int
    m: int
    h1_rank: int
    log_torsion: float
    ratio: float
    bound_lower: float
    bound_upper: float
    checks: dict = field(default_factory=dict)
    torsion_factors: tuple = ()
    seconds: float = 0.0

    @property
    def checks_passed(self):
        return all(self.checks.values())

    @property
    def ratio_psl(self):
        """log|tor| per PSL index; -I is never in a torsion-free subgroup, so
        this is log|tor| / (vol(X) / vol(X_D))."""
        return self.log_torsion / (self.index / 2)

    def csv_row(self):
        return [self.D, self.ideal, self.norm, self.index, self.kappa, self.m, self.h1_rank,
                f"{self.log_torsion:.10f}", f"{self.ratio:.10f}", f"{self.ratio_psl:.10f}", f"{self.bound_lower:.10f}",
                f"{self.bound_upper:.10f}", "yes" if self.checks_passed else "no"]

    def to_dict(self):
        d = asdict(self)
        d["checks_passed"] = self.checks_passed
        d["ratio_psl"] = self.ratio_psl
        d.pop("seconds")
        return d


@dataclass
class SweepConfig:
    D: int
    max_norm: int = 0
    ideals: list = None  # explicit list of IdealOD (overrides max_norm)
    m_list: tuple = (2,)
    kind: str = "principal"
    base: str = None  # base prime ideal for hecke-intersect
    workers: int = None
    csv_path: str = None
    json_path: str = None
    checks: bool = True


def worker_count(config=None):
    if config is not None and config.workers:
        return config.workers
    env = os.environ.get("TORSIONLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _torus_checks(lattice, m, cache):
    """Cover bounds (all q), side covolumes, Cheeger and boundary torsion on one cusp torus, cached."""
    key = (lattice.ring.D, tuple(lattice.to_json()), m)
    if key in cache:
        return cache[key]
    R = lattice.ring
    base = TorusBundle(R.D, R(1), R.w(), m)
    cover = TorusBundle.from_lattice(lattice, m)
    bv = torus_volumes(base)
    out = {"cover_degree": all(check_cover_degree_bound(base, cover, q, base_vol=bv).holds for q in (0, 1, 2)),
           "cover_product": check_cover_product_bound(base, cover, base_vol=bv).holds,
           "side_covolumes": check_side_covolumes(cover, ms=(m,)).holds}
    tau, C = boundary_torsion(cover)
    out["boundary_torsion"] = abs(tau - 1) < 1e-9
    out["cheeger"] = cheeger_consistency(C)
    cache[key] = out
    return out


def run_record(D, spec, m, with_checks=True, cache=None):
    """Build the subgroup, compute H_1(Gamma'; Lambda_m) and all checks."""
    t0 = time.time()
    cache = {} if cache is None else cache
    if not is_torsion_free(spec):
        raise ValueError(f"{spec.label()} is not torsion-free")
    P = builtin_presentation(D)
    T = coset_table(P, spec)
    SP = reidemeister_schreier(P, T)
    H = group_homology(SP, m, 1)
    cs = cusps(spec, T, P)
    level = spec.level()
    bounds = predicted_bounds(D, m)
    checks = {}
    if with_checks:
        if spec.kind == "principal":
            checks["span_certificate"] = check_span_certificate(spec.ideal, m, schreier_generators(P, T)).holds
            checks["norm_index"] = level.norm() <= T.index
        agg = {}
        for c in cs:
            for k, v in _torus_checks(c.parabolic_lattice, m, cache).items():
                agg[k] = agg.get(k, True) and v
        checks.update(agg)
        checks["cusp_rank"] = H.free_rank == 2 * len(cs)
    log_t = H.log_torsion_order
    ideal = spec.ideal.label() if spec.kind == "principal" else spec.label()
    return ExperimentRecord(D, ideal, level.norm(), T.index, len(cs), m, H.free_rank, log_t,
                            log_t / T.index, bounds.predicted_bound, bounds.upper_bound, checks,
                            H.torsion_factors, time.time() - t0)


def _job(args):
    D, kind, ideal_json, base_json, m, with_checks = args
    R = ring_of_integers(D)
    a = _with_generator(ideal_from_json(R, ideal_json))
    spec = principal(a) if kind == "principal" else SubgroupSpec(kind, a, ideal_from_json(R, base_json))
    try:
        return ("ok", run_record(D, spec, m, with_checks))
    except Exception as exc:  # isolate failures per record
        return ("error", {"D": D, "ideal": a.label(), "m": m, "error": f"{type(exc).__name__}: {exc}"})


def _config_jobs(config):
    R = ring_of_integers(config.D)
    ideals = config.ideals if config.ideals is not None else ideals_up_to(R, config.max_norm)
    kind = config.kind.replace("-", "_")
    base = None
    if kind == "hecke_intersect":
        from .quad_arith import parse_ideal
        base = parse_ideal(config.base, R)
    jobs, skipped = [], []
    for a in ideals:
        spec = principal(a) if kind == "principal" else SubgroupSpec(kind, a, base)
        if not is_torsion_free(spec):
            skipped.extend({"D": config.D, "ideal": a.label(), "m": m, "error": "not torsion-free"}
                           for m in config.m_list)
            continue
        for m in config.m_list:
            jobs.append((config.D, kind, a.to_json(), base.to_json() if base else None, m, config.checks))
    return jobs, skipped


def run_sweep(config):
    """Run all (ideal, m) jobs; returns (records, failures) sorted deterministically."""
    if config.D not in CLASS_NUMBER_ONE:
        raise ValueError(f"unsupported D={config.D}")
    jobs, failures = _config_jobs(config)
    n = worker_count(config)
    if n <= 1 or len(jobs) <= 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(_job, jobs))
    records = [r for s, r in results if s == "ok"]
    failures += [r for s, r in results if s != "ok"]
    records.sort(key=lambda r: (r.norm, r.ideal, r.m))
    failures.sort(key=lambda f: (f["ideal"], f["m"]))
    if config.csv_path:
        with open(config.csv_path, "w", newline="") as fh:
            fh.write(records_csv(records))
    if config.json_path:
        with open(config.json_path, "w") as fh:
            fh.write(report_json(records, failures, config))
    return records, failures


def records_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def report_json(records, failures, config=None):
    d = {"records": [r.to_dict() for r in records], "failures": failures}
    if config is not None:
        d["config"] = {"D": config.D, "max_norm": config.max_norm, "m": list(config.m_list),
                       "kind": config.kind}
    return json.dumps(d, indent=2, sort_keys=True, default=str)


def band_position(value, lower, upper):
    if value < lower:
        return "below"
    return "inside" if value <= upper else "above"


def trend_report(records):
    """Plain-text table of measured ratios against the predicted band.

    `ratio` divides by the SL index, `psl` by the PSL index (twice as large,
    and proportional to log|tor| / vol(X)); both are placed in the band.
    """
    lines = [f"{'ideal':>10} {'N':>4} {'index':>7} {'m':>2} {'log|tor|':>12} {'ratio':>10} {'psl':>10} "
             f"{'lower':>8} {'2*lower':>8}  position(ratio/psl)"]
    for r in records:
        pos = (band_position(r.ratio, r.bound_lower, r.bound_upper) + "/"
               + band_position(r.ratio_psl, r.bound_lower, r.bound_upper))
        lines.append(f"{r.ideal:>10} {r.norm:>4} {r.index:>7} {r.m:>2} {r.log_torsion:>12.4f} "
                     f"{r.ratio:>10.5f} {r.ratio_psl:>10.5f} {r.bound_lower:>8.5f} {r.bound_upper:>8.5f}  {pos}")
    return "\n".join(lines)


# --------------------------------------------------------- weight sweeps

@dataclass
class WeightRecord:
    m: int
    h1_rank: int
    log_torsion: float
    normalized: float  # log|H_1 tor| / m^2
    band_lower: float
    band_upper: float


def weight_sweep(D, subgroup, m_max, m_min=1):
    """log|H_1 tor|/m^2 for a fixed torsion-free subgroup and m = m_min..m_max."""
    spec = parse_subgroup(subgroup, D) if isinstance(subgroup, str) else subgroup
    if not is_torsion_free(spec):
        raise ValueError(f"{spec.label()} is not torsion-free")
    P = builtin_presentation(D)
    T = coset_table(P, spec)
    SP = reidemeister_schreier(P, T)
    vol_X = humbert_volume(D) * T.index / 2  # -I is not in a torsion-free subgroup
    lo, hi = weight_band(vol_X)
    out = []
    for m in range(max(1, m_min), m_max + 1):
        H = group_homology(SP, m, 1)
        lt = H.log_torsion_order
        out.append(WeightRecord(m, H.free_rank, lt, lt / m ** 2, lo, hi))
    return out


def weights_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "h1_rank", "log_torsion", "normalized", "band_lower", "band_upper"])
    for r in records:
        w.writerow([r.m, r.h1_rank, f"{r.log_torsion:.10f}", f"{r.normalized:.10f}",
                    f"{r.band_lower:.10f}", f"{r.band_upper:.10f}"])
    return buf.getvalue()
