"""Cusp cross-section tori T = L \\ C with coefficients in Lambda_m.

Integral cohomology of the torus group Z^2 comes from the Koszul complex of
the two commuting unipotents.  The harmonic metric enters through periods:
a class is written as a*(plus form) + b*(minus form) with a, b in F, and

    |a (h0 x dzbar) + b (l0 x dz)|^2 = 2 vol(T) (|a|^2 + |b|^2),
    |x h0|^2 = vol(T) |x|^2 on H^0,   |c l0|^2 = |c|^2 / vol(T) on H^2,

so every squared covolume is rational.  The dual factor E^* is the
contragredient rho(g^-1)^T on the dual lattice Lambda_m / delta_D (the
`dual="inverse_transpose"` option uses rho([[d,-c],[-b,a]]) instead).
"""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

import flint
import mpmath
import numpy as np

from .integer_homology import (hnf_with_transform, integer_kernel, snf, solve_in_lattice,
                               to_fmpz)
from .quad_arith import FieldElt, QuadInt, delta_D, ring_of_integers
from .sym_modules import contragredient_od, dual_matrix, expand, rho_od
from .bianchi import SL2Mat

mpmath.mp.dps = 50


# ------------------------------------------------------------ helpers

def _F(x, ring):
    if isinstance(x, FieldElt):
        return x
    if isinstance(x, QuadInt):
        return x.to_field()
    return FieldElt(Fraction(x), Fraction(0), ring)


def _qcoords(z):
    """Rational coordinates of z in the basis (1, w)."""
    return [z.a, z.b]


def _from_qcoords(a, b, ring):
    return FieldElt(Fraction(a), Fraction(b), ring)


def _rational_lattice_basis(vectors):
    """Z-basis of the lattice generated by rational vectors (exact)."""
    vectors = [list(map(Fraction, v)) for v in vectors if any(v)]
    if not vectors:
        return []
    den = 1
    for v in vectors:
        for x in v:
            den = den * x.denominator // math.gcd(den, x.denominator)
    M = flint.fmpz_mat([[int(x * den) for x in v] for v in vectors])
    H = M.hnf()
    out = []
    for i in range(H.nrows()):
        row = [Fraction(int(H[i, j]), den) for j in range(H.ncols())]
        if any(row):
            out.append(row)
    return out


def _solve_rational(A, b):
    """One rational solution x of A x = b (A given as list of rows)."""
    import sympy
    M = sympy.Matrix(A)
    rhs = sympy.Matrix(b)
    sol, params = M.gauss_jordan_solve(rhs)
    sol = sol.subs({p: 0 for p in params})
    return [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in sol]


def _det_fraction(G):
    import sympy
    d = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in G]).det()
    return Fraction(int(sympy.fraction(d)[0]), int(sympy.fraction(d)[1]))


def _rat_sqrt(q):
    """Exact square root of a nonnegative Fraction if rational, else None."""
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


# --------------------------------------------------------------- reports

@dataclass
class CovolumeReport:
    degree: int
    side: str  # "full", "plus", "minus", or "H0"/"H2" style labels
    squared: Fraction  # exact square of the covolume
    D: int = 1
    rank: int = 0

    @property
    def value(self):
        return math.sqrt(self.squared)

    def mp_value(self):
        return mpmath.sqrt(mpmath.mpf(self.squared.numerator) / self.squared.denominator)

    def exact_form(self):
        """(r, s) with covolume = r * sqrt(D)^s, r rational, when possible."""
        r = _rat_sqrt(self.squared)
        if r is not None:
            return r, 0
        r = _rat_sqrt(self.squared / self.D)
        if r is not None:
            return r, 1
        return None

    def to_json(self):
        ex = self.exact_form()
        d = {"degree": self.degree, "side": self.side, "squared_num": self.squared.numerator,
             "squared_den": self.squared.denominator, "value": self.value}
        if ex is not None:
            d.update({"numerator": ex[0].numerator, "denominator": ex[0].denominator, "sqrtD_exponent": ex[1]})
        return json.dumps(d)


def covolume(basis, gram):
    """sqrt(det(B^T G B)) for a basis given as columns (Fractions allowed)."""
    B = [list(map(Fraction, col)) for col in basis]
    G = [list(map(Fraction, row)) for row in gram]
    k = len(B)
    GB = [[sum(B[i][a] * G[a][b] * B[j][b] for a in range(len(G)) for b in range(len(G)))
           for j in range(k)] for i in range(k)]
    d = _det_fraction(GB)
    if d <= 0:
        raise ValueError("dependent basis")
    return math.sqrt(d)


# ------------------------------------------------------------ the torus

@dataclass
class _Factor:
    name: str
    action: object  # gamma -> (m+1)x(m+1) matrix over O_D (or F)
    scale: FieldElt  # integer coordinates X represent scale * X
    N: list  # nilpotent log of the action of translation by 1, over Q
    h0: int  # index of the invariant basis vector
    l0: int  # index of the basis vector spanning coinvariants


def _matlog_unipotent(U):
    n = len(U)
    A = [[Fraction(U[i][j]) - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    out = [[Fraction(0)] * n for _ in range(n)]
    P = [row[:] for row in A]
    for k in range(1, n + 1):
        c = Fraction((-1) ** (k + 1), k)
        for i in range(n):
            for j in range(n):
                out[i][j] += c * P[i][j]
        P = [[sum(P[i][t] * A[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    return out


def _make_factor(name, m, D, dual):
    R = ring_of_integers(D)
    one = SL2Mat.of(R, 1, 1, 0, 1)
    if name == "E":
        def action(g):
            return rho_od(SL2Mat.of(R, 1, g, 0, 1), m)
        scale = _F(1, R)
    else:
        if dual == "contragredient":
            def action(g):
                return contragredient_od(SL2Mat.of(R, 1, g, 0, 1), m)
        elif dual == "inverse_transpose":
            def action(g):
                return rho_od(dual_matrix(SL2Mat.of(R, 1, g, 0, 1)), m)
        else:
            raise ValueError(f"unknown dual convention {dual!r}")
        scale = delta_D(D).value.inverse()
    U = action(R(1))
    for row in U:
        for x in row:
            assert x.b == 0
    N = _matlog_unipotent([[x.a for x in row] for row in U])
    n = m + 1
    zero_cols = [j for j in range(n) if all(N[i][j] == 0 for i in range(n))]
    zero_rows = [i for i in range(n) if all(N[i][j] == 0 for j in range(n))]
    if m >= 1 and (len(zero_cols) != 1 or len(zero_rows) != 1):
        raise ArithmeticError("unexpected nilpotent structure")
    return _Factor(name, action, scale, N, zero_cols[0], zero_rows[0])


@dataclass
class TorusBundle:
    """Cusp torus with parabolic lattice Z g1 + Z g2 inside O_D and weight m."""
    D: int
    gamma1: QuadInt
    gamma2: QuadInt
    m: int
    dual: str = "contragredient"

    def __post_init__(self):
        R = ring_of_integers(self.D)
        self.gamma1 = self.gamma1 if isinstance(self.gamma1, QuadInt) else R(self.gamma1)
        self.gamma2 = self.gamma2 if isinstance(self.gamma2, QuadInt) else R(self.gamma2)
        if self.vol_squared == 0:
            raise ValueError("degenerate parabolic lattice")

    @classmethod
    def from_lattice(cls, L, m, dual="contragredient"):
        g1, g2 = L.basis()
        return cls(L.ring.D, g1, g2, m, dual)

    @property
    def ring(self):
        return ring_of_integers(self.D)

    @property
    def vol_squared(self):
        """vol(T)^2 = (Im(conj(g1) g2))^2, rational."""
        z = self.gamma1.to_field().conj() * self.gamma2.to_field()
        return z.im_coeff() ** 2 * self.D

    @property
    def vol(self):
        return math.sqrt(self.vol_squared)

    def mp_vol(self):
        q = self.vol_squared
        return mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)

    @property
    def w_P(self):
        """Least positive integer w with w * conj(g_i) in O_D."""
        w = 1
        for g in (self.gamma1, self.gamma2):
            z = g.to_field().conj()
            w = math.lcm(w, z.a.denominator, z.b.denominator)
        return w

    def sublattice(self, a, b, d):
        """Sublattice with basis a*g1, b*g1 + d*g2 (index a*d)."""
        return TorusBundle(self.D, self.gamma1 * a, self.gamma1 * b + self.gamma2 * d, self.m, self.dual)

    def scaled(self, k):
        return TorusBundle(self.D, self.gamma1 * k, self.gamma2 * k, self.m, self.dual)

    def unipotents(self, factor="E"):
        f = self.factor(factor)
        return [expand(f.action(g), self.ring) for g in (self.gamma1, self.gamma2)]

    @cached_property
    def factors(self):
        return {"E": _make_factor("E", self.m, self.D, self.dual),
                "E*": _make_factor("E*", self.m, self.D, self.dual)}

    def factor(self, name):
        return self.factors[name]

    def koszul(self, factor="E"):
        U1, U2 = self.unipotents(factor)
        n = U1.shape[0]
        if not np.array_equal(U1.dot(U2), U2.dot(U1)):
            raise ValueError("unipotent actions do not commute")
        I = np.eye(n, dtype=object)
        A1, A2 = U1 - I, U2 - I
        d0 = np.vstack([A1, A2])
        d1 = np.hstack([-A2, A1])
        return d0, d1


def unipotent_pair(T, factor="E"):
    return T.unipotents(factor)


# ---------------------------------------------------------------- periods

def _fvec(X, factor, ring):
    """F-vector represented by integer (or rational) coordinates X."""
    n = len(X) // 2
    return [factor.scale * _from_qcoords(X[2 * j], X[2 * j + 1], ring) for j in range(n)]


def _xcoords(vec, factor):
    """Inverse of _fvec: rational coordinates of an F-vector."""
    inv = factor.scale.inverse()
    out = []
    for z in vec:
        out += _qcoords(z * inv)
    return out


def period_integral_plus(m, gamma, ring=None, index=None):
    """Period of the plus form h0 x dzbar over gamma: conj(gamma) * v_m."""
    ring = ring or gamma.ring
    g = _F(gamma, ring)
    zero = _F(0, ring)
    vec = [zero] * (m + 1)
    vec[m if index is None else index] = g.conj()
    return vec


def period_integral_minus(m, gamma, ring=None):
    """Period of v_0 x dz: sum_k C(m,k) gamma^(k+1)/(k+1) v_k."""
    ring = ring or gamma.ring
    g = _F(gamma, ring)
    out = []
    p = g
    for k in range(m + 1):
        out.append(p * Fraction(math.comb(m, k), k + 1))
        p = p * g
    return out


def _minus_period(factor, gamma, m, ring):
    """int_0^gamma exp(z N) l0 dz = sum_k gamma^(k+1)/(k+1)! N^k l0."""
    n = m + 1
    g = _F(gamma, ring)
    vec = [Fraction(int(i == factor.l0)) for i in range(n)]
    out = [_F(0, ring)] * n
    p = g
    for k in range(n):
        c = Fraction(1, math.factorial(k + 1))
        out = [out[i] + p * (c * vec[i]) for i in range(n)]
        vec = [sum(factor.N[i][j] * vec[j] for j in range(n)) for i in range(n)]
        p = p * g
    return out


def _plus_period(factor, gamma, m, ring):
    return period_integral_plus(m, gamma, ring, index=factor.h0)


# ----------------------------------------------------------- cohomology

@dataclass
class TorusCohomology:
    factor: str
    ranks: tuple  # Z-ranks of H^0, H^1, H^2 (free parts)
    torsion: tuple  # torsion orders of H^0, H^1, H^2
    h0_lattice: list  # F-coordinates x of x*h0 (Z-basis)
    h1_lattice: list  # (a, b) in F^2 per basis class
    h2_lattice: list  # F-coordinates c of c*l0
    h1_cocycles: list  # integer cocycles (y1, y2) representing the basis classes

    @property
    def complex_ranks(self):
        return tuple(r // 2 for r in self.ranks)


def _kernel_columns(A):
    K = integer_kernel(to_fmpz(A))
    return [[int(K[i, j]) for i in range(K.nrows())] for j in range(K.ncols())]


def _harmonic_coeffs(T, factor, y1, y2):
    """(a, b) in F^2 with (y1, y2) = a*plus + b*minus + coboundary."""
    R = T.ring
    m = T.m
    n = 2 * (m + 1)
    U = T.unipotents(factor.name)
    gam = (T.gamma1, T.gamma2)
    cols = []
    for coef in (_F(1, R), _from_qcoords(0, 1, R)):
        cols.append(sum((_xcoords([coef * z for z in _plus_period(factor, g, m, R)], factor) for g in gam), []))
    for coef in (_F(1, R), _from_qcoords(0, 1, R)):
        cols.append(sum((_xcoords([coef * z for z in _minus_period(factor, g, m, R)], factor) for g in gam), []))
    for k in range(n):
        e = [0] * n
        e[k] = 1
        cols.append([int(x) for x in (U[0] - np.eye(n, dtype=object)).dot(e)]
                    + [int(x) for x in (U[1] - np.eye(n, dtype=object)).dot(e)])
    A = [[Fraction(cols[c][r]) for c in range(len(cols))] for r in range(2 * n)]
    rhs = [Fraction(int(v)) for v in list(y1) + list(y2)]
    x = _solve_rational(A, rhs)
    return _from_qcoords(x[0], x[1], R), _from_qcoords(x[2], x[3], R)


def torus_cohomology(T, factor="E"):
    """Integral H^0, H^1, H^2 of the torus with coefficients in one factor."""
    f = T.factor(factor)
    R = T.ring
    m = T.m
    n = 2 * (m + 1)
    d0, d1 = T.koszul(factor)
    # H^0 = ker d0
    h0_vecs = _kernel_columns(d0)
    h0_coords = []
    for X in h0_vecs:
        vec = _fvec(X, f, R)
        if any(not vec[j].is_zero() for j in range(m + 1) if j != f.h0) and m >= 1:
            raise ArithmeticError("invariant vector off the highest-weight line")
        h0_coords.append(_qcoords(vec[f.h0]))
    h0_basis = _rational_lattice_basis(h0_coords)
    # H^1 = ker d1 / im d0
    z1 = _kernel_columns(d1)
    h1_coords, reps = [], []
    for Y in z1:
        a, b = _harmonic_coeffs(T, f, Y[:n], Y[n:])
        h1_coords.append(_qcoords(a) + _qcoords(b))
    h1_basis = _rational_lattice_basis(h1_coords)
    # representatives for the basis classes, found by solving in the generated lattice
    for v in h1_basis:
        reps.append(_lift_h1(v, h1_coords, z1))
    # H^2 = coker d1
    h2_coords = []
    for k in range(n):
        e = [0] * n
        e[k] = 1
        vec = _fvec(e, f, R)
        h2_coords.append(_qcoords(vec[f.l0]))
    h2_basis = _rational_lattice_basis(h2_coords)
    t1 = snf(to_fmpz(d0)).torsion
    t2 = snf(to_fmpz(d1)).torsion
    ranks = (len(h0_basis), len(h1_basis), len(h2_basis))
    tors = (1, math.prod(t1), math.prod(t2))
    to_f = lambda c: [_from_qcoords(c[i], c[i + 1], R) for i in range(0, len(c), 2)]
    return TorusCohomology(factor, ranks, tors, [to_f(c)[0] for c in h0_basis],
                           [tuple(to_f(c)) for c in h1_basis], [to_f(c)[0] for c in h2_basis], reps)


def _lift_h1(target, coords, cocycles):
    """Integer combination of cocycles whose harmonic coordinates equal target."""
    den = 1
    for v in coords + [target]:
        for x in v:
            den = math.lcm(den, Fraction(x).denominator)
    B = flint.fmpz_mat(len(target), len(coords),
                       [int(Fraction(coords[j][i]) * den) for i in range(len(target)) for j in range(len(coords))])
    t = flint.fmpz_mat(len(target), 1, [int(Fraction(x) * den) for x in target])
    x = solve_in_lattice(B, t)
    if x is None:
        raise ArithmeticError("basis class not in the cocycle lattice")
    n2 = len(cocycles[0])
    return [sum(x[j] * cocycles[j][i] for j in range(len(cocycles))) for i in range(n2)]


# ---------------------------------------------------------- covolumes

def _gram_det(vectors, ncomplex):
    """det of the Gram matrix of Re(sum conj(x_k) y_k) for F-vectors."""
    k = len(vectors)
    G = [[sum((vectors[i][c].conj() * vectors[j][c]).re() for c in range(ncomplex))
          for j in range(k)] for i in range(k)]
    return _det_fraction(G)


def _h1_vectors(coh):
    return [list(v) for v in coh.h1_lattice]


def covolume_h0(T, factor="E"):
    coh = torus_cohomology(T, factor)
    vecs = [[x] for x in coh.h0_lattice]
    sq = T.vol_squared ** (len(vecs) // 2) * _gram_det(vecs, 1) if vecs else Fraction(1)
    return CovolumeReport(0, factor, sq, T.D, len(vecs))


def _cov_from(coh, T, q, side="full"):
    if q == 0:
        vecs, scale2, nc = [[x] for x in coh.h0_lattice], T.vol_squared, 1
    elif q == 2:
        vecs, scale2, nc = [[x] for x in coh.h2_lattice], 1 / T.vol_squared, 1
    else:
        vecs, scale2, nc = _h1_vectors(coh), 4 * T.vol_squared, 2
        if side in ("plus", "minus"):
            vecs = _intersect_line(vecs, 0 if side == "plus" else 1)
            vecs = [[v[0] if side == "plus" else v[1]] for v in vecs]
            nc = 1
    if not vecs:
        return CovolumeReport(q, side, Fraction(1), T.D, 0)
    r = len(vecs)
    sq = scale2 ** Fraction(r, 2) if r % 2 == 0 else None
    if sq is None:
        raise ArithmeticError("odd rank lattice in a complex space")
    return CovolumeReport(q, side, sq * _gram_det(vecs, nc), T.D, r)


def _intersect_line(vecs, keep):
    """Sublattice of vectors (a, b) with the other coordinate zero."""
    other = 1 - keep
    rows = [_qcoords(v[other]) for v in vecs]
    den = 1
    for r in rows:
        for x in r:
            den = math.lcm(den, x.denominator)
    A = flint.fmpz_mat(2, len(vecs), [int(rows[j][i] * den) for i in range(2) for j in range(len(vecs))])
    K = integer_kernel(A)
    out = []
    for k in range(K.ncols()):
        c = [int(K[j, k]) for j in range(len(vecs))]
        out.append([sum((vecs[j][t] * c[j] for j in range(len(vecs))), _F(0, vecs[0][0].ring))
                    for t in range(2)])
    return out


@dataclass
class TorusVolumes:
    """Exact squared covolumes of one torus bundle, for E, E^* and their sum."""
    T: TorusBundle
    E: dict
    Es: dict

    def full(self, q):
        """vol(H^q_free(T; Ebar)) as a report (orthogonal sum of the factors)."""
        a, b = self.E[q], self.Es[q]
        return CovolumeReport(q, "full", a.squared * b.squared, self.T.D, a.rank + b.rank)

    def side(self, sign):
        a, b = self.E[sign], self.Es[sign]
        return CovolumeReport(1, sign, a.squared * b.squared, self.T.D, a.rank + b.rank)


def torus_volumes(T):
    out = {}
    for name in ("E", "E*"):
        coh = torus_cohomology(T, name)
        out[name] = {q: _cov_from(coh, T, q) for q in (0, 1, 2)}
        if T.m >= 1:
            out[name]["plus"] = _cov_from(coh, T, 1, "plus")
            out[name]["minus"] = _cov_from(coh, T, 1, "minus")
    return TorusVolumes(T, out["E"], out["E*"])


# -------------------------------------------------------------- +- split

@dataclass
class PlusMinusSplit:
    m: int
    factor: str
    plus_generator: str
    minus_generator: str
    basis_coords: list  # rational (a0, a1, b0, b1) per basis class
    pr_plus: list  # rational 4x4 matrices acting on coordinate rows
    pr_minus: list
    weights: tuple  # (lambda_plus, lambda_minus) weight exponents


def pm_split(T, factor="E"):
    """Rational projections onto the plus and minus lines of H^1 (m >= 1)."""
    if T.m < 1:
        raise ValueError("the +- splitting needs m >= 1")
    coh = torus_cohomology(T, factor)
    B = [[Fraction(x) for x in _qcoords(a) + _qcoords(b)] for a, b in coh.h1_lattice]
    import sympy
    Bm = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in B])
    if Bm.det() == 0:
        raise ArithmeticError("degenerate period matrix")
    Binv = Bm.inv()
    Pp = Bm * sympy.diag(1, 1, 0, 0) * Binv
    Pm = Bm * sympy.diag(0, 0, 1, 1) * Binv

    def fr(M):
        return [[Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in M.row(i)]
                for i in range(M.rows)]
    f = T.factor(factor)
    names = ("v_m x dzbar", "v_0 x dz") if factor == "E" else ("v_0^* x dzbar", "v_m^* x dz")
    # weight exponents: h0 and l0 sit in degrees m and 0 (or 0 and m) of the torus action
    lam = (T.m + 1, 0) if factor == "E" else (0, T.m + 1)
    return PlusMinusSplit(T.m, factor, names[0], names[1], B, fr(Binv * Pp * Bm), fr(Binv * Pm * Bm), lam)


def period_matrix_rank(T, factor="E"):
    """Real rank of the periods of {plus, minus} against gamma_1, gamma_2."""
    f = T.factor(factor)
    R = T.ring
    cols = []
    for per in (_plus_period, _minus_period):
        for coef in (_F(1, R), _from_qcoords(0, 1, R)):
            cols.append(sum((_xcoords([coef * z for z in per(f, g, T.m, R)], f)
                             for g in (T.gamma1, T.gamma2)), []))
    import sympy
    M = sympy.Matrix([[sympy.Rational(c[r].numerator, c[r].denominator) for c in cols] for r in range(len(cols[0]))])
    return M.rank()


# -------------------------------------------------------------- bounds

@dataclass
class BoundReport:
    name: str
    holds: bool
    details: dict = field(default_factory=dict)


def hermite_sublattices(index):
    """All (a, b, d) with a*d = index and 0 <= b < a: sublattices of Z^2."""
    out = []
    for a in range(1, index + 1):
        if index % a == 0:
            d = index // a
            for b in range(a):
                out.append((a, b, d))
    return out


B_Q = {0: 4, 1: 8, 2: 4}  # real dimensions of H^q(n; V + V^*) for m >= 1


def check_cover_degree_bound(base, cover, q, index=None, base_vol=None):
    """Two-sided covolume bound for a finite cover of the cusp torus.

    The lower bound pairs degree q with the Poincare dual degree 2 - q of
    the two-dimensional torus.
    """
    index = index if index is not None else _index(base, cover)
    bv = base_vol or torus_volumes(base)
    cv = torus_volumes(cover)
    b = B_Q[q] if base.m >= 1 else {0: 4, 1: 8, 2: 4}[q]
    vq = cv.full(q).squared
    upper = bv.full(q).squared * Fraction(index) ** b
    lower_inv = bv.full(2 - q).squared * Fraction(index) ** b
    ok_up = vq <= upper
    ok_lo = vq * lower_inv >= 1
    return BoundReport("cover_degree", ok_up and ok_lo, {"q": q, "index": index, "cover_sq": vq,
                                                 "upper_sq": upper, "lower_sq": 1 / lower_inv,
                                                 "upper": ok_up, "lower": ok_lo})


def _index(base, cover):
    a = base.gamma1.to_field().conj() * base.gamma2.to_field()
    b = cover.gamma1.to_field().conj() * cover.gamma2.to_field()
    r = b.im_coeff() / a.im_coeff()
    if r.denominator != 1:
        raise ValueError("cover is not a sublattice")
    return abs(int(r))


def check_cover_product_bound(base, cover, index=None, base_vol=None):
    """Covolume bounds for the plus/minus lattices L_{+-} under finite covers."""
    index = index if index is not None else _index(base, cover)
    bv = base_vol or torus_volumes(base)
    cv = torus_volumes(cover)
    k4 = Fraction(index) ** 4  # ([Gamma_P : Gamma_P,i]^(b_1/4))^2 with b_1 = 8
    det = {}
    ok = True
    for s, o in (("plus", "minus"), ("minus", "plus")):
        v = cv.side(s).squared
        up = v <= bv.side(s).squared * k4
        lo = v * bv.side(o).squared * k4 >= 1
        det[s] = {"cover_sq": v, "upper": up, "lower": lo}
        ok = ok and up and lo
    prod = cv.side("plus").squared * cv.side("minus").squared
    det["product_sq"] = prod
    det["product_ge_1"] = prod >= 1
    return BoundReport("cover_product", ok and prod >= 1, det)


@dataclass
class SideCovolumeReport:
    ratios: dict  # m -> ratio (float) of vol(L_+(Ebar)) / (vol H^0 vol H^2)
    ratio_squared: dict
    C_P: float
    sublattice_bounds: dict  # m -> {plus, plus_dual, minus, minus_dual: bool}
    h0h2_product_sq: dict

    @property
    def holds(self):
        return math.isfinite(self.C_P) and all(all(v.values()) for v in self.sublattice_bounds.values()) \
            and all(v == 1 for v in self.h0h2_product_sq.values())


def check_side_covolumes(base, ms=(1, 2, 3)):
    """Ratio vol(L_+)/(vol H^0 vol H^2), the smallest constant C_P bounding it both ways, and
    the four sublattice covolume bounds (plus/minus, E and E^*)."""
    ratios, rsq, subs, prods = {}, {}, {}, {}
    C = 0.0
    for m in ms:
        T = TorusBundle(base.D, base.gamma1, base.gamma2, m, base.dual)
        tv = torus_volumes(T)
        h0h2 = tv.full(0).squared * tv.full(2).squared
        prods[m] = h0h2
        r2 = tv.side("plus").squared / h0h2
        rsq[m] = r2
        R = math.sqrt(r2)
        ratios[m] = R
        fact = math.factorial(m + 1)
        C = max(C, R, (1 / R) ** (1 / (2 * (m + 1))) / fact ** (1 / (m + 1)))
        w = T.w_P
        imd2 = delta_D(T.D).im_squared()
        v2 = T.vol_squared
        bound_plus = 4 * v2 * w ** 4 * imd2
        bound_plus_dual = 4 * v2 * w ** 4 / imd2
        big = (fact * w ** (m + 1)) ** 4
        subs[m] = {"plus": tv.E["plus"].squared <= bound_plus, "plus_dual": tv.Es["plus"].squared <= bound_plus_dual,
                   "minus": tv.E["minus"].squared <= 4 * v2 * big * imd2,
                   "minus_dual": tv.Es["minus"].squared <= 4 * v2 * big / imd2}
    return SideCovolumeReport(ratios, rsq, C, subs, prods)


# ------------------------------------------------- Reidemeister torsion

@dataclass
class BasedComplexR:
    """Cochain complex C^0 -> C^1 -> ... with integral lattices Z^{n_q} and
    cohomology bases mu[q] given as real cocycle representatives (columns)."""
    dims: list
    d: list  # d[q]: C^q -> C^{q+1}, integer matrices (numpy object / lists)
    mu: list  # mu[q]: list of real vectors (mpmath-compatible sequences)

    def __post_init__(self):
        self.d = [np.array(x, dtype=object).reshape(self.dims[q + 1], self.dims[q])
                  for q, x in enumerate(self.d)]

    def check(self):
        for q in range(len(self.d) - 1):
            if np.any(self.d[q + 1].dot(self.d[q]) != 0):
                raise ValueError("d^2 != 0")
        return True

    def boundary(self, q):
        if 0 <= q < len(self.d):
            return self.d[q]
        rows = self.dims[q + 1] if q + 1 < len(self.dims) else 0
        return np.zeros((rows, self.dims[q]), dtype=object)

    def incoming(self, q):
        if q == 0:
            return np.zeros((self.dims[0], 0), dtype=object)
        return self.d[q - 1]


def direct_sum(*complexes):
    dims = [sum(c.dims[q] for c in complexes) for q in range(len(complexes[0].dims))]
    d = []
    for q in range(len(dims) - 1):
        M = np.zeros((dims[q + 1], dims[q]), dtype=object)
        r0 = c0 = 0
        for c in complexes:
            M[r0:r0 + c.dims[q + 1], c0:c0 + c.dims[q]] = c.d[q]
            r0 += c.dims[q + 1]
            c0 += c.dims[q]
        d.append(M)
    mu = []
    for q in range(len(dims)):
        vecs = []
        off = 0
        for c in complexes:
            for v in c.mu[q]:
                full = [mpmath.mpf(0)] * dims[q]
                for i, x in enumerate(v):
                    full[off + i] = x
                vecs.append(full)
            off += c.dims[q]
        mu.append(vecs)
    return BasedComplexR(dims, d, mu)


def _pivot_columns(M):
    import sympy
    if M.shape[0] == 0 or M.shape[1] == 0:
        return []
    _, piv = sympy.Matrix(M.tolist()).rref()
    return list(piv)


def _full_basis(C, q):
    """Columns [d b^{q-1}, mu^q, b^q] as an mpmath matrix, plus block sizes."""
    n = C.dims[q]
    cols = []
    if q >= 1:
        dprev = C.d[q - 1]
        for j in _pivot_columns(C.d[q - 1]):
            cols.append([mpmath.mpf(int(x)) for x in dprev[:, j]])
    nb = len(cols)
    for v in C.mu[q]:
        cols.append([mpmath.mpf(x) for x in v])
    nmu = len(C.mu[q])
    if q < len(C.d):
        for j in _pivot_columns(C.d[q]):
            cols.append([mpmath.mpf(int(i == j)) for i in range(n)])
    if len(cols) != n:
        raise ValueError(f"bases do not span C^{q}: {len(cols)} vectors for dimension {n}")
    M = mpmath.matrix(n, n)
    for j, c in enumerate(cols):
        for i in range(n):
            M[i, j] = c[i]
    return M, nb, nmu


def reidemeister_torsion(C, squared=False):
    """tau with tau^2 = prod_q |det[d b^{q-1}, mu^q, b^q]|^((-1)^(q+1))."""
    t2 = mpmath.mpf(1)
    for q in range(len(C.dims)):
        if C.dims[q] == 0:
            continue
        M, _, _ = _full_basis(C, q)
        det = abs(mpmath.det(M))
        if det == 0:
            raise ValueError("cohomology basis does not span")
        t2 *= det ** ((-1) ** (q + 1))
    return t2 if squared else mpmath.sqrt(t2)


def _free_cohomology_basis(C, q):
    """Integer cocycles whose classes form a Z-basis of H^q_free."""
    n = C.dims[q]
    dq = C.boundary(q)
    if dq.shape[0]:
        K = integer_kernel(to_fmpz(dq))
    else:
        K = flint.fmpz_mat(n, n, [int(i == j) for i in range(n) for j in range(n)])
    k = K.ncols()
    if k == 0:
        return []
    dprev = C.incoming(q)
    Y = []
    for j in range(dprev.shape[1]):
        col = flint.fmpz_mat(n, 1, [int(x) for x in dprev[:, j]])
        y = solve_in_lattice(K, col)
        if y is None:
            raise ArithmeticError("coboundary outside the cocycle lattice")
        if any(y):
            Y.append(y)
    if Y:
        Ym = flint.fmpz_mat(k, len(Y), [Y[j][i] for i in range(k) for j in range(len(Y))])
        W = integer_kernel(Ym.transpose())
        if W.ncols():
            S = integer_kernel(W.transpose())
        else:
            S = flint.fmpz_mat(k, k, [int(i == j) for i in range(k) for j in range(k)])
    else:
        S = flint.fmpz_mat(k, 0)
    r = S.ncols()
    if r == 0:
        comp = flint.fmpz_mat(k, k, [int(i == j) for i in range(k) for j in range(k)])
    else:
        _, U = hnf_with_transform(S)
        Ui = U.inv()
        Uinv = flint.fmpz_mat(k, k, [int(Ui[i, j]) for i in range(k) for j in range(k)])
        comp = flint.fmpz_mat(k, k - r, [Uinv[i, r + j] for i in range(k) for j in range(k - r)])
    reps = K * comp
    return [[int(reps[i, j]) for i in range(n)] for j in range(reps.ncols())]


def torsion_orders(C, q):
    dprev = C.incoming(q)
    if dprev.shape[1] == 0:
        return 1
    return math.prod(snf(to_fmpz(dprev)).torsion)


def mu_covolume(C, q):
    """Covolume of H^q_free in the metric making mu^q orthonormal."""
    reps = _free_cohomology_basis(C, q)
    if not reps:
        return mpmath.mpf(1)
    M, nb, nmu = _full_basis(C, q)
    if len(reps) != nmu:
        raise ValueError(f"mu^{q} has {nmu} vectors but H^{q}_free has rank {len(reps)}")
    Minv = mpmath.inverse(M)
    coords = mpmath.matrix(nmu, nmu)
    for j, z in enumerate(reps):
        zz = mpmath.matrix([mpmath.mpf(x) for x in z])
        c = Minv * zz
        for i in range(nmu):
            coords[i, j] = c[nb + i]
    return abs(mpmath.det(coords))


def cheeger_product(C, squared=True):
    """prod_q (|H^q_tor| / vol_mu(H^q_free))^((-1)^(q+1))."""
    out = mpmath.mpf(1)
    for q in range(len(C.dims)):
        tor = torsion_orders(C, q)
        vol = mu_covolume(C, q)
        out *= (mpmath.mpf(tor) / vol) ** ((-1) ** (q + 1))
    return out if squared else mpmath.sqrt(out)


def cheeger_consistency(C, tol=1e-9):
    a = reidemeister_torsion(C, squared=True)
    b = cheeger_product(C)
    return abs(a - b) <= tol * max(abs(a), abs(b))


# ------------------------------------------- harmonic bases on the torus

def _complex_to_x(z, factor, ring):
    """Real coordinates (x0, x1) of the complex number z / scale in (1, w)."""
    s = complex(factor.scale)
    zz = mpmath.mpc(z) / mpmath.mpc(s.real, s.imag)
    wr = mpmath.mpf(str(ring.tr)) / 2
    wi = mpmath.sqrt(mpmath.mpf(ring.D)) if ring.omega_kind == "sqrt" else mpmath.sqrt(mpmath.mpf(ring.D)) / 2
    x1 = zz.imag / wi
    x0 = zz.real - x1 * wr
    return [x0, x1]


def _vec_to_x(vec, factor, ring):
    out = []
    for z in vec:
        out += _complex_to_x(z, factor, ring)
    return out


def _mpc(z):
    if isinstance(z, FieldElt):
        D = z.ring.D
        return mpmath.mpc(mpmath.mpf(z.re().numerator) / z.re().denominator,
                          mpmath.mpf(z.im_coeff().numerator) / z.im_coeff().denominator * mpmath.sqrt(D))
    return mpmath.mpc(z)


def harmonic_complex(T, factor="E", unitary=None):
    """Koszul complex of one factor with orthonormal harmonic bases mu.

    `unitary` optionally maps the orthonormal basis of each complex line
    system through a unitary matrix (to test basis independence).
    """
    f = T.factor(factor)
    R = T.ring
    m = T.m
    n = m + 1
    d0, d1 = T.koszul(factor)
    vol = T.mp_vol()
    mu0, mu1, mu2 = [], [], []
    for c in (mpmath.mpc(1), mpmath.mpc(0, 1)):
        z = c / mpmath.sqrt(vol)
        vec = [mpmath.mpc(0)] * n
        vec[f.h0] = z
        mu0.append(_vec_to_x(vec, f, R))
    gam = (T.gamma1, T.gamma2)
    plus = [[_mpc(z) for z in _plus_period(f, g, m, R)] for g in gam]
    minus = [[_mpc(z) for z in _minus_period(f, g, m, R)] for g in gam]
    lines = [plus, minus]
    norm = mpmath.sqrt(2 * vol)
    coeffs = [(1, 0), (0, 1)]
    if unitary is not None:
        coeffs = [tuple(unitary[i][j] for j in range(2)) for i in range(2)]
    for ca, cb in coeffs:
        for c in (mpmath.mpc(1), mpmath.mpc(0, 1)):
            ycat = []
            for i in range(2):
                v = [(c * (mpmath.mpc(ca) * lines[0][i][k] + mpmath.mpc(cb) * lines[1][i][k])) / norm
                     for k in range(n)]
                ycat += _vec_to_x(v, f, R)
            mu1.append(ycat)
    for c in (mpmath.mpc(1), mpmath.mpc(0, 1)):
        vec = [mpmath.mpc(0)] * n
        vec[f.l0] = c * mpmath.sqrt(vol)
        mu2.append(_vec_to_x(vec, f, R))
    return BasedComplexR([2 * n, 4 * n, 2 * n], [d0, d1], [mu0, mu1, mu2])


def boundary_torsion(T, unitary=None):
    """Reidemeister torsion of the torus with Ebar = E + E^* coefficients."""
    C = direct_sum(harmonic_complex(T, "E", unitary), harmonic_complex(T, "E*", unitary))
    return reidemeister_torsion(C), C


def random_based_complex(rng, max_rank=6, torsion=True):
    """Random integral cochain complex C^0 -> C^1 -> C^2 with random mu.

    Built from a diagonal complex (identity, zero and torsion blocks) conjugated
    by random unimodular matrices in each degree.
    """
    dims, d = _random_diagonal(rng, max_rank, torsion)
    Us = [_random_unimodular(rng, n) for n in dims]
    dd = []
    for q in range(len(d)):
        Uinv = _inv_int(Us[q])
        dd.append(Us[q + 1].dot(d[q]).dot(Uinv))
    C = BasedComplexR(dims, dd, [[] for _ in dims])
    # random real bases of cohomology: random combos of cocycles plus coboundaries
    mu = []
    for q in range(len(dims)):
        reps = _free_cohomology_basis(C, q)
        h = len(reps)
        A = [[mpmath.mpf(rng.uniform(-2, 2)) for _ in range(h)] for _ in range(h)]
        while h and abs(mpmath.det(mpmath.matrix(A))) < 1e-3:
            A = [[mpmath.mpf(rng.uniform(-2, 2)) for _ in range(h)] for _ in range(h)]
        dprev = C.incoming(q)
        vecs = []
        for i in range(h):
            v = [sum(A[i][j] * reps[j][k] for j in range(h)) for k in range(dims[q])]
            if dprev.shape[1]:
                y = [rng.uniform(-1, 1) for _ in range(dprev.shape[1])]
                v = [v[k] + sum(int(dprev[k, j]) * y[j] for j in range(dprev.shape[1])) for k in range(dims[q])]
            vecs.append(v)
        mu.append(vecs)
    C.mu = mu
    return C


def _random_diagonal(rng, max_rank, torsion):
    while True:
        # pieces: ('free', q), ('iso', q, k) meaning C^q -> C^{q+1} by k
        pieces = []
        for _ in range(rng.randint(1, max_rank)):
            kind = rng.random()
            q = rng.randint(0, 1)
            if kind < 0.3:
                pieces.append(("free", rng.randint(0, 2)))
            else:
                k = rng.choice([1, 1, 2, 3, 4, 6]) if torsion else 1
                pieces.append(("map", q, k))
        dims = [0, 0, 0]
        for p in pieces:
            if p[0] == "free":
                dims[p[1]] += 1
            else:
                dims[p[1]] += 1
                dims[p[1] + 1] += 1
        if max(dims) <= max_rank and min(dims) >= 1:
            break
    d = [np.zeros((dims[1], dims[0]), dtype=object), np.zeros((dims[2], dims[1]), dtype=object)]
    idx = [0, 0, 0]
    for p in pieces:
        if p[0] == "free":
            idx[p[1]] += 1
        else:
            q, k = p[1], p[2]
            d[q][idx[q + 1], idx[q]] = k
            idx[q] += 1
            idx[q + 1] += 1
    return dims, d


def _random_unimodular(rng, n):
    U = np.eye(n, dtype=object)
    for _ in range(3 * n):
        i, j = rng.randrange(n), rng.randrange(n)
        if i != j:
            U[i] = U[i] + rng.choice([-2, -1, 1, 2]) * U[j]
    perm = list(range(n))
    rng.shuffle(perm)
    return U[perm]


def _inv_int(U):
    M = to_fmpz(U)
    Q = M.inv()
    n = M.nrows()
    return np.array([[int(Q[i, j]) for j in range(n)] for i in range(n)], dtype=object)
