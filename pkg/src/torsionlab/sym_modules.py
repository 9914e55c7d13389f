"""Symmetric power modules Lambda_m = Sym^m(O_D^2) as integer lattices.

Basis v_j = e1^j e2^(m-j), j = 0..m; each O_D coordinate is split into its
(1, w) components, so Lambda_m has Z-rank 2(m+1) and coordinate 2j+s is the
w^s component of the v_j coefficient.  Matrices act on column vectors.
"""
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .bianchi import SL2Mat, builtin_presentation
from .quad_arith import FieldElt, QuadInt, delta_D, ring_of_integers


def sym_matrix(a, b, c, d, m, zero, one):
    """(m+1)x(m+1) matrix of Sym^m of [[a, b], [c, d]] over any commutative ring.

    Column j is the image of v_j = e1^j e2^(m-j), i.e. the coefficients of
    (a x + c)^j (b x + d)^(m-j) in x^0..x^m.
    """
    def pmul(p, q):
        out = [zero] * (len(p) + len(q) - 1)
        for i, x in enumerate(p):
            for k, y in enumerate(q):
                out[i + k] = out[i + k] + x * y
        return out

    e1 = [c, a]  # M e1 = a e1 + c e2, x stands for e1
    e2 = [d, b]
    pow1, pow2 = [[one]], [[one]]
    for _ in range(m):
        pow1.append(pmul(pow1[-1], e1))
        pow2.append(pmul(pow2[-1], e2))
    cols = [pmul(pow1[j], pow2[m - j]) for j in range(m + 1)]
    return [[cols[j][k] for j in range(m + 1)] for k in range(m + 1)]


def rho_od(M, m):
    """Action of M on Sym^m(O_D^2) as a matrix with O_D entries."""
    R = M.ring
    return sym_matrix(M.a, M.b, M.c, M.d, m, R.zero(), R.one())


def rho_field(M, m):
    """Action of a 2x2 matrix with F entries (tuple a, b, c, d)."""
    a, b, c, d = M
    R = a.ring
    return sym_matrix(a, b, c, d, m, FieldElt(Fraction(0), Fraction(0), R),
                      FieldElt(Fraction(1), Fraction(0), R))


def expand(mat, ring):
    """Replace each O_D (or F) entry by its 2x2 multiplication block."""
    n = len(mat)
    out = np.zeros((2 * n, 2 * n), dtype=object)
    for i in range(n):
        for j in range(n):
            x = mat[i][j]
            blk = ring.mult_matrix(x)
            out[2 * i, 2 * j], out[2 * i, 2 * j + 1] = blk[0]
            out[2 * i + 1, 2 * j], out[2 * i + 1, 2 * j + 1] = blk[1]
    return out


@dataclass(frozen=True)
class SymPowerLattice:
    m: int
    D: int

    @property
    def ring(self):
        return ring_of_integers(self.D)

    @property
    def rank_over_Z(self):
        return 2 * (self.m + 1)

    def basis_labels(self):
        return [f"{s}v{j}" for j in range(self.m + 1) for s in ("", "w*")]

    def action(self, M):
        return rho_action(M, self.m)

    def dual(self, M):
        return dual_action(M, self.m)


@dataclass
class ModuleMap:
    matrix: np.ndarray
    m: int
    D: int

    def __matmul__(self, other):
        return ModuleMap(self.matrix.dot(other.matrix), self.m, self.D)

    def __eq__(self, other):
        return (self.m, self.D) == (other.m, other.D) and np.array_equal(self.matrix, other.matrix)

    def det(self):
        return int(sympy.Matrix(self.matrix.tolist()).det())

    def to_json(self):
        return json.dumps({"m": self.m, "D": self.D,
                           "matrix": [[int(x) for x in row] for row in self.matrix]})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.array(d["matrix"], dtype=object), d["m"], d["D"])


def rho_action(M, m):
    return ModuleMap(expand(rho_od(M, m), M.ring), m, M.ring.D)


def dual_matrix(M):
    """[[d, -c], [-b, a]], which equals A M A^-1 for A = [[0, -1], [1, 0]]."""
    return SL2Mat(M.d, -M.c, -M.b, M.a)


def dual_action(M, m):
    return rho_action(dual_matrix(M), m)


def contragredient_od(M, m):
    """rho(M^-1)^T: the contragredient for the orthonormal pairing on {v_j}."""
    inv = rho_od(M.inv(), m)
    n = m + 1
    return [[inv[j][i] for j in range(n)] for i in range(n)]


def contragredient_action(M, m):
    return ModuleMap(expand(contragredient_od(M, m), M.ring), m, M.ring.D)


def _as_field(x, ring):
    if isinstance(x, FieldElt):
        return x
    if isinstance(x, QuadInt):
        return x.to_field()
    return FieldElt(Fraction(x), Fraction(0), ring)


def to_od_vector(x, ring):
    """Integer coordinate vector of length 2(m+1) -> list of O_D coefficients."""
    x = list(x)
    return [QuadInt(int(x[2 * j]), int(x[2 * j + 1]), ring) for j in range(len(x) // 2)]


def pairing(x, y, ring=None):
    """Bilinear pairing with {v_j} orthonormal: sum_j x_j y_j in F.

    x and y are lists of m+1 coefficients (QuadInt, FieldElt or int), or
    integer vectors of length 2(m+1) when `ring` is given.
    """
    if ring is not None:
        if len(x) % 2 == 0 and not isinstance(x[0], (QuadInt, FieldElt)):
            x = to_od_vector(x, ring)
        if len(y) % 2 == 0 and not isinstance(y[0], (QuadInt, FieldElt)):
            y = to_od_vector(y, ring)
    if len(x) != len(y):
        raise ValueError("pairing of elements of different weight")
    R = ring
    for v in list(x) + list(y):
        if isinstance(v, (QuadInt, FieldElt)):
            R = v.ring
            break
    if R is None:
        raise ValueError("cannot infer the ring; pass ring=")
    total = FieldElt(Fraction(0), Fraction(0), R)
    for a, b in zip(x, y):
        total = total + _as_field(a, R) * _as_field(b, R)
    return total


def re_gram(ring):
    """Gram matrix of Re(x y) on the Z-basis (1, w) of O_D."""
    t = Fraction(ring.tr, 2)
    return [[Fraction(1), t], [t, Fraction(ring.tr * ring.tr, 2) - ring.nm]]


def _field_mult_matrix(x):
    R = x.ring
    return [[x.a, -R.nm * x.b], [x.b, x.a + R.tr * x.b]]


@dataclass
class DualityIso:
    m: int
    D: int
    field_matrix: list  # S = rho_m(A)/delta_D as a matrix over F
    integer_matrix: np.ndarray  # Lambda_m -> Lambda_m^* in dual-lattice coordinates
    determinant: int
    intertwines: bool

    @property
    def is_bijective(self):
        return abs(self.determinant) == 1


def self_duality(m, D, generators=None):
    """The map S = rho_m(A)/delta_D and its integer matrix onto the dual lattice.

    The dual lattice Lambda_m^* = {y : Re<x, y> in Z for all x in Lambda_m} is
    computed from the Gram matrix of Re(xy) on O_D, independently of delta_D.
    The integer matrix sends x to the functional Re<., S x>.
    """
    R = ring_of_integers(D)
    A = SL2Mat.of(R, 0, -1, 1, 0)
    dinv = delta_D(D).value.inverse()
    rA = rho_od(A, m)
    S = [[dinv * x for x in row] for row in rA]
    Sq = expand(S, R)  # rational coordinates of S on the Z-basis of Lambda_m
    G = re_gram(R)
    n = 2 * (m + 1)
    gram = np.zeros((n, n), dtype=object)
    for j in range(m + 1):
        for s in range(2):
            for t in range(2):
                gram[2 * j + s, 2 * j + t] = G[s][t]
    Z = gram.dot(Sq)
    if any(Fraction(v).denominator != 1 for v in Z.flat):
        raise ArithmeticError("S does not map Lambda_m into its dual lattice")
    Z = np.array([[int(v) for v in row] for row in Z], dtype=object)
    det = int(sympy.Matrix(Z.tolist()).det())
    gens = generators
    if gens is None:
        gens = builtin_presentation(D).generator_matrices if D in (1, 2, 3, 7, 11) else []
    ok = True
    for g in gens:
        lhs = dual_action(g, m).matrix.dot(Sq)
        rhs = Sq.dot(rho_action(g, m).matrix)
        if not np.array_equal(lhs, rhs):
            ok = False
    return DualityIso(m, D, S, Z, det, ok)


def transpose_inverse_holds(M, m):
    """Does dual_action(M) equal rho_action(M)^(-T) for the orthonormal pairing?

    Checked over F on the (m+1)x(m+1) matrices.  True for m <= 1; for m >= 2
    it fails in general because the monomial basis is not orthonormal for
    the invariant form (that needs binomial weights).
    """
    lhs = rho_od(dual_matrix(M), m)
    rhs = contragredient_od(M, m)
    return lhs == rhs
