"""Exact arithmetic in imaginary quadratic orders O_D.

Elements are stored by their coordinates in the basis {1, w} where
w = sqrt(-D) for D = 1, 2 mod 4 and w = (1 + sqrt(-D))/2 for D = 3 mod 4.
Ideals are Z-lattices in Hermite normal form with rows (n, 0), (b, c),
i.e. the ideal is nZ + (b + c*w)Z.

>>> O = ring_of_integers(1)
>>> norm(O(1, 1))
2
>>> ideal_norm(ideal(O, O(2, 0)))
4
>>> congruence_index(ideal(O, O(1, 1)))
6
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (implicit_multiplication, parse_expr,
                                        standard_transformations)
from sympy import factorint


def _squarefree(D):
    return all(e == 1 for e in factorint(D).values())


@dataclass(frozen=True)
class QuadRing:
    D: int
    omega_kind: str  # "sqrt" (D = 1,2 mod 4) or "half" (D = 3 mod 4)

    @property
    def tr(self):
        # w^2 = tr*w - nm
        return 0 if self.omega_kind == "sqrt" else 1

    @property
    def nm(self):
        return self.D if self.omega_kind == "sqrt" else (1 + self.D) // 4

    @property
    def omega(self):
        return sympy.sqrt(-self.D) if self.omega_kind == "sqrt" else (1 + sympy.sqrt(-self.D)) / 2

    @property
    def disc(self):
        return -4 * self.D if self.omega_kind == "sqrt" else -self.D

    @property
    def im_omega_sq(self):
        """(Im w)^2 as a rational number (covolume^2 of O_D in C)."""
        return Fraction(self.D) if self.omega_kind == "sqrt" else Fraction(self.D, 4)

    def __call__(self, a, b=0):
        return QuadInt(int(a), int(b), self)

    def one(self):
        return QuadInt(1, 0, self)

    def zero(self):
        return QuadInt(0, 0, self)

    def w(self):
        return QuadInt(0, 1, self)

    def units(self):
        """All units of O_D, listed as powers of a generator."""
        if self.D == 1:
            g = self(0, 1)
        elif self.D == 3:
            g = self(0, 1)  # w = (1+sqrt(-3))/2 has order 6
        else:
            g = self(-1, 0)
        out, x = [], self.one()
        while True:
            out.append(x)
            x = x * g
            if x == self.one():
                return out

    def mult_matrix(self, x):
        """Integer matrix of y -> x*y in the basis (1, w), acting on columns."""
        a, b = x.a, x.b
        return ((a, -self.nm * b), (b, a + self.tr * b))

    def __repr__(self):
        return f"O_{self.D}"


@lru_cache(maxsize=None)
def ring_of_integers(D):
    D = int(D)
    if D < 1 or not _squarefree(D):
        raise ValueError(f"D must be a squarefree positive integer, got {D}")
    return QuadRing(D, "half" if D % 4 == 3 else "sqrt")


@dataclass(frozen=True)
class QuadInt:
    a: int
    b: int
    ring: QuadRing

    def _lift(self, other):
        if isinstance(other, QuadInt):
            return other
        return QuadInt(int(other), 0, self.ring)

    def __add__(self, other):
        other = self._lift(other)
        return QuadInt(self.a + other.a, self.b + other.b, self.ring)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return QuadInt(self.a - other.a, self.b - other.b, self.ring)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return QuadInt(-self.a, -self.b, self.ring)

    def __mul__(self, other):
        other = self._lift(other)
        R = self.ring
        a, b, c, d = self.a, self.b, other.a, other.b
        # (a + b w)(c + d w) with w^2 = tr w - nm
        bd = b * d
        return QuadInt(a * c - R.nm * bd, a * d + b * c + R.tr * bd, R)

    __rmul__ = __mul__

    def conj(self):
        return QuadInt(self.a + self.ring.tr * self.b, -self.b, self.ring)

    def norm(self):
        R = self.ring
        return self.a * self.a + R.tr * self.a * self.b + R.nm * self.b * self.b

    def trace(self):
        return 2 * self.a + self.ring.tr * self.b

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def __complex__(self):
        return complex(self.a) + self.b * complex(self.ring.omega.evalf())

    def to_field(self):
        return FieldElt(Fraction(self.a), Fraction(self.b), self.ring)

    def __repr__(self):
        s = "w" if self.ring.D not in (1,) else "i"
        if self.b == 0:
            return str(self.a)
        t = {1: s, -1: "-" + s}.get(self.b, f"{self.b}*{s}")
        if self.a == 0:
            return t
        return f"{self.a}{t}" if t.startswith("-") else f"{self.a}+{t}"


@dataclass(frozen=True)
class FieldElt:
    """Element a + b*w of F = Q(sqrt(-D)) with rational coordinates."""
    a: Fraction
    b: Fraction
    ring: QuadRing

    def _lift(self, other):
        if isinstance(other, FieldElt):
            return other
        if isinstance(other, QuadInt):
            return other.to_field()
        return FieldElt(Fraction(other), Fraction(0), self.ring)

    def __add__(self, other):
        other = self._lift(other)
        return FieldElt(self.a + other.a, self.b + other.b, self.ring)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return FieldElt(self.a - other.a, self.b - other.b, self.ring)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return FieldElt(-self.a, -self.b, self.ring)

    def __mul__(self, other):
        other = self._lift(other)
        R = self.ring
        a, b, c, d = self.a, self.b, other.a, other.b
        bd = b * d
        return FieldElt(a * c - R.nm * bd, a * d + b * c + R.tr * bd, R)

    __rmul__ = __mul__

    def conj(self):
        return FieldElt(self.a + self.ring.tr * self.b, -self.b, self.ring)

    def norm(self):
        R = self.ring
        return self.a * self.a + R.tr * self.a * self.b + R.nm * self.b * self.b

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of 0 in F")
        c = self.conj()
        return FieldElt(c.a / n, c.b / n, self.ring)

    def __truediv__(self, other):
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def re(self):
        """Exact real part (rational)."""
        return self.a + Fraction(self.ring.tr, 2) * self.b

    def im_coeff(self):
        """Imaginary part divided by sqrt(D) (rational)."""
        return self.b if self.ring.omega_kind == "sqrt" else self.b / 2

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def is_integral(self):
        return self.a.denominator == 1 and self.b.denominator == 1

    def to_int(self):
        if not self.is_integral():
            raise ValueError(f"{self} is not in O_D")
        return QuadInt(int(self.a), int(self.b), self.ring)

    def __complex__(self):
        return complex(float(self.re()), float(self.im_coeff()) * self.ring.D ** 0.5)

    def __repr__(self):
        return f"({self.a})+({self.b})*w"


def norm(x):
    return x.norm()


def field(ring, a, b=0):
    return FieldElt(Fraction(a), Fraction(b), ring)


# ---------------------------------------------------------------- lattices

def _egcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def lattice_hnf(vectors):
    """HNF ((n, 0), (b, c)) of the full-rank Z-span of 2-vectors."""
    px, py = 0, 0
    xs = []
    for x, y in vectors:
        if y == 0:
            xs.append(x)
            continue
        if py == 0:
            px, py = x, y
            continue
        g, s, t = _egcd(py, y)
        nx, ny = s * px + t * x, g
        # remainder with zero second coordinate
        xs.append((y // g) * px - (py // g) * x)
        px, py = nx, ny
    n = 0
    for x in xs:
        n = gcd(n, x)
    if n == 0 or py == 0:
        raise ValueError("lattice is degenerate")
    if py < 0:
        px, py = -px, -py
    return ((n, 0), (px % n, py))


@dataclass(frozen=True)
class IdealOD:
    hnf: tuple
    ring: QuadRing
    generators: tuple = ()

    def __eq__(self, other):
        return isinstance(other, IdealOD) and self.hnf == other.hnf and self.ring == other.ring

    def __hash__(self):
        return hash((self.hnf, self.ring.D))

    @property
    def n(self):
        return self.hnf[0][0]

    @property
    def b(self):
        return self.hnf[1][0]

    @property
    def c(self):
        return self.hnf[1][1]

    def basis(self):
        R = self.ring
        return (R(self.n, 0), R(self.b, self.c))

    def norm(self):
        return self.n * self.c

    def reduce(self, x):
        """Canonical representative of x mod the ideal, as a coordinate pair."""
        a, b = (x.a, x.b) if not isinstance(x, tuple) else x
        k = b // self.c
        a, b = a - k * self.b, b - k * self.c
        return (a % self.n, b)

    def contains(self, x):
        a, b = (x.a, x.b) if not isinstance(x, tuple) else x
        if b % self.c:
            return False
        return (a - (b // self.c) * self.b) % self.n == 0

    __contains__ = contains

    def __mul__(self, other):
        gens = [x * y for x in self.basis() for y in other.basis()]
        return ideal(self.ring, *gens)

    def __pow__(self, k):
        out = unit_ideal(self.ring)
        for _ in range(k):
            out = out * self
        return out

    def is_subset(self, other):
        return all(other.contains(x) for x in self.basis())

    def divides(self, other):
        """self | other, i.e. other is contained in self."""
        return other.is_subset(self)

    def to_json(self):
        return [self.hnf[0][0], self.hnf[0][1], self.hnf[1][0], self.hnf[1][1]]

    def label(self):
        if self.generators:
            return ",".join(repr(g) for g in self.generators)
        return "hnf" + str(self.to_json())

    def __repr__(self):
        return f"Ideal({self.label()}; N={self.norm()})"


def ideal(ring, *gens):
    """Ideal of O_D generated by the given elements."""
    gens = [g if isinstance(g, QuadInt) else ring(g) for g in gens]
    if not gens or all(g.is_zero() for g in gens):
        raise ValueError("zero ideal")
    w = ring.w()
    vecs = []
    for g in gens:
        for h in (g, g * w):
            vecs.append((h.a, h.b))
    return IdealOD(lattice_hnf(vecs), ring, tuple(gens))


def unit_ideal(ring):
    return IdealOD(((1, 0), (0, 1)), ring, (ring.one(),))


def ideal_norm(a):
    if a.norm() == 0:
        raise ValueError("zero ideal")
    return a.norm()


def _roots_mod_p(ring, p):
    """Roots of x^2 - tr*x + nm mod p."""
    tr, nm = ring.tr, ring.nm
    if p < 2000:
        return [x for x in range(p) if (x * x - tr * x + nm) % p == 0]
    disc = (tr * tr - 4 * nm) % p
    roots = set()
    inv2 = pow(2, -1, p)
    for s in sympy.ntheory.sqrt_mod(disc, p, all_roots=True) or []:
        roots.add(((tr + s) * inv2) % p)
    return sorted(roots)


def primes_above(ring, p):
    """Prime ideals of O_D above the rational prime p."""
    roots = _roots_mod_p(ring, p)
    if not roots:
        return [ideal(ring, ring(p))]
    w = ring.w()
    return [ideal(ring, ring(p), w - r) for r in roots]


def factor_ideal(a):
    """[(prime ideal, exponent), ...] with the product equal to a."""
    out = []
    for p in sorted(factorint(a.norm())):
        for P in primes_above(a.ring, p):
            k, Q = 0, P
            while a.is_subset(Q):
                k += 1
                Q = Q * P
            if k:
                out.append((_with_generator(P), k))
    prod = unit_ideal(a.ring)
    for P, k in out:
        prod = prod * P ** k
    if prod != a:
        raise ArithmeticError(f"factorization of {a} failed")
    return out


def ideals_of_norm(ring, N):
    """All ideals of norm exactly N (via HNF enumeration)."""
    out = []
    for c in range(1, N + 1):
        if N % c:
            continue
        n = N // c
        if n % c:
            continue
        for b in range(0, n, c):
            cand = IdealOD(((n, 0), (b, c)), ring)
            # closed under multiplication by w
            w = ring.w()
            if all(cand.contains(x * w) for x in cand.basis()):
                out.append(cand)
    return out


def ideals_up_to(ring, max_norm, min_norm=1):
    out = []
    for N in range(min_norm, max_norm + 1):
        for a in ideals_of_norm(ring, N):
            out.append(_with_generator(a))
    return out


def _with_generator(a):
    """Attach a principal generator when one exists (search by norm)."""
    N = a.norm()
    R = a.ring
    cands = sorted(_elements_of_norm(R, N), key=lambda v: (v[0] <= 0, v[1] < 0, abs(v[0]) + abs(v[1])))
    for x, y in cands:
        g = R(x, y)
        if ideal(R, g) == a:
            return IdealOD(a.hnf, R, (g,))
    return a


def _elements_of_norm(ring, N):
    # a^2 + tr a b + nm b^2 = N ; bounded search, ordered for stable output
    bmax = isqrt(4 * N // max(1, 4 * ring.nm - ring.tr ** 2)) + 1
    for b in range(0, bmax + 1):
        for sb in ((b,) if b == 0 else (b, -b)):
            amax = isqrt(N) + abs(sb) + 1
            for a in range(-amax, amax + 1):
                if a * a + ring.tr * a * sb + ring.nm * sb * sb == N:
                    yield (a, sb)


# ------------------------------------------------------------ residue ring

class ResidueRing:
    """The finite ring O_D / a with elements coded as integers 0..N-1."""

    def __init__(self, a):
        self.ideal = a
        self.ring = a.ring
        self.size = a.norm()
        n, c = a.n, a.c
        self.elements = [(x, y) for x in range(n) for y in range(c)]
        self._code = {e: i for i, e in enumerate(self.elements)}
        N = self.size
        add = np.zeros((N, N), dtype=np.int64)
        mul = np.zeros((N, N), dtype=np.int64)
        R = self.ring
        for i, (x1, y1) in enumerate(self.elements):
            u = R(x1, y1)
            for j, (x2, y2) in enumerate(self.elements):
                v = R(x2, y2)
                add[i, j] = self._code[a.reduce(u + v)]
                mul[i, j] = self._code[a.reduce(u * v)]
        self.add = add
        self.mul = mul
        self.neg = np.array([self._code[a.reduce(-R(x, y))] for x, y in self.elements], dtype=np.int64)
        self.zero = self.code(R.zero())
        self.one = self.code(R.one())

    def code(self, x):
        return self._code[self.ideal.reduce(x)]

    def element(self, k):
        x, y = self.elements[k]
        return self.ring(x, y)

    def units(self):
        return [u for u in range(self.size) if (self.mul[u] == self.one).any()]

    def inverse(self, u):
        hits = np.nonzero(self.mul[u] == self.one)[0]
        if len(hits) == 0:
            raise ZeroDivisionError("not a unit")
        return int(hits[0])

    def __len__(self):
        return self.size


def residue_ring(a):
    return ResidueRing(a)


# ---------------------------------------------------------------- delta_D

@dataclass(frozen=True)
class DeltaD:
    value: FieldElt
    im_part: Fraction  # Im(delta) / sqrt(D)

    @property
    def D(self):
        return self.value.ring.D

    def im_float(self):
        return float(self.im_part) * self.D ** 0.5

    def im_squared(self):
        return self.im_part ** 2 * self.D


def delta_D(D):
    R = ring_of_integers(D)
    if R.omega_kind == "sqrt":
        v = FieldElt(Fraction(0), Fraction(1), R)
    else:
        # sqrt(-D)/2 = w - 1/2
        v = FieldElt(Fraction(-1, 2), Fraction(1), R)
    return DeltaD(v, v.im_coeff())


# ------------------------------------------------------ congruence index

def congruence_index(a):
    """[SL(2,O_D) : Gamma(a)] = N(a)^3 prod_{p|a} (1 - 1/N(p)^2)."""
    N = a.norm()
    val = Fraction(N ** 3)
    for P, _ in factor_ideal(a):
        val *= 1 - Fraction(1, P.norm() ** 2)
    assert val.denominator == 1
    idx = int(val)
    assert idx >= N
    return idx


def count_sl2_residue(a):
    """|SL(2, O_D/a)| by direct count of ad - bc = 1 (oracle)."""
    Rr = residue_ring(a)
    N = Rr.size
    mul, add, neg = Rr.mul, Rr.add, Rr.neg
    # for each (a, d) pair the value ad; for each (b, c) pair the value bc
    ad = mul.reshape(-1)
    bc = mul.reshape(-1)
    cnt_ad = np.bincount(ad, minlength=N)
    cnt_bc = np.bincount(bc, minlength=N)
    total = 0
    for x in range(N):
        # need x - y = 1, i.e. y = x - 1
        y = add[x, neg[Rr.one]]
        total += int(cnt_ad[x]) * int(cnt_bc[y])
    return total


def reduction_image_size(a, gens):
    """Size of the subgroup of SL(2, O_D/a) generated by the given matrices.

    gens: iterable of 4-tuples (a, b, c, d) of QuadInt.  Breadth-first search
    over residue codes, vectorised with numpy.
    """
    Rr = residue_ring(a)
    N = Rr.size
    add, mul = Rr.add, Rr.mul
    G = [tuple(Rr.code(x) for x in g) for g in gens]
    dense = N ** 4 <= 40_000_000
    ident = np.array([[Rr.one, Rr.zero, Rr.zero, Rr.one]], dtype=np.int64)

    def key(arr):
        return ((arr[:, 0] * N + arr[:, 1]) * N + arr[:, 2]) * N + arr[:, 3]

    if dense:
        seen = np.zeros(N ** 4, dtype=bool)
    else:
        seen_set = set()
    frontier = ident
    if dense:
        seen[key(frontier)] = True
    else:
        seen_set.update(key(frontier).tolist())
    count = 1
    while len(frontier):
        new = []
        a_, b_, c_, d_ = frontier.T
        for g00, g01, g10, g11 in G:
            na = add[mul[a_, g00], mul[b_, g10]]
            nb = add[mul[a_, g01], mul[b_, g11]]
            nc = add[mul[c_, g00], mul[d_, g10]]
            nd = add[mul[c_, g01], mul[d_, g11]]
            new.append(np.stack([na, nb, nc, nd], axis=1))
        cand = np.concatenate(new)
        k = key(cand)
        k, idx = np.unique(k, return_index=True)
        cand = cand[idx]
        if dense:
            fresh = ~seen[k]
            seen[k[fresh]] = True
        else:
            fresh = np.array([x not in seen_set for x in k.tolist()], dtype=bool)
            seen_set.update(k[fresh].tolist())
        frontier = cand[fresh]
        count += len(frontier)
    return count


# ---------------------------------------------------------------- parsing

def parse_element(text, ring):
    """Parse 'a+b*w', 'a+b*sqrt(-D)' or (for D=1) 'a+b*i' into a QuadInt."""
    w = sympy.Symbol("w")
    local = {"w": w, "i": sympy.I, "I": sympy.I, "sqrt": sympy.sqrt}
    expr = parse_expr(text.replace("^", "**"), local_dict=local,
                      transformations=standard_transformations + (implicit_multiplication,))
    expr = sympy.expand(expr.subs(w, ring.omega))
    re_, im_ = expr.as_real_imag()
    re_ = sympy.nsimplify(re_)
    y = sympy.nsimplify(im_ / sympy.sqrt(ring.D))
    if not (re_.is_rational and y.is_rational):
        raise ValueError(f"cannot parse {text!r} as an element of O_{ring.D}")
    x, y = Fraction(str(re_)), Fraction(str(y))
    # x + y sqrt(-D) in the basis (1, w)
    if ring.omega_kind == "sqrt":
        fe = FieldElt(x, y, ring)
    else:
        fe = FieldElt(x - y, 2 * y, ring)
    return fe.to_int()


def parse_ideal(text, ring):
    """Parse a comma separated generator list, e.g. '1+i' or '(2, 1+w)'."""
    text = text.strip()
    if text.startswith("(") and text.endswith(")") and "," in text:
        text = text[1:-1]
    gens = [parse_element(t, ring) for t in text.split(",") if t.strip()]
    return ideal(ring, *gens)


def ideal_from_json(ring, vals):
    n, z, b, c = vals
    assert z == 0
    return IdealOD(((n, 0), (b, c)), ring)
