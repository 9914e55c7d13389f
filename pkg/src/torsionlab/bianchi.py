"""Bianchi groups SL(2, O_D): presentations, congruence subgroups, coset
tables, Reidemeister-Schreier rewriting and cusps.

Words are tuples of signed generator indices, 1-based: k > 0 stands for
generator k-1 and -k for its inverse.
"""
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor

from .quad_arith import (FieldElt, IdealOD, QuadInt, ideal, lattice_hnf,
                         parse_ideal, residue_ring, ring_of_integers)

SUPPORTED_D = (1, 2, 3, 7, 11)
CLASS_NUMBER_ONE = (1, 2, 3, 7, 11, 19, 43, 67, 163)


@dataclass(frozen=True)
class SL2Mat:
    a: QuadInt
    b: QuadInt
    c: QuadInt
    d: QuadInt

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not (det.a == 1 and det.b == 0):
            raise ValueError(f"determinant {det} is not 1")

    @classmethod
    def of(cls, ring, a, b, c, d):
        def lift(x):
            return x if isinstance(x, QuadInt) else ring(x)
        return cls(lift(a), lift(b), lift(c), lift(d))

    @property
    def ring(self):
        return self.a.ring

    def __mul__(self, o):
        return _sl2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                    self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inv(self):
        return _sl2(self.d, -self.b, -self.c, self.a)

    def __neg__(self):
        return _sl2(-self.a, -self.b, -self.c, -self.d)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def key(self):
        return tuple((x.a, x.b) for x in self.entries())

    def is_identity(self):
        return self.key() == ((1, 0), (0, 0), (0, 0), (1, 0))

    def is_minus_identity(self):
        return self.key() == ((-1, 0), (0, 0), (0, 0), (-1, 0))

    def trace(self):
        return self.a + self.d

    def __repr__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def _sl2(a, b, c, d):
    # skip the determinant check on products of checked matrices
    m = object.__new__(SL2Mat)
    object.__setattr__(m, "a", a)
    object.__setattr__(m, "b", b)
    object.__setattr__(m, "c", c)
    object.__setattr__(m, "d", d)
    return m


def identity(ring):
    return SL2Mat.of(ring, 1, 0, 0, 1)


def translation(ring, x):
    return SL2Mat.of(ring, 1, x, 0, 1)


def evaluate(word, gens, ring=None):
    ring = ring or gens[0].ring
    M = identity(ring)
    invs = {}
    for k in word:
        if k > 0:
            M = M * gens[k - 1]
        else:
            g = invs.get(k)
            if g is None:
                g = invs[k] = gens[-k - 1].inv()
            M = M * g
    return M


def invert_word(word):
    return tuple(-k for k in reversed(word))


@dataclass
class Presentation:
    generator_matrices: list
    relators: list
    names: list = None
    D: int = None

    def __post_init__(self):
        self.relators = [tuple(r) for r in self.relators]
        if self.names is None:
            self.names = [f"g{i}" for i in range(len(self.generator_matrices))]

    @property
    def generator_count(self):
        return len(self.generator_matrices)

    def evaluate(self, word):
        return evaluate(word, self.generator_matrices, ring_of_integers(self.D))

    def check(self):
        for g in self.generator_matrices:
            det = g.a * g.d - g.b * g.c
            if not (det.a == 1 and det.b == 0):
                raise ValueError(f"generator {g} has determinant {det}")
        for r in self.relators:
            if not self.evaluate(r).is_identity():
                raise ValueError(f"relator {r} does not evaluate to the identity")
        return True


def check_presentation(P):
    return P.check()


def _lift_psl(D, gens, names, psl_relators, minus_id):
    """SL(2) presentation from PSL(2) relators; minus_id is a word equal to -Id."""
    ring = ring_of_integers(D)
    rels = [tuple(minus_id) * 2]
    for j in range(len(gens)):
        w = (j + 1,)
        if set(abs(k) for k in minus_id) == {j + 1}:
            continue
        rels.append(tuple(minus_id) + w + invert_word(minus_id) + (-(j + 1),))
    for r in psl_relators:
        M = evaluate(r, gens, ring)
        if M.is_identity():
            rels.append(tuple(r))
        elif M.is_minus_identity():
            rels.append(tuple(r) + invert_word(minus_id))
        else:
            raise ValueError(f"PSL relator {r} is not central: {M}")
    return Presentation(list(gens), rels, list(names), D)


def builtin_presentation(D):
    """Presentation of SL(2, O_D) for D in {1, 2, 3, 7, 11}."""
    if D not in SUPPORTED_D:
        raise ValueError(f"no built-in presentation for D={D}; supported: {SUPPORTED_D}")
    R = ring_of_integers(D)
    w = R.w()
    t = SL2Mat.of(R, 1, 1, 0, 1)
    u = SL2Mat.of(R, 1, w, 0, 1)
    a = SL2Mat.of(R, 0, -1, 1, 0)
    T, U, A, L = 1, 2, 3, 4
    comm = (T, U, -T, -U)
    if D == 1:
        l = SL2Mat.of(R, R(0, -1), 0, 0, R(0, 1))
        gens, names = [t, u, a, l], ["t", "u", "a", "l"]
        rels = [(A, A), (L, L), (A, L) * 2, (T, L) * 2, (U, L) * 2,
                (A, T) * 3, (U, A, L) * 3, comm]
    elif D == 3:
        l = SL2Mat.of(R, w, 0, 0, w.conj())
        gens, names = [t, u, a, l], ["t", "u", "a", "l"]
        rels = [(A, A), (L, L, L), (A, L) * 2, (A, T) * 3, comm,
                (L, T, -L, T, -U), (L, U, -L, T), (T, L) * 3, (U, L) * 3,
                (U, A, -L) * 3]
    else:
        gens, names = [t, u, a], ["t", "u", "a"]
        if D == 2:
            extra = (-U, A, U, A) * 2
        elif D == 7:
            extra = (A, T, -U, A, U) * 2
        else:
            extra = (A, T, -U, A, U) * 3
        rels = [(A, A), (A, T) * 3, extra, comm]
    P = _lift_psl(D, gens, names, rels, (A, A))
    P.check()
    return P


# ------------------------------------------------------------ subgroups

@dataclass(frozen=True)
class SubgroupSpec:
    kind: str  # "principal", "hecke", "hecke_intersect"
    ideal: IdealOD
    base_prime_ideal: IdealOD = None

    @property
    def ring(self):
        return self.ideal.ring

    @property
    def D(self):
        return self.ideal.ring.D

    def level(self):
        if self.kind == "hecke_intersect":
            return self.ideal * self.base_prime_ideal
        return self.ideal

    def label(self):
        s = f"{self.kind}:{self.ideal.label()}"
        if self.base_prime_ideal is not None:
            s += f":base={self.base_prime_ideal.label()}"
        return s


def parse_subgroup(text, D):
    """'principal:1+i', 'hecke:1+i', 'hecke-intersect:1+i:base=2'."""
    R = ring_of_integers(D)
    parts = text.split(":")
    kind = parts[0].strip().replace("-", "_")
    if kind not in ("principal", "hecke", "hecke_intersect"):
        raise ValueError(f"unknown subgroup kind {parts[0]!r}")
    a = parse_ideal(parts[1], R)
    base = None
    if kind == "hecke_intersect":
        opts = dict(p.split("=", 1) for p in parts[2:])
        if "base" not in opts:
            raise ValueError("hecke-intersect needs base=<ideal>")
        base = parse_ideal(opts["base"], R)
    return SubgroupSpec(kind, a, base)


def principal(a):
    return SubgroupSpec("principal", a)


def hecke(a):
    return SubgroupSpec("hecke", a)


def _in_gamma(M, a):
    return (a.contains(M.a - 1) and a.contains(M.d - 1)
            and a.contains(M.b) and a.contains(M.c))


def is_member(M, S):
    if S.kind == "principal":
        return _in_gamma(M, S.ideal)
    if S.kind == "hecke":
        return S.ideal.contains(M.c)
    if S.kind == "hecke_intersect":
        return S.ideal.contains(M.c) and _in_gamma(M, S.base_prime_ideal)
    raise ValueError(S.kind)


def is_torsion_free(S):
    """Sufficient trace criterion: a nontrivial torsion element of Gamma(a)
    has trace t with t - 2 in {-1, -2, -3, -4}, so it is excluded when the
    level divides none of (1), (2), (3), (4)."""
    if S.kind == "hecke":
        return False
    a = S.ideal if S.kind == "principal" else S.base_prime_ideal
    return not any(a.contains(a.ring(k)) for k in (1, 2, 3, 4))


class _LabelAction:
    """Right action of SL(2, O_D) on coset labels of a congruence subgroup."""

    def __init__(self, S):
        self.S = S
        if S.kind == "principal":
            self.parts = [("mat", residue_ring(S.ideal))]
        elif S.kind == "hecke":
            self.parts = [("p1", residue_ring(S.ideal))]
        else:
            self.parts = [("p1", residue_ring(S.ideal)), ("mat", residue_ring(S.base_prime_ideal))]
        self._unit_cache = {}

    def identity(self):
        out = []
        for kind, Rr in self.parts:
            if kind == "mat":
                out.append((Rr.one, Rr.zero, Rr.zero, Rr.one))
            else:
                out.append(self._normalize(Rr, (Rr.zero, Rr.one)))
        return tuple(out)

    def _normalize(self, Rr, pair):
        units = self._unit_cache.get(id(Rr))
        if units is None:
            units = self._unit_cache[id(Rr)] = Rr.units()
        c, d = pair
        mul = Rr.mul
        return min((int(mul[u, c]), int(mul[u, d])) for u in units)

    def codes(self, M):
        return [tuple(Rr.code(x) for x in M.entries()) for _, Rr in self.parts]

    def act_codes(self, label, gcodes):
        out = []
        for (kind, Rr), lab, g in zip(self.parts, label, gcodes):
            add, mul = Rr.add, Rr.mul
            g00, g01, g10, g11 = g
            if kind == "mat":
                a, b, c, d = lab
                out.append((int(add[mul[a, g00], mul[b, g10]]), int(add[mul[a, g01], mul[b, g11]]),
                            int(add[mul[c, g00], mul[d, g10]]), int(add[mul[c, g01], mul[d, g11]])))
            else:
                c, d = lab
                out.append(self._normalize(Rr, (int(add[mul[c, g00], mul[d, g10]]),
                                                int(add[mul[c, g01], mul[d, g11]]))))
        return tuple(out)

    def act(self, label, M):
        return self.act_codes(label, self.codes(M))


@dataclass
class CosetTable:
    index: int
    action: list  # action[j][i] = coset of (coset i) * g_j
    parent: list  # parent[i] = (coset, signed letter) or None for coset 0
    labels: list = field(default=None, repr=False)
    inverse_action: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.inverse_action is None:
            self.inverse_action = []
            for perm in self.action:
                inv = [0] * self.index
                for i, j in enumerate(perm):
                    inv[j] = i
                self.inverse_action.append(inv)

    def step(self, i, letter):
        return self.action[letter - 1][i] if letter > 0 else self.inverse_action[-letter - 1][i]

    def transversal_word(self, i):
        word = []
        while self.parent[i] is not None:
            i, letter = self.parent[i]
            word.append(letter)
        return tuple(reversed(word))

    def check(self):
        for perm in self.action:
            if sorted(perm) != list(range(self.index)):
                raise ValueError("coset action is not a permutation")
        for i in range(self.index):
            j = 0
            for letter in self.transversal_word(i):
                j = self.step(j, letter)
            if j != i:
                raise ValueError("transversal word does not reach its coset")
        return True

    def to_json(self):
        return json.dumps({"index": self.index, "permutations": self.action})


def coset_table(P, S, order=None):
    """Coset table of the congruence subgroup S in the group presented by P.

    Labels are residues (elements of SL(2, O_D/a) or points of P^1(O_D/a)),
    so the table is closed by construction.  `order` permutes the letters
    tried during the breadth-first search, which changes the transversal.
    """
    act = _LabelAction(S)
    gcodes = [act.codes(g) for g in P.generator_matrices]
    gicodes = [act.codes(g.inv()) for g in P.generator_matrices]
    letters = []
    for j in range(P.generator_count):
        letters += [j + 1, -(j + 1)]
    if order is not None:
        letters = list(order)
    start = act.identity()
    index_of = {start: 0}
    labels = [start]
    parent = [None]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        lab = labels[i]
        for letter in letters:
            g = gcodes[letter - 1] if letter > 0 else gicodes[-letter - 1]
            nl = act.act_codes(lab, g)
            if nl not in index_of:
                index_of[nl] = len(labels)
                labels.append(nl)
                parent.append((i, letter))
                queue.append(len(labels) - 1)
    n = len(labels)
    action = []
    for j in range(P.generator_count):
        action.append([index_of[act.act_codes(lab, gcodes[j])] for lab in labels])
    T = CosetTable(n, action, parent, labels)
    T.label_action = act
    T.label_index = index_of
    return T


def trivial_table(P):
    return CosetTable(1, [[0] for _ in range(P.generator_count)], [None], [()])


# ---------------------------------------------------- Reidemeister-Schreier

@dataclass
class SubgroupPresentation(Presentation):
    schreier: dict = None  # (coset, generator index) -> subgroup generator index (1-based)
    table: CosetTable = None
    parent_presentation: Presentation = None

    def rewrite(self, word, start=0):
        """Rewrite a word of the parent group that lies in the subgroup."""
        T = self.table
        out = []
        c = start
        for letter in word:
            if letter > 0:
                s = self.schreier.get((c, letter - 1))
                if s is not None:
                    out.append(s)
                c = T.step(c, letter)
            else:
                prev = T.step(c, letter)
                s = self.schreier.get((prev, -letter - 1))
                if s is not None:
                    out.append(-s)
                c = prev
        if c != start:
            raise ValueError("word does not lie in the subgroup")
        return tuple(out)


def transversal_matrices(P, T):
    ring = ring_of_integers(P.D)
    mats = [identity(ring)] * T.index
    # parents always precede children in BFS order
    for i in range(1, T.index):
        p, letter = T.parent[i]
        g = P.generator_matrices[abs(letter) - 1]
        mats[i] = mats[p] * (g if letter > 0 else g.inv())
    return mats


def schreier_generators(P, T):
    """Lazily yield the non-tree Schreier generators t_c g t_(c.g)^-1 as matrices."""
    tree = set()
    for i in range(1, T.index):
        p, letter = T.parent[i]
        tree.add((p, letter - 1) if letter > 0 else (i, -letter - 1))
    reps = transversal_matrices(P, T)
    for c in range(T.index):
        for j in range(P.generator_count):
            if (c, j) not in tree:
                yield reps[c] * P.generator_matrices[j] * reps[T.action[j][c]].inv()


def reidemeister_schreier(P, T):
    """Presentation of the subgroup with coset table T (tree generators removed)."""
    if T.index == 1:
        schreier = {(0, j): j + 1 for j in range(P.generator_count)}
        return SubgroupPresentation(list(P.generator_matrices), list(P.relators), list(P.names),
                                    P.D, schreier, T, P)
    tree = set()
    for i in range(1, T.index):
        p, letter = T.parent[i]
        tree.add((p, letter - 1) if letter > 0 else (i, -letter - 1))
    reps = transversal_matrices(P, T)
    schreier, gens, names = {}, [], []
    for c in range(T.index):
        for j in range(P.generator_count):
            if (c, j) in tree:
                continue
            target = T.action[j][c]
            gens.append(reps[c] * P.generator_matrices[j] * reps[target].inv())
            names.append(f"{P.names[j]}_{c}")
            schreier[(c, j)] = len(gens)
    Q = SubgroupPresentation(gens, [], names, P.D, schreier, T, P)
    rels = []
    for c in range(T.index):
        for r in P.relators:
            rels.append(Q.rewrite(r, start=c))
    Q.relators = rels
    return Q


# ---------------------------------------------------------------- cusps

def unit_generator(ring):
    us = ring.units()
    return us[1] if len(us) > 1 else us[0]


def infinity_stabilizer_generators(ring):
    """Translations by 1 and w, and diag(e, 1/e) for a generator e of units."""
    e = unit_generator(ring)
    einv = ring.units()[-1]
    return [translation(ring, 1), translation(ring, ring.w()), SL2Mat.of(ring, e, 0, 0, einv)]


@dataclass
class CuspData:
    coset: int
    representative: tuple  # coprime pair (x, y) for the point x/y in P^1(F)
    conjugator: SL2Mat  # B_P with B_P * eta = infinity
    parabolic_lattice: IdealOD  # as a Z-lattice in O_D
    orbit_size: int = 0
    translation_words: tuple = ()

    def lattice_basis(self):
        return self.parabolic_lattice.basis()


def _lattice_from_elements(ring, elems):
    return IdealOD(lattice_hnf([(x.a, x.b) for x in elems]), ring)


def parabolic_lattice(S, cusp_or_table, coset=0):
    """{x in O_D : B^-1 [[1,x],[0,1]] B lies in S}, found by residue search."""
    if isinstance(cusp_or_table, CuspData):
        return cusp_or_table.parabolic_lattice
    T = cusp_or_table
    act = T.label_action
    ring = S.ring
    L0 = S.level()
    lab = T.labels[coset]
    hits = list(L0.basis())
    for x0 in range(L0.n):
        for y0 in range(L0.c):
            x = ring(x0, y0)
            if act.act(lab, translation(ring, x)) == lab:
                hits.append(x)
    return _lattice_from_elements(ring, hits)


def check_int2(S, T, coset):
    """No non-unipotent element of Gamma_infinity fixes the coset label."""
    act = T.label_action
    ring = S.ring
    L0 = S.level()
    lab = T.labels[coset]
    units = ring.units()
    for k, e in enumerate(units):
        if k == 0:
            continue
        einv = units[-k]
        diag = SL2Mat.of(ring, e, 0, 0, einv)
        for x0 in range(L0.n):
            for y0 in range(L0.c):
                M = diag * translation(ring, ring(x0, y0))
                if act.act(lab, M) == lab:
                    return False
    return True


def cusps(S, T, P=None):
    """Cusps of S as orbits of Gamma(D)_infinity on coset labels."""
    ring = S.ring
    if ring.D not in CLASS_NUMBER_ONE:
        raise ValueError("cusp enumeration needs class number one")
    act = T.label_action
    stab = infinity_stabilizer_generators(ring)
    scodes = [act.codes(g) for g in stab]
    seen = {}
    orbits = []
    for i, lab in enumerate(T.labels):
        if i in seen:
            continue
        orb = [i]
        seen[i] = len(orbits)
        k = 0
        while k < len(orb):
            cur = T.labels[orb[k]]
            for g in scodes:
                j = T.label_index[act.act_codes(cur, g)]
                if j not in seen:
                    seen[j] = len(orbits)
                    orb.append(j)
            k += 1
        orbits.append(orb)
    reps = transversal_matrices(P, T) if P is not None else None
    out = []
    for orb in orbits:
        c = min(orb)
        L = parabolic_lattice(S, T, c)
        if reps is not None:
            B = reps[c]
            rep = (B.a, B.c)
            conj = B.inv()
        else:
            rep, conj = None, None
        out.append(CuspData(c, rep, conj, L, len(orb)))
    return out


def cusp_words(P, T, cusp):
    """Words in the generators of P for t_c * T_x * t_c^-1, x in the lattice basis."""
    tw = T.transversal_word(cusp.coset)
    out = []
    for x in cusp.parabolic_lattice.basis():
        out.append(tw + translation_word(x) + invert_word(tw))
    return out


def translation_word(x):
    """Word in t = T_1 (gen 1) and u = T_w (gen 2) for [[1, x], [0, 1]]."""
    w = []
    w += [1 if x.a > 0 else -1] * abs(x.a)
    w += [2 if x.b > 0 else -2] * abs(x.b)
    return tuple(w)


# ------------------------------------------------------- lattice shapes

@dataclass
class LatticeShape:
    tau: complex
    covolume_before_rescale: float
    tau_exact: FieldElt = None


def unimodular_shape(L):
    """Gauss-reduced shape of a rank-2 lattice in C.

    L is an IdealOD (a lattice in O_D), a pair of FieldElt, or a pair of
    complex numbers.  Exact reduction is used for lattices inside F.
    """
    if isinstance(L, IdealOD):
        w1, w2 = (x.to_field() for x in L.basis())
    else:
        w1, w2 = L
        if isinstance(w1, QuadInt):
            w1, w2 = w1.to_field(), w2.to_field()
    if isinstance(w1, FieldElt):
        if w1.is_zero() or w2.is_zero():
            raise ValueError("degenerate lattice")
        tau = w2 / w1
        if tau.im_coeff() == 0:
            raise ValueError("degenerate lattice")
        if tau.im_coeff() < 0:
            tau = -tau
        half = Fraction(1, 2)
        for _ in range(10000):
            k = floor(tau.re() + half)
            tau = tau - k
            if tau.norm() < 1:
                tau = -tau.inverse()
                continue
            break
        if tau.re() == -half:
            tau = tau + 1
        if tau.norm() == 1 and tau.re() < 0:
            tau = -tau.conj()
        covol = abs(float((w1.conj() * w2).im_coeff())) * w1.ring.D ** 0.5
        return LatticeShape(complex(tau), covol, tau)
    w1, w2 = complex(w1), complex(w2)
    covol = abs((w1.conjugate() * w2).imag)
    if covol < 1e-14 * (abs(w1) * abs(w2) + 1e-300):
        raise ValueError("degenerate lattice")
    tau = w2 / w1
    if tau.imag < 0:
        tau = -tau
    for _ in range(10000):
        tau = tau - floor(tau.real + 0.5)
        if abs(tau) < 1 - 1e-15:
            tau = -1 / tau
            continue
        break
    return LatticeShape(tau, covol)
