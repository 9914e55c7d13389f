"""Exact integral homology of finitely presented groups with lattice coefficients.

Chain complexes of a presentation 2-complex are built by Fox calculus.  Large
complexes (Reidemeister-Schreier presentations of congruence subgroups) are
first reduced by block Gaussian elimination on unimodular blocks, then the
small remainder goes through a dense Smith normal form (FLINT).
"""
import heapq
import json
import math
from dataclasses import dataclass, field

import flint
import numpy as np

from .sym_modules import rho_action

# ------------------------------------------------------------ matrices


def to_fmpz(A):
    if isinstance(A, flint.fmpz_mat):
        return A
    A = np.asarray(A, dtype=object)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    r, c = A.shape
    return flint.fmpz_mat(r, c, [int(x) for x in A.flat])


def to_list(A):
    if isinstance(A, flint.fmpz_mat):
        return [[int(A[i, j]) for j in range(A.ncols())] for i in range(A.nrows())]
    return [[int(x) for x in row] for row in np.asarray(A, dtype=object)]


@dataclass
class IntMatrix:
    """Sparse integer matrix: {(row, col): value} with explicit shape."""
    rows: int
    cols: int
    entries: dict = field(default_factory=dict)

    @classmethod
    def from_dense(cls, A):
        A = to_list(A)
        r = len(A)
        c = len(A[0]) if r else 0
        return cls(r, c, {(i, j): v for i, row in enumerate(A) for j, v in enumerate(row) if v})

    def to_dense(self):
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def to_fmpz(self):
        M = flint.fmpz_mat(self.rows, self.cols)
        for (i, j), v in self.entries.items():
            M[i, j] = v
        return M

    def to_triplets(self):
        lines = [f"{self.rows} {self.cols}"]
        lines += [f"{i} {j} {v}" for (i, j), v in sorted(self.entries.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_triplets(cls, text):
        lines = [ln.split() for ln in text.strip().splitlines()]
        r, c = map(int, lines[0])
        return cls(r, c, {(int(a), int(b)): int(v) for a, b, v in lines[1:]})


@dataclass
class SmithForm:
    invariant_factors: tuple  # nonzero diagonal entries d_1 | d_2 | ...
    shape: tuple = (0, 0)
    left: list = None  # U with U A V = diag, when requested
    right: list = None

    @property
    def rank(self):
        return len(self.invariant_factors)

    @property
    def torsion(self):
        return tuple(d for d in self.invariant_factors if d > 1)

    def to_json(self):
        return json.dumps({"shape": list(self.shape), "invariant_factors": [int(d) for d in self.invariant_factors]})


def snf(A):
    """Smith normal form via FLINT; returns the nonzero invariant factors."""
    M = to_fmpz(A)
    r, c = M.nrows(), M.ncols()
    if r == 0 or c == 0:
        return SmithForm((), (r, c))
    S = M.snf()
    diag = [int(S[i, i]) for i in range(min(r, c))]
    return SmithForm(tuple(abs(d) for d in diag if d != 0), (r, c))


def snf_naive(A, transforms=False):
    """Full-pivot integer elimination, independent of FLINT (test oracle).

    With transforms=True also returns unimodular U, V with U A V = diag.
    """
    A = [list(map(int, row)) for row in to_list(A)] if len(A) else []
    r = len(A)
    c = len(A[0]) if r else 0
    U = [[int(i == j) for j in range(r)] for i in range(r)]
    V = [[int(i == j) for j in range(c)] for i in range(c)]

    def swap_rows(M, i, j):
        M[i], M[j] = M[j], M[i]

    def swap_cols(M, i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]

    def addrow(M, src, dst, k):  # row dst += k * row src
        M[dst] = [x + k * y for x, y in zip(M[dst], M[src])]

    def addcol(M, src, dst, k):
        for row in M:
            row[dst] += k * row[src]

    t = 0
    while t < min(r, c):
        nz = [(abs(A[i][j]), i, j) for i in range(t, r) for j in range(t, c) if A[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        swap_rows(A, t, pi)
        swap_rows(U, t, pi)
        swap_cols(A, t, pj)
        swap_cols(V, t, pj)
        while True:
            done = True
            for i in range(t + 1, r):
                q = A[i][t] // A[t][t]
                if q:
                    addrow(A, t, i, -q)
                    addrow(U, t, i, -q)
                if A[i][t]:
                    done = False
            for j in range(t + 1, c):
                q = A[t][j] // A[t][t]
                if q:
                    addcol(A, t, j, -q)
                    addcol(V, t, j, -q)
                if A[t][j]:
                    done = False
            if done:
                # pivot must divide the rest of the matrix
                bad = [(i, j) for i in range(t + 1, r) for j in range(t + 1, c) if A[i][j] % A[t][t]]
                if not bad:
                    break
                i, _ = bad[0]
                addrow(A, i, t, 1)
                addrow(U, i, t, 1)
                continue
            nz = [(abs(A[i][t]), i, "r") for i in range(t, r) if A[i][t]]
            nz += [(abs(A[t][j]), j, "c") for j in range(t, c) if A[t][j]]
            _, k, kind = min(nz)
            if kind == "r":
                swap_rows(A, t, k)
                swap_rows(U, t, k)
            else:
                swap_cols(A, t, k)
                swap_cols(V, t, k)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    diag = tuple(A[i][i] for i in range(min(r, c)) if A[i][i])
    if transforms:
        return SmithForm(diag, (r, c), U, V)
    return SmithForm(diag, (r, c))


def cokernel_snf(M):
    """Invariant factors of the column span of M (wide matrices go via HNF)."""
    M = to_fmpz(M)
    r, c = M.nrows(), M.ncols()
    if r == 0 or c == 0:
        return SmithForm((), (r, c))
    if c > 2 * r:
        H = M.transpose().hnf()
        k = H.rank()
        M = flint.fmpz_mat(k, r, [H[i, j] for i in range(k) for j in range(r)])
    S = snf(M)
    return SmithForm(S.invariant_factors, (r, c))


def rank(A):
    M = to_fmpz(A)
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return M.rank()


def hnf_with_transform(A):
    """Row HNF H of A together with unimodular U such that H = U A."""
    M = to_fmpz(A)
    r, c = M.nrows(), M.ncols()
    aug = flint.fmpz_mat(r, c + r)
    for i in range(r):
        for j in range(c):
            aug[i, j] = M[i, j]
        aug[i, c + i] = 1
    H = aug.hnf()
    Hl = flint.fmpz_mat(r, c, [H[i, j] for i in range(r) for j in range(c)])
    Ul = flint.fmpz_mat(r, r, [H[i, c + j] for i in range(r) for j in range(r)])
    return Hl, Ul


def integer_kernel(A):
    """Saturated Z-basis (as columns) of {x : A x = 0}."""
    M = to_fmpz(A)
    r, c = M.nrows(), M.ncols()
    if c == 0:
        return flint.fmpz_mat(0, 0)
    H, U = hnf_with_transform(M.transpose())
    rows = [i for i in range(c) if all(H[i, j] == 0 for j in range(r))]
    K = flint.fmpz_mat(c, len(rows))
    for k, i in enumerate(rows):
        for j in range(c):
            K[j, k] = U[i, j]
    return K


def solve_in_lattice(B, t):
    """Integer x with B x = t for a column basis B, or None if t is not in the span."""
    return solve_many_in_lattice(B, t)[0]


def solve_many_in_lattice(B, T):
    """Solve B x = t for every column t of T with one HNF; None marks failures."""
    B = to_fmpz(B)
    T = to_fmpz(T)
    H, U = hnf_with_transform(B.transpose())  # H = U B^T
    return [_solve_echelon(H, U, [int(T[j, k]) for j in range(T.nrows())]) for k in range(T.ncols())]


def _solve_echelon(H, U, resid):
    n = H.nrows()
    # t^T = y H, H in row echelon form
    y = [0] * n
    for i in range(n):
        piv = next((j for j in range(H.ncols()) if H[i, j] != 0), None)
        if piv is None:
            break
        h = int(H[i, piv])
        if resid[piv] % h:
            return None
        q = resid[piv] // h
        y[i] = q
        if q:
            for j in range(H.ncols()):
                resid[j] -= q * int(H[i, j])
    if any(resid):
        return None
    # x^T = y U
    return [sum(y[i] * int(U[i, k]) for i in range(n) if y[i]) for k in range(U.ncols())]


def lattice_contains(B, T):
    """Is every column of T in the Z-span of the columns of B?"""
    B, T = to_fmpz(B), to_fmpz(T)
    if T.ncols() == 0:
        return True
    H = B.transpose().hnf()
    H2 = flint.fmpz_mat(H.nrows() + T.ncols(), H.ncols())
    for i in range(H.nrows()):
        for j in range(H.ncols()):
            H2[i, j] = H[i, j]
    for k in range(T.ncols()):
        for j in range(T.nrows()):
            H2[H.nrows() + k, j] = T[j, k]
    return H2.hnf() == _pad(H, H2.nrows())


def _pad(H, nrows):
    P = flint.fmpz_mat(nrows, H.ncols())
    for i in range(H.nrows()):
        for j in range(H.ncols()):
            P[i, j] = H[i, j]
    return P


# ------------------------------------------------------- chain complexes

@dataclass
class ChainComplexZ:
    """C_n -> ... -> C_1 -> C_0 with boundaries[q-1] : C_q -> C_{q-1}."""
    ranks: list
    boundaries: list  # dense fmpz matrices

    def __post_init__(self):
        self.boundaries = [to_fmpz(d) for d in self.boundaries]

    def check(self):
        for q, d in enumerate(self.boundaries, start=1):
            if (d.nrows(), d.ncols()) != (self.ranks[q - 1], self.ranks[q]):
                raise ValueError(f"boundary {q} has the wrong shape")
        for q in range(1, len(self.boundaries)):
            prod = self.boundaries[q - 1] * self.boundaries[q]
            if not prod.is_zero():
                raise ValueError(f"d_{q} d_{q + 1} != 0")
        return True

    def boundary(self, q):
        if 1 <= q <= len(self.boundaries):
            return self.boundaries[q - 1]
        rows = self.ranks[q - 1] if 1 <= q <= len(self.ranks) else 0
        cols = self.ranks[q] if 0 <= q < len(self.ranks) else 0
        return flint.fmpz_mat(rows, cols)

    def to_json(self):
        return json.dumps({"ranks": self.ranks, "boundaries": [to_list(d) for d in self.boundaries]})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["ranks"], [to_fmpz(np.array(b, dtype=object).reshape(
            (d["ranks"][q], d["ranks"][q + 1]))) for q, b in enumerate(d["boundaries"])])


@dataclass
class HomologySummary:
    degree: int
    free_rank: int
    torsion_factors: tuple
    torsion_order: int = 1

    @property
    def log_torsion_order(self):
        return sum(math.log(d) for d in self.torsion_factors if d > 1)

    def describe(self):
        parts = [f"Z^{self.free_rank}"] if self.free_rank else []
        parts += [f"Z/{d}" for d in self.torsion_factors]
        return " + ".join(parts) or "0"


def _summary(q, free, factors):
    tors = tuple(int(d) for d in factors if d > 1)
    return HomologySummary(q, free, tors, math.prod(tors))


def homology(C, q):
    """H_q of a ChainComplexZ or FoxComplex."""
    if isinstance(C, FoxComplex):
        return C.homology(q)
    n = C.ranks[q] if q < len(C.ranks) else 0
    dq = C.boundary(q)
    dq1 = C.boundary(q + 1)
    rq = rank(dq) if q >= 1 else 0
    S = snf(dq1)
    free = n - rq - S.rank
    return _summary(q, free, S.invariant_factors)


def homology_via_kernel(C, q):
    """H_q as ker d_q / im d_{q+1}, restricting d_{q+1} to a kernel basis."""
    n = C.ranks[q]
    dq1 = C.boundary(q + 1)
    if q >= 1:
        K = integer_kernel(C.boundary(q))
    else:
        K = flint.fmpz_mat(n, n, [int(i == j) for i in range(n) for j in range(n)])
    k = K.ncols()
    if dq1.ncols() == 0 or k == 0:
        return _summary(q, k, ())
    coords = solve_many_in_lattice(K, dq1)
    if any(x is None for x in coords):
        raise ArithmeticError("boundary does not land in the kernel")
    M = flint.fmpz_mat(k, len(coords), [coords[j][i] for i in range(k) for j in range(len(coords))])
    S = snf(M)
    return _summary(q, k - S.rank, S.invariant_factors)


# ------------------------------------------------------------ Fox calculus

def _identity(d):
    return flint.fmpz_mat(d, d, [int(i == j) for i in range(d) for j in range(d)])


class GroupAction:
    """Integer matrices rho(g), rho(g^-1) for the generators of a presentation."""

    def __init__(self, mats, inv_mats=None):
        self.mats = [to_fmpz(M) for M in mats]
        if inv_mats is None:
            inv_mats = []
            for M in self.mats:
                Q = M.inv()
                inv_mats.append(flint.fmpz_mat(M.nrows(), M.ncols(),
                                               [int(Q[i, j]) for i in range(M.nrows()) for j in range(M.ncols())]))
        self.inv = [to_fmpz(M) for M in inv_mats]
        self.dim = self.mats[0].nrows() if self.mats else 0

    @classmethod
    def from_presentation(cls, P, m):
        mats = [rho_action(g, m).matrix for g in P.generator_matrices]
        invs = [rho_action(g.inv(), m).matrix for g in P.generator_matrices]
        return cls(mats, invs)

    @classmethod
    def trivial(cls, ngens, d=1):
        I = _identity(d)
        return cls([I] * ngens, [I] * ngens)

    def letter(self, k):
        return self.mats[k - 1] if k > 0 else self.inv[-k - 1]

    def word(self, w):
        M = _identity(self.dim)
        for k in w:
            M = M * self.letter(k)
        return M

    def check(self, relators):
        I = _identity(self.dim)
        for r in relators:
            if self.word(r) != I:
                raise ValueError(f"action does not respect relator {r}")
        return True


def fox_right_blocks(word, action):
    """{generator index: block} for the right Fox derivative of a word.

    Also returns, per generator, whether the block is a single term
    +-rho(w), which is unimodular.
    """
    d = action.dim
    out, single = {}, {}
    suffix = _identity(d)
    for k in reversed(word):
        j = abs(k) - 1
        if k > 0:
            term = suffix
        else:
            term = -(action.inv[j] * suffix)
        if j in out:
            out[j] = out[j] + term
            single[j] = False
        else:
            out[j] = term
            single[j] = True
        suffix = action.letter(k) * suffix
    return out, single


def fox_left_blocks(word, action):
    """{generator index: block} for the left Fox derivative (cocycle side)."""
    d = action.dim
    out = {}
    prefix = _identity(d)
    for k in word:
        j = abs(k) - 1
        if k > 0:
            term = prefix
            prefix = prefix * action.mats[j]
        else:
            prefix = prefix * action.inv[j]
            term = -prefix
        out[j] = out[j] + term if j in out else term
    return out


@dataclass
class FoxComplex:
    """Block-sparse complex C_2 = M^s -> C_1 = M^g -> C_0 = M of a presentation."""
    dim: int
    ngens: int
    nrels: int
    d1: list  # blocks rho(g_j) - I
    d2: dict  # (generator j, relator i) -> block
    unit_hint: dict = field(default_factory=dict)

    @property
    def ranks(self):
        return [self.dim, self.dim * self.ngens, self.dim * self.nrels]

    def dense_d1(self):
        M = flint.fmpz_mat(self.dim, self.dim * self.ngens)
        for j, B in enumerate(self.d1):
            _put(M, B, 0, j * self.dim)
        return M

    def dense_d2(self):
        d = self.dim
        M = flint.fmpz_mat(d * self.ngens, d * self.nrels)
        for (j, i), B in self.d2.items():
            _put(M, B, j * d, i * d)
        return M

    def to_chain_complex(self):
        return ChainComplexZ(self.ranks, [self.dense_d1(), self.dense_d2()])

    def check(self):
        d = self.dim
        acc = {}
        for (j, i), B in self.d2.items():
            t = self.d1[j] * B
            acc[i] = acc[i] + t if i in acc else t
        return all(v.is_zero() for v in acc.values())

    def homology(self, q):
        if q == 0:
            S = snf(self.dense_d1())
            return _summary(0, self.dim - S.rank, S.invariant_factors)
        if q == 1:
            r1 = rank(self.dense_d1())
            red = reduce_d2(self)
            n1 = red.rows * self.dim
            S = cokernel_snf(red.dense())
            return _summary(1, n1 - r1 - S.rank, S.invariant_factors)
        if q == 2:
            return _summary(2, self.dim * self.nrels - rank(self.dense_d2()), ())
        return _summary(q, 0, ())


def _put(M, B, r0, c0):
    for a in range(B.nrows()):
        for b in range(B.ncols()):
            v = B[a, b]
            if v != 0:
                M[r0 + a, c0 + b] = v


def fox_complex(P, action):
    """Fox-calculus complex of presentation P with coefficients `action`.

    `action` is a GroupAction or an integer m (symmetric power Lambda_m).
    """
    if isinstance(action, int):
        action = GroupAction.from_presentation(P, action)
    d = action.dim
    I = _identity(d)
    d1 = [action.mats[j] - I for j in range(len(action.mats))]
    d2, hint = {}, {}
    rels = [r for r in P.relators if len(r)]
    for i, r in enumerate(rels):
        blocks, single = fox_right_blocks(r, action)
        for j, B in blocks.items():
            if not B.is_zero():
                d2[(j, i)] = B
                hint[(j, i)] = single[j]
    return FoxComplex(d, len(action.mats), len(rels), d1, d2, hint)


# ----------------------------------------------------- block elimination

@dataclass
class ReducedMatrix:
    rows: int
    cols: int
    dim: int
    blocks: dict  # (row, col) -> block, reindexed
    pivots: int = 0

    def dense(self):
        d = self.dim
        M = flint.fmpz_mat(self.rows * d, self.cols * d)
        for (j, i), B in self.blocks.items():
            _put(M, B, j * d, i * d)
        return M


def _is_unimodular(B):
    return abs(int(B.det())) == 1


def _int_inverse(B):
    Q = B.inv()
    n = B.nrows()
    return flint.fmpz_mat(n, n, [int(Q[i, j]) for i in range(n) for j in range(n)])


def reduce_d2(F, max_entry_bits=4096):
    """Eliminate unimodular blocks of d_2 by Schur complements.

    Removing generator j and relator i through the unimodular pivot block P
    replaces d_2 by E - B P^-1 C and d_1 by its restriction; homology in
    degree 1 and its torsion are unchanged.
    """
    rows, cols = {}, {}
    for (j, i), B in F.d2.items():
        rows.setdefault(j, {})[i] = B
        cols.setdefault(i, {})[j] = B
    unit = {}
    for key, B in F.d2.items():
        unit[key] = True if F.unit_hint.get(key) else _is_unimodular(B)
    heap = []

    def cost(j, i):
        return (len(rows[j]) - 1) * (len(cols[i]) - 1)

    for (j, i), u in unit.items():
        if u:
            heapq.heappush(heap, (cost(j, i), j, i))
    alive_rows = set(range(F.ngens))
    alive_cols = set(range(F.nrels))
    pivots = 0
    while heap:
        c, j, i = heapq.heappop(heap)
        if j not in alive_rows or i not in alive_cols or i not in rows.get(j, {}):
            continue
        if not unit.get((j, i)):
            continue
        c2 = cost(j, i)
        if c2 > c:
            heapq.heappush(heap, (c2, j, i))
            continue
        P = rows[j][i]
        Pinv = _int_inverse(P)
        row_j = {i2: B for i2, B in rows[j].items() if i2 != i}
        col_i = {j2: B for j2, B in cols[i].items() if j2 != j}
        PC = {i2: Pinv * C for i2, C in row_j.items()}
        for i2 in list(rows[j]):
            del cols[i2][j]
        for j2 in list(cols[i]):
            del rows[j2][i]
        del rows[j]
        del cols[i]
        alive_rows.discard(j)
        alive_cols.discard(i)
        pivots += 1
        for j2, Bj in col_i.items():
            r2 = rows[j2]
            for i2, pc in PC.items():
                upd = Bj * pc
                old = r2.get(i2)
                new = -upd if old is None else old - upd
                if new.is_zero():
                    if old is not None:
                        del r2[i2]
                        del cols[i2][j2]
                        unit.pop((j2, i2), None)
                    continue
                r2[i2] = new
                cols[i2][j2] = new
                u = _is_unimodular(new)
                unit[(j2, i2)] = u
                if u:
                    heapq.heappush(heap, (cost(j2, i2), j2, i2))
        # touched entries changed cost; they are re-pushed lazily above
    rmap = {j: k for k, j in enumerate(sorted(alive_rows))}
    cmap = {i: k for k, i in enumerate(sorted(i for i in alive_cols if cols.get(i)))}
    blocks = {}
    for j in alive_rows:
        for i, B in rows.get(j, {}).items():
            blocks[(rmap[j], cmap[i])] = B
    return ReducedMatrix(len(rmap), len(cmap), F.dim, blocks, pivots)


# ------------------------------------------------------------- group level

def group_homology(P, m_or_action, q=1):
    return fox_complex(P, m_or_action).homology(q)


def coinvariants(generators, m=None):
    """Cokernel of the stacked (rho(g) - I): H_0 with coefficients.

    `generators` are integer matrices (ModuleMap, numpy or fmpz) or SL2Mat
    together with the weight m.
    """
    mats = _as_action_mats(generators, m)
    if not mats:
        raise ValueError("need at least one generator")
    d = mats[0].nrows()
    I = _identity(d)
    M = flint.fmpz_mat(d, d * len(mats))
    for j, A in enumerate(mats):
        _put(M, A - I, 0, j * d)
    S = snf(M)
    return _summary(0, d - S.rank, S.invariant_factors)


@dataclass
class H0Bound:
    order: int  # exact |H_0(Gamma(a); Lambda_m)|, the coinvariants being finite
    stated: int  # (m! N(a))^(m+1)
    lattice_index: int  # [Lambda_m : (m! a) Lambda_m] = (m!^2 N(a))^(m+1)

    @property
    def within_stated(self):
        return self.order <= self.stated

    @property
    def within_index(self):
        return self.order <= self.lattice_index


def h0_bound(a, m, generators):
    """Exact order of the coinvariants of Gamma(a) on Lambda_m against both bounds.

    The inclusion (m! a) Lambda_m in span(rho(g) - I) forces the order to
    divide the lattice index; the smaller bound is only compared.
    """
    if m < 1:
        raise ValueError("coinvariants are infinite for m = 0")
    H = coinvariants(list(generators), m)
    if H.free_rank:
        raise ArithmeticError("coinvariants have positive rank")
    order = math.prod(H.torsion_factors)
    f, N = math.factorial(m), a.norm()
    return H0Bound(order, (f * N) ** (m + 1), (f * f * N) ** (m + 1))


def _as_action_mats(generators, m):
    out = []
    for g in generators:
        if hasattr(g, "entries") and hasattr(g, "inv") and not isinstance(g, flint.fmpz_mat):
            out.append(to_fmpz(rho_action(g, m).matrix))
        elif hasattr(g, "matrix"):
            out.append(to_fmpz(g.matrix))
        else:
            out.append(to_fmpz(g))
    return out


@dataclass
class SpanCertificate:
    holds: bool
    generators_used: int
    target: list  # columns: Z-basis of (m! a) Lambda_m
    span_basis: list  # HNF rows of the span of (rho(gamma) - I)
    solution: list  # columns x with [rho(gamma) - I ...] x = target column
    hnf_diagonal_product: int = 0


def _target_lattice(a, m):
    """Z-basis (columns) of (m! a) Lambda_m."""
    R = a.ring
    f = math.factorial(m)
    basis = [x * f for x in a.basis()]
    n = 2 * (m + 1)
    cols = []
    for j in range(m + 1):
        for x in basis:
            v = [0] * n
            v[2 * j], v[2 * j + 1] = x.a, x.b
            cols.append(v)
    return cols


def check_span_certificate(a, m, generators, batch=8):
    """Verify (m! a) Lambda_m lies in span of (rho(gamma) - I) Lambda_m.

    `generators` is an iterable of SL2Mat (for example Schreier generators
    of Gamma(a)).  Generators are consumed lazily until the inclusion holds;
    the certificate holds integer solution vectors for every target column.
    """
    target = _target_lattice(a, m)
    n = 2 * (m + 1)
    T = flint.fmpz_mat(n, len(target), [target[j][i] for i in range(n) for j in range(len(target))])
    I = _identity(n)
    used, cols = 0, []
    # running echelon basis H of the span with H = W B^T, B the columns so far
    H = flint.fmpz_mat(0, n)
    W = flint.fmpz_mat(0, 0)
    it = iter(generators)
    exhausted = False
    while not exhausted:
        fresh = []
        for _ in range(batch):
            g = next(it, None)
            if g is None:
                exhausted = True
                break
            fresh.append(to_fmpz(rho_action(g, m).matrix) - I)
            used += 1
        if not fresh:
            break
        C = _hstack(fresh)
        H, W = _extend_echelon(H, W, C)
        cols += fresh
        sol = [_solve_echelon(H, W, [int(T[i, k]) for i in range(n)]) for k in range(T.ncols())]
        if all(x is not None for x in sol):
            B = _hstack(cols)
            Bd = to_list(B)
            ok = True
            for k, x in enumerate(sol):
                got = [sum(Bd[i][c] * x[c] for c in range(len(x)) if x[c]) for i in range(n)]
                ok = ok and got == [int(T[i, k]) for i in range(n)]
            span = to_list(H)
            prod = math.prod(next(v for v in row if v) for row in span)
            return SpanCertificate(ok, used, target, span, sol, prod)
    return SpanCertificate(False, used, target, to_list(H), [], 0)


def _extend_echelon(H, W, C):
    """Echelon basis and transform after appending the columns of C to B."""
    r, N, k = H.nrows(), W.ncols(), C.ncols()
    M = flint.fmpz_mat(r + k, H.ncols())
    _put(M, H, 0, 0)
    _put(M, C.transpose(), r, 0)
    Hn, U = hnf_with_transform(M)
    keep = [i for i in range(Hn.nrows()) if any(Hn[i, j] != 0 for j in range(Hn.ncols()))]
    Wext = flint.fmpz_mat(r + k, N + k)
    _put(Wext, W, 0, 0)
    for i in range(k):
        Wext[r + i, N + i] = 1
    Wn = U * Wext
    H2 = flint.fmpz_mat(len(keep), Hn.ncols(), [Hn[i, j] for i in keep for j in range(Hn.ncols())])
    W2 = flint.fmpz_mat(len(keep), N + k, [Wn[i, j] for i in keep for j in range(N + k)])
    return H2, W2


def _hstack(mats):
    r = mats[0].nrows()
    c = sum(M.ncols() for M in mats)
    out = flint.fmpz_mat(r, c)
    off = 0
    for M in mats:
        _put(out, M, 0, off)
        off += M.ncols()
    return out


# -------------------------------------------------------------- cohomology

@dataclass
class CocycleSpace:
    dim_Q: int  # rank of H^1 over Q
    cocycle_basis: list  # integer vectors in M^g, a basis of Z^1 (over Q)
    coboundary_basis: list
    complement: list  # cocycles whose classes give a basis of H^1 (over Q)
    dim: int = 0  # module rank
    ngens: int = 0

    def values(self, vec):
        d = self.dim
        return [vec[j * d:(j + 1) * d] for j in range(self.ngens)]


def cocycle_matrix(P, action):
    """Linear conditions on (f(g_1), ..., f(g_n)) for a crossed homomorphism."""
    d = action.dim
    rels = [r for r in P.relators if len(r)]
    M = flint.fmpz_mat(d * len(rels), d * len(action.mats))
    for i, r in enumerate(rels):
        for j, B in fox_left_blocks(r, action).items():
            _put(M, B, i * d, j * d)
    return M


def coboundary_matrix(action):
    d = action.dim
    I = _identity(d)
    M = flint.fmpz_mat(d * len(action.mats), d)
    for j, A in enumerate(action.mats):
        _put(M, A - I, j * d, 0)
    return M


def cocycle_space(P, action):
    """dim_Q H^1(group; M) with integral cocycle and coboundary bases."""
    if isinstance(action, int):
        action = GroupAction.from_presentation(P, action)
    d, n = action.dim, len(action.mats)
    N = d * n
    A = cocycle_matrix(P, action)
    if A.nrows():
        K, nul = A.nullspace()
        Z = [[int(K[i, k]) for i in range(N)] for k in range(nul)]
    else:
        Z = [[int(i == k) for i in range(N)] for k in range(N)]
    Bm = coboundary_matrix(action)
    Bcols = [[int(Bm[i, k]) for i in range(N)] for k in range(d)]
    rb = rank(Bm) if d else 0
    # complement of coboundaries inside cocycles, greedily over Q
    chosen = [c for c in Bcols]
    comp = []
    cur = rb
    for z in Z:
        trial = chosen + [z]
        r = rank(np.array(trial, dtype=object).T)
        if r > cur:
            chosen.append(z)
            comp.append(z)
            cur = r
    return CocycleSpace(len(Z) - rb, Z, Bcols, comp, d, n)


def evaluate_cocycle(values, word, action):
    """f(word) for the crossed homomorphism with f(g_j) = values[j]."""
    d = action.dim
    acc = flint.fmpz_mat(d, 1)
    prefix = _identity(d)
    for k in word:
        j = abs(k) - 1
        v = to_fmpz(np.array(values[j], dtype=object).reshape(d, 1))
        if k > 0:
            acc = acc + prefix * v
            prefix = prefix * action.mats[j]
        else:
            prefix = prefix * action.inv[j]
            acc = acc - prefix * v
    return [int(acc[i, 0]) for i in range(d)]


def restrict_to_cusp(values, cusp_words, action, parent=None):
    """Values of a cocycle on the parabolic generators given as words.

    When `parent` (a pair: SL2Mat generators, predicate) is supplied, every
    word is first checked to evaluate into the unipotent radical.
    """
    if parent is not None:
        gens, pred = parent
        from .bianchi import evaluate
        for w in cusp_words:
            if not pred(evaluate(w, gens)):
                raise ValueError(f"cusp word {w} is not parabolic")
    return [evaluate_cocycle(values, w, action) for w in cusp_words]


def torus_cohomology_class_rank(restrictions, U1, U2):
    """Rank over Q of restricted cocycles modulo torus coboundaries.

    `restrictions` is a list of (f(u1), f(u2)) pairs, U1, U2 the actions of
    the two parabolic generators.
    """
    d = U1.nrows()
    I = _identity(d)
    cob = flint.fmpz_mat(2 * d, d)
    _put(cob, U1 - I, 0, 0)
    _put(cob, U2 - I, d, 0)
    rb = rank(cob)
    cols = [[int(cob[i, k]) for i in range(2 * d)] for k in range(d)]
    for f1, f2 in restrictions:
        cols.append(list(f1) + list(f2))
    return rank(np.array(cols, dtype=object).T) - rb


def restriction_rank(space, action, cusp_word_lists):
    """Q-rank of H^1(group; M) -> sum over cusps of H^1(cusp group; M).

    `cusp_word_lists` holds, per cusp, the two parabolic generators as words
    in the generators of the group carrying the cocycles.
    """
    d = action.dim
    k = len(cusp_word_lists)
    blocks = []
    for words in cusp_word_lists:
        U = [action.word(w) for w in words]
        blocks.append(U)
    I = _identity(d)
    cols = []
    # torus coboundaries, block diagonal over the cusps
    for c, (U1, U2) in enumerate(blocks):
        for j in range(d):
            v = [0] * (2 * d * k)
            for i in range(d):
                v[2 * d * c + i] = int((U1 - I)[i, j])
                v[2 * d * c + d + i] = int((U2 - I)[i, j])
            cols.append(v)
    rb = rank(np.array(cols, dtype=object).T)
    for z in space.complement:
        vals = space.values(z)
        v = []
        for words in cusp_word_lists:
            for f in restrict_to_cusp(vals, words, action):
                v += f
        cols.append(v)
    return rank(np.array(cols, dtype=object).T) - rb
