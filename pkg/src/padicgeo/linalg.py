"""Matrices over the valuation ring at fixed precision: norms, Smith normal
form, absolute determinants, block Smith decompositions, Haar sampling of
GL_n(R), and saturated kernels.

All eliminations pick a pivot of minimal valuation (maximal norm) so pivots
stay units after scaling.  Entries that vanish modulo p^N are treated as
exact zeros during elimination; the corresponding invariant-factor exponents
are reported as AT_LEAST_PRECISION.  Division of a residue by p^v determines
the quotient only modulo p^(N-v), but every product of such a quotient with
a row of valuation >= v is again exact modulo p^N, which is why the returned
transformations satisfy their defining identities exactly at precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from padicgeo.core import (
    AT_LEAST_PRECISION,
    PadicConfig,
    ResidueSource,
    RingElement,
    Val,
    is_exact_val,
)


class NormValue(NamedTuple):
    """A norm-like quantity with an exactness flag.

    `exact=False` means the reported value is only an upper bound ambiguity:
    for instance the norm of a matrix whose entries all vanish at precision
    is reported as 0 but is merely <= p^-N.
    """

    value: Fraction
    exact: bool


@dataclass(frozen=True)
class RMatrix:
    """A matrix over the valuation ring, entries stored as residues mod p^N."""

    config: PadicConfig
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        m = self.config.modulus
        object.__setattr__(
            self, "entries", tuple(tuple(x % m for x in row) for row in self.entries)
        )

    @classmethod
    def from_rows(cls, config: PadicConfig, rows) -> RMatrix:
        return cls(config, tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, config: PadicConfig, n: int) -> RMatrix:
        return cls(config, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def entry(self, i: int, j: int) -> RingElement:
        return RingElement(self.config, self.entries[i][j])

    def row_lists(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def transpose(self) -> RMatrix:
        return RMatrix(self.config, tuple(zip(*self.entries)))

    def __matmul__(self, other: RMatrix) -> RMatrix:
        if other.config != self.config:
            raise ValueError("config mismatch")
        return RMatrix(self.config, tuple(
            tuple(_dot(row, other.entries, j, self.config.modulus) for j in range(other.cols))
            for row in self.entries
        ))

    def hstack(self, other: RMatrix) -> RMatrix:
        if other.rows != self.rows:
            raise ValueError("row mismatch")
        return RMatrix(self.config, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def submatrix(self, row_slice, col_slice) -> RMatrix:
        return RMatrix(self.config, tuple(tuple(r[col_slice]) for r in self.entries[row_slice]))

    def columns(self, idx) -> RMatrix:
        return RMatrix(self.config, tuple(tuple(r[j] for j in idx) for r in self.entries))

    def det_integer(self) -> int:
        """Exact integer determinant of the residue representatives (square only)."""
        return _det_bareiss(self.row_lists())

    def is_unit_invertible(self) -> bool:
        if self.rows != self.cols:
            return False
        return _rank_mod_p(self.row_lists(), self.config.p) == self.rows

    def inverse(self) -> RMatrix:
        if self.rows != self.cols:
            raise ValueError("square matrices only")
        inv = _inv_mod(self.row_lists(), self.config.p, self.config.modulus)
        return RMatrix(self.config, tuple(tuple(r) for r in inv))


def _dot(row, other_entries, j, modulus) -> int:
    return sum(a * other_entries[k][j] for k, a in enumerate(row)) % modulus


# ---------------------------------------------------------------------------
# Raw integer-matrix helpers (hot paths bypass the RMatrix wrappers).
# ---------------------------------------------------------------------------


def _val(a: int, p: int, N: int) -> int:
    """Valuation of a residue, with N standing in for at-least-precision."""
    if a == 0:
        return N
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return min(v, N)


def _det_bareiss(rows: list[list[int]]) -> int:
    """Fraction-free exact determinant of a square integer matrix."""
    a = [r[:] for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    a = [[x % p for x in r] for r in rows]
    m, n = len(a), len(a[0]) if rows else 0
    rank = 0
    col = 0
    while rank < m and col < n:
        piv = next((i for i in range(rank, m) if a[i][col] % p), None)
        if piv is None:
            col += 1
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][col], -1, p)
        for i in range(rank + 1, m):
            f = a[i][col] * inv % p
            if f:
                a[i] = [(a[i][j] - f * a[rank][j]) % p for j in range(n)]
        rank += 1
        col += 1
    return rank


def _mat_mul(a, b, modulus):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) % modulus for col in bt] for row in a]


def _inv_mod(rows: list[list[int]], p: int, modulus: int) -> list[list[int]]:
    """Inverse of a unit-invertible matrix modulo p^N (Gauss-Jordan, unit pivots)."""
    n = len(rows)
    a = [r[:] + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] % p), None)
        if piv is None:
            raise ZeroDivisionError("matrix is not invertible over the ring at precision")
        a[c], a[piv] = a[piv], a[c]
        inv = pow(a[c][c], -1, modulus)
        a[c] = [x * inv % modulus for x in a[c]]
        for i in range(n):
            if i != c and a[i][c]:
                f = a[i][c]
                a[i] = [(a[i][j] - f * a[c][j]) % modulus for j in range(2 * n)]
    return [r[n:] for r in a]


def _snf_raw(rows: list[list[int]], p: int, N: int):
    """Smith normal form at precision.

    Returns (S, T, exps) with S (m x m) and T (n x n) unit-invertible,
    S*A*T = diag(p^exps) exactly modulo p^N, and exps nondecreasing with N
    standing in for at-least-precision.
    """
    pN = p**N
    A = [r[:] for r in rows]
    m, n = len(A), len(A[0]) if rows else 0
    S = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    T = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    exps: list[int] = []
    size = min(m, n)
    for t in range(size):
        best, bi, bj = N, -1, -1
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                v = _val(row[j], p, N)
                if v < best:
                    best, bi, bj = v, i, j
                    if v == 0:
                        break
            if best == 0:
                break
        if best >= N:
            exps.extend([N] * (size - t))
            break
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
            S[t], S[bi] = S[bi], S[t]
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
            for row in T:
                row[t], row[bj] = row[bj], row[t]
        v = best
        pv = p**v
        u_inv = pow(A[t][t] // pv, -1, pN)
        A[t] = [x * u_inv % pN for x in A[t]]
        S[t] = [x * u_inv % pN for x in S[t]]
        # clear the column below the pivot (row operations)
        for i in range(t + 1, m):
            if A[i][t]:
                f = A[i][t] // pv
                At = A[t]
                A[i] = [(x - f * y) % pN for x, y in zip(A[i], At)]
                St = S[t]
                S[i] = [(x - f * y) % pN for x, y in zip(S[i], St)]
        # clear the row right of the pivot (column operations)
        for j in range(t + 1, n):
            if A[t][j]:
                f = A[t][j] // pv
                for row in A:
                    row[j] = (row[j] - f * row[t]) % pN
                for row in T:
                    row[j] = (row[j] - f * row[t]) % pN
        exps.append(v)
    return S, T, exps


@dataclass(frozen=True)
class SmithDecomposition:
    """S*A*T = D with D = diag(p^k_i), k_1 <= ... <= k_r, S and T unit-invertible."""

    left: RMatrix
    right: RMatrix
    exponents: tuple[Val, ...]
    rank_at_precision: int

    def diagonal(self) -> RMatrix:
        cfg = self.left.config
        m, n = self.left.rows, self.right.rows
        d = [[0] * n for _ in range(m)]
        for i, e in enumerate(self.exponents):
            if is_exact_val(e):
                d[i][i] = cfg.p**e
        return RMatrix.from_rows(cfg, d)

    def singular_values(self) -> tuple[Fraction, ...]:
        p = self.left.config.p
        return tuple(
            Fraction(1, p**e) if is_exact_val(e) else Fraction(0) for e in self.exponents
        )


def smith_normal_form(a: RMatrix) -> SmithDecomposition:
    cfg = a.config
    S, T, raw = _snf_raw(a.row_lists(), cfg.p, cfg.precision)
    exps: tuple[Val, ...] = tuple(
        e if e < cfg.precision else AT_LEAST_PRECISION for e in raw
    )
    rank = sum(1 for e in raw if e < cfg.precision)
    return SmithDecomposition(
        left=RMatrix.from_rows(cfg, S),
        right=RMatrix.from_rows(cfg, T),
        exponents=exps,
        rank_at_precision=rank,
    )


def operator_norm(a: RMatrix) -> NormValue:
    """max |a_ij|; equals the operator norm of the induced map on K^n."""
    cfg = a.config
    best = cfg.precision
    for row in a.entries:
        for x in row:
            v = _val(x, cfg.p, cfg.precision)
            if v < best:
                best = v
                if best == 0:
                    return NormValue(Fraction(1), True)
    if best >= cfg.precision:
        return NormValue(Fraction(0), False)
    return NormValue(Fraction(1, cfg.p**best), True)


def absolute_determinant(a: RMatrix) -> NormValue:
    """Product of the singular values: max absolute value of a maximal minor.

    For a single row or column this is just the max-norm of the vector.
    """
    cfg = a.config
    if min(a.rows, a.cols) == 0:
        return NormValue(Fraction(1), True)
    if a.rows == 1 or a.cols == 1:
        return operator_norm(a)
    _, _, raw = _snf_raw(a.row_lists(), cfg.p, cfg.precision)
    if any(e >= cfg.precision for e in raw):
        return NormValue(Fraction(0), False)
    return NormValue(Fraction(1, cfg.p ** sum(raw)), True)


# ---------------------------------------------------------------------------
# Block Smith normal form.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSmithDecomposition:
    """S*A*T = [[I, 0], [D, I]] with S, T block upper triangular with
    unit-invertible diagonal blocks (the group U_{l,n})."""

    left: RMatrix
    right: RMatrix
    lower_block: RMatrix
    block_size: int

    def exponents(self) -> tuple[Val, ...]:
        cfg = self.left.config
        d = self.lower_block
        out = []
        for i in range(min(d.rows, d.cols)):
            v = _val(d.entries[i][i], cfg.p, cfg.precision)
            out.append(v if v < cfg.precision else AT_LEAST_PRECISION)
        return tuple(out)


def _rref_mod_p_ops(rows: list[list[int]], p: int, pN: int):
    """Row-reduce modulo p, recording the operations as a matrix over the ring.

    Returns (Q, pivots) with Q unit-invertible mod p^N and Q*rows congruent
    to a reduced row echelon form modulo p.
    """
    m = len(rows)
    n = len(rows[0]) if rows else 0
    a = [r[:] for r in rows]
    Q = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c] % p), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        Q[r], Q[piv] = Q[piv], Q[r]
        inv = pow(a[r][c], -1, pN)
        a[r] = [x * inv % pN for x in a[r]]
        Q[r] = [x * inv % pN for x in Q[r]]
        for i in range(m):
            if i != r and a[i][c] % p:
                f = a[i][c]
                a[i] = [(x - f * y) % pN for x, y in zip(a[i], a[r])]
                Q[i] = [(x - f * y) % pN for x, y in zip(Q[i], Q[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return Q, pivots


def _block_diag(blocks: list[list[list[int]]]) -> list[list[int]]:
    n = sum(len(b) for b in blocks)
    out = [[0] * n for _ in range(n)]
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            out[off + i][off:off + len(row)] = row
        off += len(b)
    return out


def _eye(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def block_smith(a: RMatrix, block: int) -> BlockSmithDecomposition:
    """Decompose a unit-invertible matrix as S*A*T = [[I_l, 0], [D, I_{n-l}]].

    Follows the constructive proof: reduce the two blocks of the first l
    columns modulo p, fix up the top block with a 0/1 matrix E so it becomes
    unit-invertible, clear the remaining blocks, and finish with a Smith
    normal form of the lower-left block.
    """
    cfg = a.config
    n = a.rows
    l = block
    if not (1 <= l <= n) or a.cols != n:
        raise ValueError("block size out of range")
    if not a.is_unit_invertible():
        raise ValueError("matrix is not unit-invertible at precision")
    p, pN = cfg.p, cfg.modulus
    rows = a.row_lists()
    a11 = [r[:l] for r in rows[:l]]
    a21 = [r[:l] for r in rows[l:]]

    q1, pivots = _rref_mod_p_ops(a11, p, pN)
    r = len(pivots)
    perm = pivots + [j for j in range(l) if j not in pivots]
    P = [[1 if perm[j] == i else 0 for j in range(l)] for i in range(l)]
    h1 = _mat_mul(_mat_mul(q1, a11, pN), P, pN)
    # clear the top-right block of h1 so its first r columns carry the pivots
    if 0 < r < l:
        tl = [row[:r] for row in h1[:r]]
        tr = [row[r:] for row in h1[:r]]
        corr = _mat_mul(_inv_mod(tl, p, pN), tr, pN)
        tprime = _eye(l)
        for i in range(r):
            for j in range(l - r):
                tprime[i][r + j] = -corr[i][j] % pN
    else:
        tprime = _eye(l)
    col_fix = _mat_mul(P, tprime, pN)

    b21 = _mat_mul(a21, col_fix, pN) if n > l else []
    if r < l:
        tail = [row[r:] for row in b21]
        q2, piv2 = _rref_mod_p_ops(tail, p, pN)
        if len(piv2) != l - r or piv2 != list(range(l - r)):
            # The tail columns must have full rank mod p with pivots in order;
            # full rank is guaranteed, pivot order is forced by rref.
            raise ArithmeticError("block reduction lost rank unexpectedly")
    else:
        q2 = _eye(n - l)
    E = [[0] * (n - l) for _ in range(l)]
    for s in range(l - r):
        E[r + s][s] = 1

    top = _mat_mul(_mat_mul(q1, a11, pN), col_fix, pN)
    bottom = _mat_mul(q2, b21, pN) if n > l else []
    Q = [
        [(top[i][j] + sum(E[i][t] * bottom[t][j] for t in range(n - l) if E[i][t])) % pN
         for j in range(l)]
        for i in range(l)
    ]

    EQ2 = _mat_mul(E, q2, pN) if n > l else [[] for _ in range(l)]
    left1 = [
        [q1[i][j] if j < l else EQ2[i][j - l] for j in range(n)] if i < l
        else [0] * l + q2[i - l]
        for i in range(n)
    ]
    right1 = _block_diag([col_fix, _eye(n - l)])

    qinv = _inv_mod(Q, p, pN)
    left2 = _mat_mul(_block_diag([qinv, _eye(n - l)]), left1, pN)
    m2 = _mat_mul(_mat_mul(left2, rows, pN), right1, pN)

    b12 = [row[l:] for row in m2[:l]]
    right2 = _eye(n)
    for i in range(l):
        for j in range(n - l):
            right2[i][l + j] = -b12[i][j] % pN
    m3 = _mat_mul(m2, right2, pN)

    b21_final = [row[:l] for row in m3[l:]]
    c22 = [row[l:] for row in m3[l:]]
    sb, tb, _ = _snf_raw(b21_final, p, cfg.precision) if n > l else (_eye(0), _eye(l), [])
    tb_inv = _inv_mod(tb, p, pN)
    left3 = _block_diag([tb_inv, sb])
    d_block = _mat_mul(_mat_mul(sb, b21_final, pN), tb, pN) if n > l else []
    right3 = _block_diag([tb, _eye(n - l)])
    c_new = _mat_mul(sb, c22, pN) if n > l else []
    right4 = _block_diag([_eye(l), _inv_mod(c_new, p, pN) if n > l else []])

    S = _mat_mul(left3, left2, pN)
    T = _mat_mul(_mat_mul(right1, right2, pN), _mat_mul(right3, right4, pN), pN)
    return BlockSmithDecomposition(
        left=RMatrix.from_rows(cfg, S),
        right=RMatrix.from_rows(cfg, T),
        lower_block=RMatrix.from_rows(cfg, d_block if n > l else [[]] * 0),
        block_size=l,
    )


def rectangle_block_smith(m: RMatrix, block: int):
    """For a saturated n x k matrix produce P in U_{l,n}, Q in GL_k(R) with
    P*M*Q = [I_k; 0; D], D in Smith form of shape (n-l) x k.

    Returns (P, Q, D).
    """
    cfg = m.config
    n, k = m.rows, m.cols
    l = block
    if not (k <= l <= n):
        raise ValueError("need k <= l <= n")
    p, pN = cfg.p, cfg.modulus
    s, t, raw = _snf_raw(m.row_lists(), p, cfg.precision)
    if any(e != 0 for e in raw):
        raise ValueError("matrix is not a saturated basis (unit wedge norm required)")
    s_inv = _inv_mod(s, p, pN)
    a_rows = [row_m + [s_inv[i][j] for j in range(k, n)] for i, row_m in enumerate(m.row_lists())]
    a = RMatrix.from_rows(cfg, a_rows)
    bs = block_smith(a, l)

    sm = _mat_mul(bs.left.row_lists(), m.row_lists(), pN)
    x1 = [row for row in sm[:l]]
    y1 = [row for row in sm[l:]]
    t11 = [row[:l] for row in bs.right.row_lists()[:l]]
    tx = _mat_mul(t11, x1, pN)
    expect = [[1 if i == j else 0 for j in range(k)] for i in range(l)]
    if tx != expect:
        raise ArithmeticError("block reduction failed to normalize the top block")

    sy, ty, _ = _snf_raw(y1, p, cfg.precision) if n > l else (_eye(0), _eye(k), [])
    d = _mat_mul(_mat_mul(sy, y1, pN), ty, pN) if n > l else []
    ty_inv = _inv_mod(ty, p, pN)
    # P = blockdiag(ty^-1 (+) I_{l-k}, sy) * blockdiag(t11, I) * S of the square case
    fix = _block_diag([ty_inv, _eye(l - k)])
    upper = _mat_mul(fix, t11, pN)
    P = _mat_mul(_block_diag([upper, sy]), bs.left.row_lists(), pN)
    return (
        RMatrix.from_rows(cfg, P),
        RMatrix.from_rows(cfg, ty),
        RMatrix.from_rows(cfg, d if n > l else [[0] * k for _ in range(0)]),
    )


# ---------------------------------------------------------------------------
# Sampling and kernels.
# ---------------------------------------------------------------------------


def sample_gln(config: PadicConfig, n: int, gen: np.random.Generator) -> RMatrix:
    """Haar-uniform element of GL_n(R): uniform residues conditioned on the
    reduction mod p being invertible (acceptance rate gamma_n)."""
    rows = _sample_gln_raw(config, n, ResidueSource(gen, config.modulus, batch=max(8, 2 * n * n)))
    return RMatrix.from_rows(config, rows)


def _sample_gln_raw(config: PadicConfig, n: int, src: ResidueSource) -> list[list[int]]:
    p = config.p
    while True:
        rows = [src.take_vector(n) for _ in range(n)]
        if _rank_mod_p(rows, p) == n:
            return rows


def kernel_saturated(a: RMatrix) -> RMatrix:
    """Saturated basis of ker(A) at precision: the columns of the right Smith
    factor matching vanishing invariant factors.  Each returned column v
    satisfies A v = 0 exactly modulo p^N, and the columns extend to a basis
    of the full lattice, hence are saturated."""
    cfg = a.config
    s = smith_normal_form(a)
    r = s.rank_at_precision
    n = a.cols
    cols = list(range(r, n))
    return s.right.columns(cols)


def matrix_from_field_columns(config: PadicConfig, columns) -> RMatrix:
    """Build an R-matrix from rational column vectors by clearing the global
    power of p (the span over K is unchanged)."""
    cols = [[Fraction(x) for x in col] for col in columns]
    shift = 0
    for col in cols:
        for x in col:
            if x != 0:
                d = x.denominator
                v = 0
                while d % config.p == 0:
                    d //= config.p
                    v += 1
                shift = max(shift, v)
    scale = config.p**shift
    rows = []
    n = len(cols[0])
    for i in range(n):
        row = []
        for col in cols:
            y = col[i] * scale
            num, den = y.numerator, y.denominator
            row.append(num * pow(den, -1, config.modulus) % config.modulus)
        rows.append(row)
    return RMatrix.from_rows(config, rows)
