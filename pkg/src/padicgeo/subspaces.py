"""Subspaces of K^n with saturated bases, canonical forms, uniform sampling,
position vectors of pairs, the relative-position norm, and duality.

A subspace is stored through a saturated basis: the columns span the
intersection of the space with the standard lattice, equivalently the wedge
of the columns has norm one.  Two subspaces are equal iff their canonical
chart representatives agree, where the chart is chosen as the
lexicographically first row set with a unit minor.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from padicgeo.core import (
    AT_LEAST_PRECISION,
    PadicConfig,
    Val,
    is_exact_val,
    val_sort_key,
)
from padicgeo.linalg import (
    NormValue,
    RMatrix,
    _inv_mod,
    _mat_mul,
    _rank_mod_p,
    _snf_raw,
    kernel_saturated,
    sample_gln,
    smith_normal_form,
)


@dataclass(frozen=True)
class PositionVector:
    """Relative position of a pair of subspaces: a nondecreasing exponent list.

    Entries of at least the working precision (which include genuinely
    infinite ones, i.e. directions of actual intersection) are collapsed into
    the trailing count `at_precision`; probability-one statements about them
    hold only up to events of measure p^-N.
    """

    finite: tuple[int, ...]
    at_precision: int

    def __post_init__(self) -> None:
        if any(b < a for a, b in zip(self.finite, self.finite[1:])):
            raise ValueError("position entries must be nondecreasing")

    @property
    def length(self) -> int:
        return len(self.finite) + self.at_precision

    def entries(self) -> tuple[Val, ...]:
        return self.finite + (AT_LEAST_PRECISION,) * self.at_precision

    def exponent_sum(self) -> int | None:
        """Sum of the entries; None when an entry is only known to be >= N."""
        return sum(self.finite) if self.at_precision == 0 else None


@dataclass(frozen=True)
class Subspace:
    """A k-dimensional subspace of K^n held by a saturated basis."""

    basis: RMatrix
    pivots: tuple[int, ...]
    canonical: tuple[tuple[int, ...], ...]

    @property
    def config(self) -> PadicConfig:
        return self.basis.config

    @property
    def ambient(self) -> int:
        return self.basis.rows

    @property
    def dim(self) -> int:
        return self.basis.cols

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (
            self.basis.config == other.basis.config
            and self.pivots == other.pivots
            and self.canonical == other.canonical
        )

    def __hash__(self) -> int:
        return hash((self.pivots, self.canonical))

    def transformed(self, g: RMatrix) -> Subspace:
        """Image under an ambient unit-invertible map."""
        return saturate(g @ self.basis)


def _canonical_form(basis_rows: list[list[int]], p: int, pN: int) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """Pivot set (lexicographically first with unit minor) and the chart
    representative basis * basis[pivots]^-1."""
    n, k = len(basis_rows), len(basis_rows[0])
    for comb in combinations(range(n), k):
        block = [basis_rows[i] for i in comb]
        if _rank_mod_p(block, p) == k:
            rep = _mat_mul(basis_rows, _inv_mod(block, p, pN), pN)
            return tuple(comb), tuple(tuple(r) for r in rep)
    raise ValueError("basis is rank deficient at precision")


def saturate(m: RMatrix) -> Subspace:
    """Saturated basis of the column span of a matrix of full column rank.

    The span is unchanged; the columns of the result span the intersection of
    the span with the standard lattice (unit wedge norm).  Idempotent up to
    the right action of GL_k(R): canonical forms of repeated applications
    agree.
    """
    cfg = m.config
    n, k = m.rows, m.cols
    if k == 0 or n == 0 or k > n:
        raise ValueError("need 1 <= k <= n columns")
    p, pN = cfg.p, cfg.modulus
    rows = m.row_lists()
    s, _, raw = _snf_raw(rows, p, cfg.precision)
    if any(e >= cfg.precision for e in raw):
        raise ValueError("columns are rank deficient at precision")
    s_inv = _inv_mod(s, p, pN)
    basis_rows = [[s_inv[i][j] for j in range(k)] for i in range(n)]
    basis = RMatrix.from_rows(cfg, basis_rows)
    pivots, canonical = _canonical_form(basis_rows, p, pN)
    return Subspace(basis=basis, pivots=pivots, canonical=canonical)


def from_integer_columns(cfg: PadicConfig, columns) -> Subspace:
    """Subspace spanned by integer column vectors."""
    rows = [[int(col[i]) for col in columns] for i in range(len(columns[0]))]
    return saturate(RMatrix.from_rows(cfg, rows))


def coordinate_subspace(cfg: PadicConfig, n: int, axes) -> Subspace:
    cols = [[1 if i == a else 0 for i in range(n)] for a in axes]
    return from_integer_columns(cfg, cols)


def sample_uniform_subspace(cfg: PadicConfig, k: int, n: int, gen: np.random.Generator) -> Subspace:
    """Uniform k-dimensional subspace: the span of the first k columns of a
    Haar element of GL_n(R).  The distribution is invariant under every fixed
    unit-invertible ambient map."""
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    g = sample_gln(cfg, n, gen)
    basis_rows = [list(r[:k]) for r in g.entries]
    basis = RMatrix.from_rows(cfg, basis_rows)
    pivots, canonical = _canonical_form(basis_rows, cfg.p, cfg.modulus)
    return Subspace(basis=basis, pivots=pivots, canonical=canonical)


def _concat_exponents(e: Subspace, f: Subspace) -> list[int]:
    cfg = e.config
    rows = [list(a) + list(b) for a, b in zip(e.basis.entries, f.basis.entries)]
    _, _, raw = _snf_raw(rows, cfg.p, cfg.precision)
    return raw


def position_vector(e: Subspace, f: Subspace) -> PositionVector:
    """Position vector of a pair of subspaces.

    For dim E + dim F <= n this is the exponent list of the addition map: the
    Smith exponents of the concatenated saturated bases, after discarding the
    max(dim E, dim F) leading zeros.  For dim E + dim F > n the pair is
    reduced through orthogonal complements, which preserves the finite
    entries; the forced intersection directions come back as trailing
    at-precision entries.
    """
    if e.ambient != f.ambient:
        raise ValueError("ambient dimension mismatch")
    cfg = e.config
    n = e.ambient
    k, l = sorted((e.dim, f.dim))
    if e.dim + f.dim <= n:
        raw = _concat_exponents(e, f)
        if any(v != 0 for v in raw[:l]):
            raise ArithmeticError("saturated inputs must produce unit leading factors")
        finite = [v for v in raw[l:] if v < cfg.precision]
        alp = (k + l - len(raw)) + sum(1 for v in raw[l:] if v >= cfg.precision)
        return PositionVector(finite=tuple(finite), at_precision=alp)
    dual = position_vector(orthogonal_complement(e), orthogonal_complement(f))
    return PositionVector(finite=dual.finite, at_precision=k - len(dual.finite))


def relative_position_norm(*spaces: Subspace) -> NormValue:
    """Norm of the wedge of the concatenated saturated bases.

    Equals 1 iff the lattices of the spaces sum directly to the saturated
    lattice of the sum; equals p^(-sum of position entries) for two spaces;
    vanishes iff the spaces are linearly dependent.  A value of 0 with
    exact=False means only that the norm is at most p^-N.
    """
    if not spaces:
        raise ValueError("need at least one subspace")
    n = spaces[0].ambient
    total = sum(s.dim for s in spaces)
    if total > n:
        raise ValueError("total dimension exceeds the ambient dimension")
    cfg = spaces[0].config
    rows = [sum((list(s.basis.entries[i]) for s in spaces), []) for i in range(n)]
    _, _, raw = _snf_raw(rows, cfg.p, cfg.precision)
    if any(v >= cfg.precision for v in raw):
        return NormValue(Fraction(0), False)
    return NormValue(Fraction(1, cfg.p ** sum(raw)), True)


def orthogonal_complement(e: Subspace) -> Subspace:
    """Annihilator of the subspace in the dual, via the saturated kernel of
    the transposed basis.  Applying it twice returns the original subspace."""
    ker = kernel_saturated(e.basis.transpose())
    if ker.cols != e.ambient - e.dim:
        raise ArithmeticError("complement has unexpected dimension at precision")
    return saturate(ker)


def subtraction_map_determinant(e: Subspace, f: Subspace) -> NormValue:
    """Absolute determinant of (x, y) -> x - y on E x F for E + F = K^n.

    Column negation does not change absolute values of minors, so this is
    the absolute determinant of the concatenated saturated bases.
    """
    if e.dim + f.dim != e.ambient:
        raise ValueError("need dim E + dim F = n")
    cfg = e.config
    raw = _concat_exponents(e, f)
    if any(v >= cfg.precision for v in raw):
        return NormValue(Fraction(0), False)
    return NormValue(Fraction(1, cfg.p ** sum(raw)), True)


def position_vector_via_block_form(e: Subspace, f_dim: int) -> PositionVector:
    """Alternate route to the position vector against the coordinate subspace
    spanned by the first `f_dim` axes: read the exponents off the lower block
    of the rectangular block Smith decomposition of the basis.

    Cross-validates the addition-map route; both must agree.
    """
    from padicgeo.linalg import rectangle_block_smith

    cfg = e.config
    if not (e.dim <= f_dim <= e.ambient - e.dim):
        raise ValueError("need dim E <= dim F and dim E + dim F <= n")
    _, _, d = rectangle_block_smith(e.basis, f_dim)
    exps: list[Val] = []
    for i in range(min(d.rows, d.cols)):
        v = cfg.residue_valuation(d.entries[i][i])
        exps.append(v)
    exps.sort(key=val_sort_key)
    finite = tuple(v for v in exps if is_exact_val(v))
    return PositionVector(finite=finite, at_precision=e.dim - len(finite))
