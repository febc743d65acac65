"""Random fewnomial systems: support analysis, the monomial-map Jacobian,
exact series evaluation of the expected number of zeros, closed forms for
rectangular and simplex supports, and a Hensel-certified root counter that
backs the Monte Carlo cross-checks.

The expected number of nondegenerate zeros of a system with i.i.d. uniform
lattice coefficients over a region U inside the unit polydisc is the
integral of the Jacobian of the monomial map over U, divided by the volume
of projective n-space.  The Jacobian depends only on the valuation vector of
the point, so the integral is an exact geometric series; coordinates outside
the unit disc are folded in by inverting the corresponding exponents.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb

from padicgeo.core import PadicConfig, ResidueSource
from padicgeo.linalg import _det_bareiss
from padicgeo.montecarlo import (
    LABEL_FEWNOMIAL,
    Estimate,
    MCConfig,
    run_value_estimate,
)
from padicgeo.volumes import projective_volume


class Region(Enum):
    """Per-coordinate domains for zero counting."""

    UNIT = "units"            # valuation exactly 0
    M_NONZERO = "m-nonzero"   # positive valuation, nonzero
    R_NONZERO = "r-nonzero"   # the unit disc minus zero
    K_MINUS_R = "k-minus-r"   # negative valuation
    K_TIMES = "k-times"       # all nonzero field elements


# regions contained in the unit disc, after inversion folding
_DISC_REGIONS = (Region.UNIT, Region.M_NONZERO, Region.R_NONZERO)


def parse_region(text: str, n: int) -> tuple[Region, ...]:
    parts = text.split("/") if "/" in text else [text] * n
    if len(parts) != n:
        raise ValueError(f"expected {n} region components, got {len(parts)}")
    lookup = {r.value: r for r in Region}
    try:
        return tuple(lookup[p.strip()] for p in parts)
    except KeyError as exc:
        raise ValueError(f"unknown region {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class Support:
    """A finite set of integer exponent vectors with full-dimensional affine span."""

    n: int
    exponents: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        exps = tuple(sorted(tuple(int(e) for e in v) for v in self.exponents))
        if len(set(exps)) != len(exps):
            raise ValueError("exponent vectors must be distinct")
        if any(len(v) != self.n for v in exps):
            raise ValueError("exponent vectors must have length n")
        if len(exps) < self.n + 1:
            raise ValueError("support is too small for a full-dimensional span")
        object.__setattr__(self, "exponents", exps)
        if not self._affine_span_full():
            raise ValueError("affine span of the support must be full dimensional")

    def _affine_span_full(self) -> bool:
        base = self.exponents[0]
        rows = [[v[i] - base[i] for i in range(self.n)] for v in self.exponents[1:]]
        return _rational_rank(rows) == self.n

    @classmethod
    def univariate(cls, *exponents: int) -> Support:
        return cls(1, tuple((int(e),) for e in exponents))

    @classmethod
    def grid(cls, axis: tuple[int, ...], n: int = 2) -> Support:
        """Product support axis^n, e.g. {0,1,99,100}^2."""
        return cls(n, tuple(itertools.product(axis, repeat=n)))

    @property
    def size(self) -> int:
        return len(self.exponents)

    def shifted_to_origin(self) -> tuple[Support, tuple[int, ...]]:
        mins = tuple(min(v[i] for v in self.exponents) for i in range(self.n))
        shifted = tuple(tuple(v[i] - mins[i] for i in range(self.n)) for v in self.exponents)
        return Support(self.n, shifted), mins

    def inverted(self, axes) -> Support:
        """Negate the chosen coordinates of every exponent (the involution
        that swaps a coordinate's inside and outside of the unit disc)."""
        axes = set(axes)
        return Support(
            self.n,
            tuple(
                tuple(-v[i] if i in axes else v[i] for i in range(self.n))
                for v in self.exponents
            ),
        )


def _rational_rank(rows: list[list[int]]) -> int:
    a = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    cols = len(a[0]) if a else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        a[rank] = [x / a[rank][c] for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class PolytopeInfo:
    """Shape analysis of the Newton polytope of a support."""

    is_rectangular: bool
    is_vertex_simplex: bool
    vertices: tuple[tuple[int, ...], ...]
    gap_free_at: dict
    minimal_vertex: tuple[int, ...]

    @property
    def gap_free_everywhere(self) -> bool:
        return bool(self.gap_free_at) and all(self.gap_free_at.values())

    @property
    def gap_free_at_minimal(self) -> bool:
        return bool(self.gap_free_at.get(self.minimal_vertex, False))


def analyze_support(support: Support) -> PolytopeInfo:
    """Rectangularity, vertex-simplex shape, and gap-freeness at vertices.

    The Newton polytope is rectangular iff every corner of the coordinate
    bounding box belongs to the support; it is a vertex simplex iff it is
    the simplex spanned by the minimal vertex and the d-th multiples of the
    coordinate directions, all of which must belong to the support.
    Gap-freeness at a vertex asks for the nearest lattice neighbours of the
    vertex inside the polytope to belong to the support.
    """
    n = support.n
    pts = set(support.exponents)
    mins = tuple(min(v[i] for v in pts) for i in range(n))
    maxs = tuple(max(v[i] for v in pts) for i in range(n))
    corners = list(itertools.product(*[(mins[i], maxs[i]) for i in range(n)]))
    is_rect = all(c in pts for c in corners)

    shifted = {tuple(v[i] - mins[i] for i in range(n)) for v in pts}
    degree = max(sum(v) for v in shifted)
    simplex_vertices = [tuple(0 for _ in range(n))] + [
        tuple(degree if j == i else 0 for j in range(n)) for i in range(n)
    ]
    in_simplex = all(sum(v) <= degree for v in shifted)
    is_simplex = in_simplex and all(v in shifted for v in simplex_vertices)

    gap_free: dict = {}
    vertices: tuple[tuple[int, ...], ...]
    if is_rect:
        vertices = tuple(corners)
        for corner in corners:
            ok = True
            for i in range(n):
                step = 1 if corner[i] == mins[i] else -1
                nb = tuple(corner[j] + (step if j == i else 0) for j in range(n))
                if nb not in pts:
                    ok = False
                    break
            gap_free[corner] = ok
    elif is_simplex:
        vertices = tuple(tuple(v[i] + mins[i] for i in range(n)) for v in simplex_vertices)
        for raw, vert in zip(simplex_vertices, vertices):
            if sum(raw) == 0:
                nbs = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
            else:
                axis = raw.index(degree)
                nbs = [tuple(v - (1 if j == axis else 0) for j, v in enumerate(raw))]
                nbs += [
                    tuple(v - (1 if j == axis else 0) + (1 if j == other else 0)
                          for j, v in enumerate(raw))
                    for other in range(n) if other != axis
                ]
            gap_free[vert] = all(nb in shifted for nb in nbs)
    else:
        vertices = tuple(sorted(_hull_vertices(pts))) if n <= 2 else ()
    return PolytopeInfo(
        is_rectangular=is_rect,
        is_vertex_simplex=is_simplex,
        vertices=vertices,
        gap_free_at=gap_free,
        minimal_vertex=mins,
    )


def _hull_vertices(pts) -> list[tuple[int, ...]]:
    pts = sorted(pts)
    if len(pts[0]) == 1:
        return [pts[0], pts[-1]]

    def half(points):
        out = []
        for pt in points:
            while len(out) >= 2 and _cross(out[-2], out[-1], pt) <= 0:
                out.pop()
            out.append(pt)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


# ---------------------------------------------------------------------------
# The Jacobian of the monomial map, as a function of valuations.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _JacobianTable:
    """Minors of the exponent matrix: for each invertible n-subset I of the
    shifted nonzero support, the p-valuation of det(M_I) and the row sums
    b(I).  The Jacobian at a point of valuation vector v is
    max_I |det M_I| prod_i |x_i|^(b_i(I) - 1)."""

    entries: tuple[tuple[int, tuple[int, ...]], ...]
    decay: tuple[int, ...]  # per-coordinate min of b_i(I) - 1 (>= 0)
    n: int

    def exponent(self, v) -> int | None:
        """Exponent e with J = p^-e at valuation vector v, None when the
        Jacobian vanishes identically."""
        best = None
        for det_val, b in self.entries:
            e = det_val + sum(v[i] * (b[i] - 1) for i in range(self.n))
            if best is None or e < best:
                best = e
        return best


def _jacobian_table(support: Support, p: int) -> _JacobianTable:
    shifted, _ = support.shifted_to_origin()
    n = shifted.n
    origin = tuple(0 for _ in range(n))
    if origin not in shifted.exponents:
        raise ValueError(
            "Jacobian evaluation needs the coordinatewise-minimal vertex in the support"
        )
    rows = [v for v in shifted.exponents if v != origin]
    entries = []
    for idx in itertools.combinations(range(len(rows)), n):
        mat = [list(rows[i]) for i in idx]
        det = _det_bareiss(mat)
        if det == 0:
            continue
        det_val = 0
        d = abs(det)
        while d % p == 0:
            d //= p
            det_val += 1
        b = tuple(sum(rows[i][j] for i in idx) for j in range(n))
        entries.append((det_val, b))
    if not entries:
        raise ValueError("support has no invertible exponent minor")
    decay = tuple(min(b[i] for _, b in entries) - 1 for i in range(n))
    return _JacobianTable(entries=tuple(entries), decay=decay, n=n)


def jacobian_at_valuations(support: Support, v, p: int) -> Fraction:
    """Jacobian of the monomial map at any point with valuation vector v >= 0.

    The support is shifted so its coordinatewise-minimal vertex sits at the
    origin (the shift does not change the projective map on the unit
    polydisc).  For rectangular supports the value never exceeds 1, and it
    is identically 1 iff the support is gap-free at the minimal vertex.
    """
    table = _jacobian_table(support, p)
    e = table.exponent(tuple(v))
    if e is None:
        return Fraction(0)
    return Fraction(1, p**e)


# ---------------------------------------------------------------------------
# Exact series for the expected number of zeros.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesResult:
    value: Fraction
    tail_bound: Fraction

    def brackets(self) -> tuple[Fraction, Fraction]:
        return self.value, self.value + self.tail_bound


def _disc_factor_pieces(regions) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Expand K^x and K-R coordinates: returns (inverted_axes, start_vals)
    pieces whose disjoint union is the requested region; start_vals give the
    minimal valuation per coordinate (0 for the disc, 1 for the open ball),
    with -1 marking a unit coordinate (valuation pinned to 0)."""
    choices = []
    for r in regions:
        if r == Region.UNIT:
            choices.append(((False, -1),))
        elif r == Region.M_NONZERO:
            choices.append(((False, 1),))
        elif r == Region.R_NONZERO:
            choices.append(((False, 0),))
        elif r == Region.K_MINUS_R:
            choices.append(((True, 1),))
        elif r == Region.K_TIMES:
            choices.append(((False, 0), (True, 1)))
        else:  # pragma: no cover
            raise ValueError(r)
    pieces = []
    for combo in itertools.product(*choices):
        axes = tuple(i for i, (inv, _) in enumerate(combo) if inv)
        starts = tuple(s for _, s in combo)
        pieces.append((axes, starts))
    return pieces


def expected_zeros_series(
    support: Support, regions, p: int, truncation: int = 60
) -> SeriesResult:
    """Expected number of nondegenerate zeros over the region, as a truncated
    exact series with a certified geometric tail bound.

    Per coordinate the region may pin the valuation to zero (units), force
    it positive (the punctured open ball), leave the punctured disc free, or
    leave the disc entirely (folded in by exponent inversion).
    """
    regions = tuple(regions)
    if len(regions) != support.n:
        raise ValueError("one region per coordinate required")
    n = support.n
    eps = Fraction(1, p)
    value = Fraction(0)
    tail = Fraction(0)
    norm = 1 / projective_volume(n, p)
    for axes, starts in _disc_factor_pieces(regions):
        piece_support = support.inverted(axes)
        table = _jacobian_table(piece_support, p)
        ranges = []
        for s in starts:
            if s == -1:
                ranges.append(range(0, 1))
            else:
                ranges.append(range(s, truncation + 1))
        weights: dict[int, int] = {}
        for v in itertools.product(*ranges):
            e = table.exponent(v)
            if e is None:
                continue
            total = e + sum(v)
            weights[total] = weights.get(total, 0) + 1
        piece = sum((cnt * eps**e for e, cnt in weights.items()), Fraction(0))
        piece *= (1 - eps) ** n
        value += norm * piece
        tail += norm * _series_tail(table, starts, truncation, eps)
    return SeriesResult(value=value, tail_bound=tail)


def _series_tail(table: _JacobianTable, starts, truncation: int, eps: Fraction) -> Fraction:
    """Mass of the discarded valuation vectors, bounded by the geometric
    majorant J <= prod |x_i|^decay_i."""
    n = table.n
    full = []
    tails = []
    for i in range(n):
        w = 1 + table.decay[i]
        if starts[i] == -1:
            full.append(1 - eps)
            tails.append(Fraction(0))
        else:
            start = starts[i]
            full.append((1 - eps) * eps ** (w * start) / (1 - eps**w))
            tails.append((1 - eps) * eps ** (w * (truncation + 1)) / (1 - eps**w))
    out = Fraction(0)
    for i in range(n):
        if tails[i] == 0:
            continue
        term = tails[i]
        for j in range(n):
            if j != i:
                term *= full[j]
        out += term
    return out


# ---------------------------------------------------------------------------
# Closed forms.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    """A closed-form expectation; when is_exact is False the value is only a
    certified upper bound for the region."""

    value: Fraction
    is_exact: bool
    description: str


def _radical(q: int) -> int:
    """The residue characteristic of a prime power q."""
    if q < 2:
        raise ValueError("q must be at least 2")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    m = q
    while m % p == 0:
        m //= p
    if m != 1:
        raise ValueError("q must be a prime power")
    return p


def _abs_int(m: int, q: int, p: int) -> Fraction:
    """Field absolute value of a nonzero rational integer: q^-val_p(m)."""
    m = abs(m)
    v = 0
    while m % p == 0:
        m //= p
        v += 1
    return Fraction(1, q**v)


def expected_zeros_closed_form(support: Support, regions, q: int, p: int | None = None) -> ClosedForm:
    """Closed-form expectation (or certified upper bound) of the number of
    nondegenerate zeros, with q the residue cardinality as a free parameter.

    Supported shapes: any univariate support over units / punctured open
    ball / all nonzero field elements; rectangular supports over the full
    torus; vertex-simplex supports over the full torus.
    """
    regions = tuple(regions)
    if p is None:
        p = _radical(q)
    eps = Fraction(1, q)
    if support.n == 1:
        exps = sorted(v[0] for v in support.exponents)
        gaps_low = exps[1] - exps[0]
        gaps_high = exps[-1] - exps[-2]
        region = regions[0]
        if region == Region.UNIT:
            value = (1 - eps) / (1 + eps) * max(
                _abs_int(e - exps[0], q, p) for e in exps[1:]
            )
            return ClosedForm(value, True, "units, exact for every univariate support")
        if region == Region.M_NONZERO:
            value = (1 - eps) / (1 + eps) * (1 / (1 - eps**gaps_low) - 1)
            exact = _abs_int(gaps_low, q, p) == 1
            return ClosedForm(value, exact, "punctured ball, exact iff the lowest gap is a unit")
        if region == Region.K_TIMES:
            value = (1 - eps) / (1 + eps) * (
                1 / (1 - eps**gaps_low) + 1 / (1 - eps**gaps_high) - 1
            )
            exact = _abs_int(gaps_low, q, p) == 1 and _abs_int(gaps_high, q, p) == 1
            return ClosedForm(value, exact, "all nonzero elements, exact iff both extreme gaps are units")
        raise ValueError(f"no closed form for univariate region {region}")
    if any(r != Region.K_TIMES for r in regions):
        raise ValueError("multivariate closed forms cover the full torus only")
    info = analyze_support(support)
    n = support.n
    if info.is_rectangular:
        value = (1 - eps) * (1 + eps) ** n / (1 - eps ** (n + 1))
        return ClosedForm(
            value, info.gap_free_everywhere,
            "rectangular torus bound, exact iff gap-free at every vertex",
        )
    if info.is_vertex_simplex:
        if not info.gap_free_everywhere:
            raise ValueError("simplex closed form needs the vertex neighbours in the support")
        return ClosedForm(Fraction(1), True, "vertex simplex, exact")
    raise ValueError("unsupported support shape for a closed form")


# ---------------------------------------------------------------------------
# Hensel-certified root counting.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootCount:
    count: int
    indeterminate: bool


class _Indeterminate(Exception):
    pass


class _PolySystem:
    """Evaluation-based view of a square fewnomial system over the ring.

    Stores one coefficient row per equation against a fixed exponent list
    (nonnegative exponents).  All recursion state is reconstructed from
    scaled Hasse-derivative evaluations of the original equations, so deep
    branches never pay for symbolic substitution.
    """

    def __init__(self, exponents, coeff_rows, p: int, precision: int):
        self.exponents = [tuple(e) for e in exponents]
        self.coeffs = [list(row) for row in coeff_rows]
        self.n = len(self.exponents[0])
        self.p = p
        self.N = precision
        self.pN = p**precision
        self.max_exp = [max(e[i] for e in self.exponents) for i in range(self.n)]

    def hasse(self, eq: int, k, point) -> int:
        """Hasse derivative H^k f_eq evaluated at the point, mod p^N."""
        pN = self.pN
        total = 0
        for coef, e in zip(self.coeffs[eq], self.exponents):
            term = coef
            for i in range(self.n):
                if k[i]:
                    if e[i] < k[i]:
                        term = 0
                        break
                    term = term * comb(e[i], k[i]) % pN
                    if e[i] > k[i]:
                        term = term * pow(point[i], e[i] - k[i], pN) % pN
                else:
                    if e[i]:
                        term = term * pow(point[i], e[i], pN) % pN
            if term:
                total += term
        return total % pN

    def value(self, eq: int, point) -> int:
        return self.hasse(eq, (0,) * self.n, point)

    def val(self, a: int) -> int:
        if a % self.pN == 0:
            return self.N
        v, p = 0, self.p
        while a % p == 0:
            a //= p
            v += 1
        return v


def _unit_vectors(n: int):
    return [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]


def _count_roots_in_disc(system: _PolySystem, level0_allowed, budget: int) -> int:
    """Number of certified nondegenerate roots of the system inside the unit
    polydisc, with per-coordinate residue constraints at the top level.

    level0_allowed[i] is a set of residues mod p admissible for coordinate i
    at valuation level zero, plus a flag demanding the coordinate be nonzero.
    Raises _Indeterminate when precision cannot decide a branch.
    """
    p, n, N = system.p, system.n, system.N
    units = _unit_vectors(n)
    count = 0

    def recurse(point, depth, contents) -> int:
        nonlocal count
        found = 0
        if depth == 0:
            residue_sets = [sorted(level0_allowed[i][0]) for i in range(n)]
        else:
            residue_sets = [range(p)] * n
        pd = p**depth
        for digits in itertools.product(*residue_sets):
            x1 = tuple((point[i] + pd * digits[i]) % system.pN for i in range(n))
            values = [system.value(i, x1) for i in range(len(system.coeffs))]
            vals = [system.val(v) for v in values]
            if any(v < contents[i] + 1 for i, v in enumerate(vals)):
                continue
            # scaled Jacobian mod p
            jac = []
            for i in range(len(system.coeffs)):
                row = []
                for ev in units:
                    h = system.hasse(i, ev, x1)
                    scaled = h * pd
                    row.append(scaled // p ** contents[i] % p)
                jac.append(row)
            if _det_bareiss([r[:] for r in jac]) % p != 0:
                if _root_in_region(system, x1, depth, contents, digits, jac):
                    found += 1
                continue
            child = []
            for i in range(len(system.coeffs)):
                best = N
                kmax = max(1, -(-N // (depth + 1)))
                for k in _multi_indices(n, min(kmax, sum(system.max_exp))):
                    if any(k[j] > system.max_exp[j] for j in range(n)):
                        continue
                    h = system.hasse(i, k, x1)
                    if h == 0:
                        continue
                    best = min(best, system.val(h) + (depth + 1) * sum(k))
                    if best <= contents[i] + 1:
                        break
                if best >= N:
                    raise _Indeterminate("equation vanishes at precision along a branch")
                child.append(best)
            if max(child) > budget:
                raise _Indeterminate("content budget exhausted")
            found += recurse(x1, depth + 1, child)
        return found

    def _root_in_region(system, x1, depth, contents, digits, jac) -> bool:
        # level-0 residue constraints are enforced upstream; what remains is
        # certifying coordinates that must be nonzero but have only zero
        # digits so far.
        need_nonzero = [i for i in range(n) if level0_allowed[i][1]]
        unknown = [i for i in need_nonzero if x1[i] % p ** (depth + 1) == 0]
        if not unknown:
            return True
        refined = _newton_refine(system, x1, depth, contents, jac)
        still = [i for i in unknown if refined[i] == 0]
        if not still:
            return True
        if n == 1:
            const = _constant_term(system, 0)
            if const % system.pN != 0:
                return True
        raise _Indeterminate("cannot certify a coordinate is nonzero at precision")

    return recurse((0,) * n, 0, [0] * len(system.coeffs))


def _multi_indices(n: int, cap: int):
    if n == 1:
        for k in range(cap + 1):
            yield (k,)
    else:
        for total in range(cap + 1):
            for head in range(total + 1):
                if n == 2:
                    yield (head, total - head)
                else:  # pragma: no cover - systems are capped at n <= 2
                    for rest in _multi_indices(n - 1, total - head):
                        if sum(rest) == total - head:
                            yield (head, *rest)


def _constant_term(system: _PolySystem, eq: int) -> int:
    for coef, e in zip(system.coeffs[eq], system.exponents):
        if all(v == 0 for v in e):
            return coef
    return 0


def _newton_refine(system: _PolySystem, x1, depth, contents, jac):
    """Refine a certified root to the maximal certifiable precision; returns
    the refined point mod p^min(N, depth + working)."""
    p, n = system.p, system.n
    W = system.N - max(contents)
    pW = p**W
    jac_inv = _inv_mod_prime_power([row[:] for row in jac], p, pW)
    units = _unit_vectors(n)
    x = list(x1)
    pd = p**depth
    for _ in range(W + 2):
        g = []
        for i in range(len(system.coeffs)):
            v = system.value(i, tuple(x))
            g.append(v // p ** contents[i] % pW)
        if all(gi == 0 for gi in g):
            break
        delta = [sum(jac_inv[r][c] * g[c] for c in range(n)) % pW for r in range(n)]
        for r in range(n):
            x[r] = (x[r] - pd * delta[r]) % system.pN
    known = min(system.N, depth + W)
    return [xi % p**known for xi in x]


def _inv_mod_prime_power(rows, p, modulus):
    n = len(rows)
    aug = [r[:] + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c] % p)
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = pow(aug[c][c], -1, modulus)
        aug[c] = [x * inv % modulus for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(aug[i][j] - f * aug[c][j]) % modulus for j in range(2 * n)]
    return [r[n:] for r in aug]


def count_roots(
    support: Support,
    coefficients,
    regions,
    padic: PadicConfig,
    depth_budget: int | None = None,
) -> RootCount:
    """Count the nondegenerate zeros of the system in the region.

    `coefficients` holds one row per equation, aligned with
    `support.exponents`.  Coordinates outside the unit disc are folded in by
    exponent inversion; on the disc the counter walks the residue tree,
    certifying each root by a unit scaled Jacobian (a Hensel certificate)
    and recursing with content division where the certificate fails.
    Precision exhaustion marks the whole sample indeterminate.
    """
    regions = tuple(regions)
    if len(regions) != support.n:
        raise ValueError("one region per coordinate required")
    if support.n > 2:
        raise ValueError("systems are supported for n <= 2")
    if depth_budget is None:
        depth_budget = padic.precision - 2
    total = 0
    try:
        for axes, starts in _disc_factor_pieces(regions):
            piece = support.inverted(axes)
            shifted, _ = piece.shifted_to_origin()
            allowed = []
            for s in starts:
                if s == -1:
                    allowed.append((set(range(1, padic.p)), False))
                elif s == 1:
                    allowed.append(({0}, True))
                else:
                    allowed.append((set(range(padic.p)), True))
            system = _PolySystem(
                shifted.exponents, coefficients, padic.p, padic.precision
            )
            total += _count_roots_in_disc(system, allowed, depth_budget)
    except _Indeterminate:
        return RootCount(count=0, indeterminate=True)
    return RootCount(count=total, indeterminate=False)


def _fewnomial_kernel(padic: PadicConfig, params, gen):
    exponents, region_values, budget = params
    support = Support(len(exponents[0]), exponents)
    regions = tuple(Region(v) for v in region_values)
    t = len(exponents)
    n_eq = support.n
    src = ResidueSource(gen, padic.modulus, batch=max(8, n_eq * t))
    coeffs = [src.take_vector(t) for _ in range(n_eq)]
    rc = count_roots(support, coeffs, regions, padic, budget)
    if rc.indeterminate:
        return ("discard",)
    return ("value", Fraction(rc.count))


def estimate_expected_zeros(
    support: Support, regions, cfg: MCConfig, depth_budget: int | None = None
) -> Estimate:
    """Monte Carlo mean of the certified root count over i.i.d. uniform
    coefficient draws; indeterminate samples are discarded and tallied."""
    regions = tuple(regions)
    params = (support.exponents, tuple(r.value for r in regions), depth_budget)
    return run_value_estimate(
        "padicgeo.fewnomials:_fewnomial_kernel", params, cfg, LABEL_FEWNOMIAL
    )
