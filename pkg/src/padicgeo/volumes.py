"""Exact rational closed forms: volumes of classical spaces over the
valuation ring, q-binomials, the discrete density of the position vector of
random subspace pairs with certified truncation tails, volume ratios of
special Schubert varieties, average scaling factors, and a brute-force
point-counting volume oracle.

Everything takes the residue cardinality q as a free rational parameter and
is evaluated in exact rational arithmetic.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import comb

QLike = Fraction | int


def _eps(q: QLike) -> Fraction:
    q = Fraction(q)
    if q <= 1:
        raise ValueError("q must exceed 1")
    return 1 / q


def gl_volume(n: int, q: QLike) -> Fraction:
    """Haar volume of GL_n over the valuation ring: prod_{i<=n} (1 - q^-i)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    e = _eps(q)
    out = Fraction(1)
    for i in range(1, n + 1):
        out *= 1 - e**i
    return out


def q_bracket(i: int, q: QLike) -> Fraction:
    return sum((Fraction(q) ** j for j in range(i)), Fraction(0))


def q_factorial(n: int, q: QLike) -> Fraction:
    out = Fraction(1)
    for i in range(1, n + 1):
        out *= q_bracket(i, q)
    return out


def q_binomial(n: int, k: int, q: QLike) -> Fraction:
    """Gaussian binomial coefficient; counts k-subspaces of F_q^n for prime powers q."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return q_factorial(n, q) / (q_factorial(k, q) * q_factorial(n - k, q))


def projective_volume(n: int, q: QLike) -> Fraction:
    """(1 - eps^(n+1)) / (1 - eps)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    e = _eps(q)
    return (1 - e ** (n + 1)) / (1 - e)


def grassmannian_volume(k: int, n: int, q: QLike) -> Fraction:
    """gamma_n / (gamma_k gamma_{n-k}); symmetric under k <-> n-k."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return gl_volume(n, q) / (gl_volume(k, q) * gl_volume(n - k, q))


def _gr(a: int, b: int, q: QLike) -> Fraction:
    """Volume of the Grassmannian of a-planes in (a+b)-space."""
    return grassmannian_volume(a, a + b, q)


def schubert_volume_ratio(a: int, a1: int, b: int, b1: int, q: QLike) -> Fraction:
    """Relative volume of the special Schubert variety of (a+a1)-planes in
    (a+a1+b+b1)-space meeting a fixed (a+b1)-plane in dimension >= a,
    normalized by the volume of the ambient Grassmannian."""
    if min(a, a1, b, b1) < 0:
        raise ValueError("arguments must be nonnegative")
    num = _gr(a, b, q) * _gr(a, b1, q) * _gr(a1, b, q)
    den = _gr(a + a1, b, q) * _gr(b + b1, a, q)
    return num / den


def codimension_one_ratio(k: int, n: int, q: QLike) -> Fraction:
    """Relative volume of the k-planes in n-space meeting a fixed (n-k)-plane."""
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n-1")
    return schubert_volume_ratio(1, k - 1, 1, n - k - 1, q)


# ---------------------------------------------------------------------------
# Joint density of the position vector of a uniform subspace pair.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositionKey:
    """A value of the position vector: finite entries (nondecreasing) plus a
    count of entries that reached the working precision."""

    finite: tuple[int, ...]
    at_precision: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "finite", tuple(int(v) for v in self.finite))
        if any(v < 0 for v in self.finite):
            raise ValueError("entries must be nonnegative")
        if any(b < a for a, b in zip(self.finite, self.finite[1:])):
            raise ValueError("entries must be nondecreasing")

    @property
    def length(self) -> int:
        return len(self.finite) + self.at_precision

    def label(self) -> str:
        return ",".join([str(v) for v in self.finite] + [">=N"] * self.at_precision)


def density_constant(k: int, l: int, n: int, q: QLike) -> Fraction:
    """Normalizing constant gamma_k gamma_{n-k} gamma_l gamma_{n-l} /
    (gamma_{n-k-l} gamma_n) of the position-vector density."""
    if not (1 <= k <= l and k + l <= n):
        raise ValueError("need 1 <= k <= l and k + l <= n")
    return (
        gl_volume(k, q) * gl_volume(n - k, q) * gl_volume(l, q) * gl_volume(n - l, q)
        / (gl_volume(n - k - l, q) * gl_volume(n, q))
    )


def position_jacobian(x: PositionKey, k: int, l: int, n: int, q: QLike) -> Fraction:
    """Jacobian factor of the position parameterization at exponent list x.

    With x nondecreasing the factor is eps^((n+1-k-l) sum x_i) times
    eps^(2 min(x_i, x_j)) over pairs i < j; any at-precision entry makes the
    parameterization degenerate and the factor vanish.
    """
    if x.length != k:
        raise ValueError("exponent list must have length k")
    if x.at_precision:
        return Fraction(0)
    e = _eps(q)
    kk = len(x.finite)
    exp = (n + 1 - k - l) * sum(x.finite)
    exp += 2 * sum(x.finite[i] * (kk - 1 - i) for i in range(kk))
    return e**exp


def fiber_volume_factor(x: PositionKey, k: int, l: int, q: QLike) -> Fraction:
    """Ambient-independent factor of the fiber volume of the position
    parameterization: gamma_{nu + l - k} times a gamma for each multiplicity
    block of x, where nu counts zero entries."""
    if x.at_precision:
        raise ValueError("fiber factor requires finite entries")
    nu = sum(1 for v in x.finite if v == 0)
    out = gl_volume(nu + l - k, q)
    for mult in Counter(x.finite).values():
        out *= gl_volume(mult, q)
    return out


def position_density(x: PositionKey, k: int, l: int, n: int, q: QLike) -> Fraction:
    """Probability that independent uniform k- and l-planes in n-space have
    position vector x."""
    if x.length != k:
        raise ValueError("exponent list must have length k")
    if x.at_precision:
        return Fraction(0)
    c = density_constant(k, l, n, q)
    return c * position_jacobian(x, k, l, n, q) / fiber_volume_factor(x, k, l, q)


def _per_entry_weights(k: int, l: int, n: int) -> list[int]:
    """Valid per-entry geometric decay exponents of the density: entry i of a
    nondecreasing x appears with exponent at least w_i = (n+1-k-l) + 2 (k-1-i)."""
    base = n + 1 - k - l
    return [base + 2 * (k - 1 - i) for i in range(k)]


def _density_prefactor_bound(k: int, l: int, q: QLike) -> Fraction:
    """Upper bound for 1/F_{k,l}(x), uniform in x."""
    return 1 / (gl_volume(l, q) * gl_volume(k, q) ** k)


def density_tail_bound(k: int, l: int, n: int, q: QLike, truncation: int) -> Fraction:
    """Certified bound on the density mass of {x : max x_i > truncation}.

    Uses the geometric majorant density <= C prod eps^(w_i x_i) and a union
    bound over which coordinate exceeds the cut.
    """
    e = _eps(q)
    weights = _per_entry_weights(k, l, n)
    c = density_constant(k, l, n, q) * _density_prefactor_bound(k, l, q)
    full = [1 / (1 - e**w) for w in weights]
    tail = Fraction(0)
    for i, w in enumerate(weights):
        term = e ** (w * (truncation + 1)) / (1 - e**w)
        for j, f in enumerate(full):
            if j != i:
                term *= f
        tail += term
    return c * tail


def density_keys(k: int, truncation: int):
    """All nondecreasing exponent lists of length k with entries <= truncation."""
    for x in combinations_with_replacement(range(truncation + 1), k):
        yield PositionKey(finite=x)


def density_normalization(k: int, l: int, n: int, q: QLike, truncation: int):
    """Partial sum of the density up to the truncation and a certified tail
    bound; the exact total mass lies within [partial, partial + tail] and
    must straddle 1."""
    partial = sum(
        (position_density(x, k, l, n, q) for x in density_keys(k, truncation)), Fraction(0)
    )
    return partial, density_tail_bound(k, l, n, q, truncation)


def density_moment(k: int, l: int, n: int, n_ambient: int, q: QLike, truncation: int):
    """Truncated moment sum_x rho_{k,l,n}(x) eps^((N-n) sum x) against its
    closed form c_{k,l,n} / c_{k,l,N}; returns (lhs, rhs, tail_bound)."""
    if n_ambient < n:
        raise ValueError("ambient dimension must be at least n")
    e = _eps(q)
    lhs = Fraction(0)
    for x in density_keys(k, truncation):
        lhs += position_density(x, k, l, n, q) * e ** ((n_ambient - n) * sum(x.finite))
    rhs = density_constant(k, l, n, q) / density_constant(k, l, n_ambient, q)
    # the moment weight only sharpens the decay, so the plain tail is valid
    tail = density_tail_bound(k, l, n, q, truncation)
    return lhs, rhs, tail


# ---------------------------------------------------------------------------
# Average scaling factors and the expected-meeting-count closed form.
# ---------------------------------------------------------------------------


def line_scaling_factor(m: int, q: QLike) -> Fraction:
    """Average scaling factor for lines against m-space:
    the expected wedge norm of m uniform unit-sphere vectors in K^m."""
    if m < 1:
        raise ValueError("m must be positive")
    e = _eps(q)
    return (1 - e) / (1 - e ** (m + 1)) * ((1 - e ** (m + 1)) / (1 - e**m)) ** m


def expected_abs_det(n: int, q: QLike) -> Fraction:
    """Expected absolute determinant of an n x n matrix with uniform entries:
    (1 - eps) / (1 - eps^(n+1))."""
    if n < 1:
        raise ValueError("n must be positive")
    e = _eps(q)
    return (1 - e) / (1 - e ** (n + 1))


def expected_norm(n: int, q: QLike, power: int = 1) -> Fraction:
    """Expected max-norm (to the given power) of a uniform lattice vector in
    n coordinates: (1 - eps^n) / (1 - eps^(n+power))."""
    e = _eps(q)
    return (1 - e**n) / (1 - e ** (n + power))


def expected_meeting_count(k: int, n: int, q: QLike, scaling_factor):
    """Expected number of k-planes meeting k(n-k) independent uniform
    (n-k)-planes: scaling factor times the Grassmannian volume times the
    codimension-one Schubert ratio to the power k(n-k).

    `scaling_factor` may be an exact rational or a Monte Carlo estimate
    carrying `mean` and `stderr` attributes; the result has the same shape.
    """
    coeff = grassmannian_volume(k, n, q) * codimension_one_ratio(k, n, q) ** (k * (n - k))
    if hasattr(scaling_factor, "mean"):
        return scaling_factor.scaled(coeff)
    return coeff * Fraction(scaling_factor)


# ---------------------------------------------------------------------------
# Point-counting volume oracle.
# ---------------------------------------------------------------------------

_ENUMERATION_BUDGET = 10**7


def grassmannian_point_count_volume(k: int, n: int, p: int, depth: int) -> Fraction:
    """Volume of the Grassmannian by brute enumeration over Z/p^depth:
    the number of rank-k free row spans, divided by p^(depth k(n-k)).

    Agrees with the closed form exactly at every depth because the reduction
    map is a fibration with fibers of the expected size.
    """
    if not (1 <= k <= n) or depth < 1:
        raise ValueError("bad parameters")
    modulus = p**depth
    total = modulus ** (k * n)
    if total > _ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {total} matrices")
    seen: set[tuple[tuple[int, ...], ...]] = set()
    for flat in product(range(modulus), repeat=k * n):
        rows = [list(flat[i * n : (i + 1) * n]) for i in range(k)]
        canon = _canonical_module(rows, p, modulus)
        if canon is not None:
            seen.add(canon)
    return Fraction(len(seen), p ** (depth * k * (n - k)))


def projective_point_count_volume(n: int, p: int, depth: int) -> Fraction:
    """Volume of projective n-space by enumeration (lines in (n+1)-space)."""
    return grassmannian_point_count_volume(1, n + 1, p, depth)


def _canonical_module(rows: list[list[int]], p: int, modulus: int):
    """Canonical reduced form of a rank-k free submodule of (Z/p^d)^n, or
    None when the rows do not reduce to independent vectors mod p."""
    a = [r[:] for r in rows]
    k, n = len(a), len(a[0])
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, k) if a[i][c] % p), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, modulus)
        a[r] = [x * inv % modulus for x in a[r]]
        for i in range(k):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(a[i][j] - f * a[r][j]) % modulus for j in range(n)]
        r += 1
        if r == k:
            break
    if r < k:
        return None
    return tuple(tuple(row) for row in a)


def q_binomial_limit_check(n: int, k: int, delta: Fraction = Fraction(1, 10**9)) -> bool:
    """Gaussian binomial at q = 1 + delta approaches the ordinary binomial."""
    approx = q_binomial(n, k, 1 + delta)
    target = comb(n, k)
    return abs(approx - target) <= Fraction(10**-6 * target).limit_denominator() + Fraction(1, 10**6)
