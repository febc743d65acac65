"""Monte Carlo estimators and the exact four-lines solver.

Every sample value is an exact power of 1/p or an exact count, so means are
exact rationals.  Sample i of a run draws from the counter-based substream
keyed (seed, label, i): reruns with the same configuration produce identical
estimates for any worker count, and aggregation is a sum of exact rationals,
hence order independent.

Samples whose outcome is indeterminate at the working precision (vanishing
determinant residue, degenerate four-lines configuration, ...) are discarded
and counted; a run fails loudly when the discard rate exceeds the configured
bound, since a high rate would bias the estimate.
"""

from __future__ import annotations

import importlib
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from padicgeo.core import (
    PadicConfig,
    ResidueSource,
    _sphere_residues,
    substream,
)
from padicgeo.linalg import (
    RMatrix,
    _det_bareiss,
    _sample_gln_raw,
    _snf_raw,
    _val,
    kernel_saturated,
    smith_normal_form,
)
from padicgeo.subspaces import Subspace, position_vector, saturate
from padicgeo.volumes import PositionKey, position_density, density_tail_bound


class DiscardRateExceeded(RuntimeError):
    """Raised when indeterminate-at-precision samples are too frequent."""


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo run configuration.

    The default discard cap is 10 p^-(N-3), the empirical scale of
    precision-induced degeneracies.
    """

    padic: PadicConfig
    seed: int
    samples: int
    max_discard_rate: Fraction = field(default=None)  # type: ignore[assignment]
    threads: int = 1

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.max_discard_rate is None:
            cap = min(Fraction(1), 10 * Fraction(1, self.padic.p) ** (self.padic.precision - 3))
            object.__setattr__(self, "max_discard_rate", cap)
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo result: exact rational mean plus spread diagnostics."""

    mean: Fraction
    stderr: float
    samples_used: int
    discarded: int
    zero_at_precision: int = 0

    def scaled(self, coeff: Fraction) -> Estimate:
        coeff = Fraction(coeff)
        return Estimate(
            mean=self.mean * coeff,
            stderr=self.stderr * abs(float(coeff)),
            samples_used=self.samples_used,
            discarded=self.discarded,
            zero_at_precision=self.zero_at_precision,
        )


@dataclass(frozen=True)
class PositionHistogram:
    """Empirical distribution of position vectors against a fixed flag."""

    counts: dict
    samples: int
    k: int
    l: int
    n: int

    def frequency(self, key: PositionKey) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.samples)

    def total_variation_vs_model(self, q, truncation: int = 60) -> Fraction:
        """Conservative total-variation distance against the closed-form
        density: compares all keys seen or modeled up to the truncation and
        adds the certified model tail."""
        keys = set(self.counts)
        from padicgeo.volumes import density_keys

        keys.update(density_keys(self.k, truncation))
        tv = Fraction(0)
        for key in keys:
            model = (
                position_density(key, self.k, self.l, self.n, q)
                if key.at_precision == 0 and max(key.finite, default=0) <= truncation
                else Fraction(0)
            )
            tv += abs(self.frequency(key) - model)
        tv += density_tail_bound(self.k, self.l, self.n, q, truncation)
        return tv / 2


# ---------------------------------------------------------------------------
# Generic deterministic chunked runner.
# ---------------------------------------------------------------------------


def _resolve_kernel(path: str):
    module_name, func_name = path.rsplit(":", 1)
    return getattr(importlib.import_module(module_name), func_name)


def _chunk_worker(args):
    kernel_path, params, padic, seed, label, start, stop = args
    kernel = _resolve_kernel(kernel_path)
    total = Fraction(0)
    totalsq = Fraction(0)
    used = discarded = zeros = 0
    hist: Counter = Counter()
    for i in range(start, stop):
        gen = substream(seed, label, i)
        out = kernel(padic, params, gen)
        kind = out[0]
        if kind == "discard":
            discarded += 1
        elif kind == "zero":
            used += 1
            zeros += 1
        elif kind == "value":
            v = out[1]
            total += v
            totalsq += v * v
            used += 1
        elif kind == "key":
            hist[out[1]] += 1
            used += 1
        else:  # pragma: no cover - kernel contract violation
            raise RuntimeError(f"unknown kernel outcome {kind!r}")
    return total, totalsq, used, discarded, zeros, hist


def _run_chunks(kernel_path: str, params, cfg: MCConfig, label: int):
    n = cfg.samples
    chunks = []
    if cfg.threads > 1:
        step = max(256, -(-n // (cfg.threads * 8)))
    else:
        step = n
    for start in range(0, n, step):
        chunks.append((kernel_path, params, cfg.padic, cfg.seed, label, start, min(start + step, n)))
    if cfg.threads > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_chunk_worker, chunks))
    else:
        results = [_chunk_worker(c) for c in chunks]
    total = sum((r[0] for r in results), Fraction(0))
    totalsq = sum((r[1] for r in results), Fraction(0))
    used = sum(r[2] for r in results)
    discarded = sum(r[3] for r in results)
    zeros = sum(r[4] for r in results)
    hist: Counter = Counter()
    for r in results:
        hist.update(r[5])
    return total, totalsq, used, discarded, zeros, hist


def _finish_estimate(total, totalsq, used, discarded, zeros, cfg: MCConfig) -> Estimate:
    if used + discarded != cfg.samples:  # pragma: no cover - accounting guard
        raise RuntimeError("sample accounting mismatch")
    if Fraction(discarded, cfg.samples) > cfg.max_discard_rate:
        raise DiscardRateExceeded(
            f"{discarded}/{cfg.samples} samples were indeterminate at precision "
            f"(cap {cfg.max_discard_rate})"
        )
    if used == 0:
        raise DiscardRateExceeded("all samples were indeterminate at precision")
    mean = total / used
    if used > 1:
        var = (totalsq - total * total / used) / (used - 1)
        stderr = math.sqrt(float(var) / used) if var > 0 else 0.0
    else:
        stderr = 0.0
    return Estimate(mean=mean, stderr=stderr, samples_used=used,
                    discarded=discarded, zero_at_precision=zeros)


def run_value_estimate(kernel_path: str, params, cfg: MCConfig, label: int) -> Estimate:
    total, totalsq, used, discarded, zeros, _ = _run_chunks(kernel_path, params, cfg, label)
    return _finish_estimate(total, totalsq, used, discarded, zeros, cfg)


# stream labels keep estimator substreams disjoint under one seed
LABEL_SCALING = 1
LABEL_DET = 2
LABEL_POSITION = 3
LABEL_FOUR_LINES = 4
LABEL_FEWNOMIAL = 5
LABEL_HAAR = 6


# ---------------------------------------------------------------------------
# Scaling factor and determinant estimators.
# ---------------------------------------------------------------------------


def _scaling_kernel(padic: PadicConfig, params, gen):
    """One sample of the average scaling factor: the absolute determinant of
    the matrix whose columns are km flattened rank-one tensors of uniform
    unit-sphere vectors."""
    k, m = params
    n = k * m
    p, pN = padic.p, padic.modulus
    src = ResidueSource(gen, pN, batch=4 * n * (k + m))
    cols = []
    for _ in range(n):
        u = _sphere_residues(src, k, p)
        v = _sphere_residues(src, m, p)
        cols.append([u[i] * v[j] % pN for i in range(k) for j in range(m)])
    rows = [[cols[j][i] for j in range(n)] for i in range(n)]
    det = _det_bareiss(rows) % pN
    if det == 0:
        return ("discard",)
    return ("value", Fraction(1, p ** _val(det, p, padic.precision)))


def estimate_scaling_factor(k: int, m: int, cfg: MCConfig) -> Estimate:
    """Monte Carlo estimate of the average scaling factor alpha(k, m)."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    if k * m > 6:
        raise ValueError("determinant size budget is km <= 6")
    return run_value_estimate("padicgeo.montecarlo:_scaling_kernel", (k, m), cfg, LABEL_SCALING)


def _det_kernel(padic: PadicConfig, params, gen):
    (n,) = params
    pN = padic.modulus
    src = ResidueSource(gen, pN, batch=n * n)
    rows = [src.take_vector(n) for _ in range(n)]
    det = _det_bareiss(rows) % pN
    if det == 0:
        # true |det| <= p^-N: counted in the zero bucket, contributes 0
        return ("zero",)
    return ("value", Fraction(1, padic.p ** _val(det, padic.p, padic.precision)))


def estimate_expected_abs_det(n: int, cfg: MCConfig) -> Estimate:
    """Mean absolute determinant of matrices with uniform lattice entries."""
    if not 1 <= n <= 8:
        raise ValueError("n budget is 1..8")
    return run_value_estimate("padicgeo.montecarlo:_det_kernel", (n,), cfg, LABEL_DET)


def _norm_kernel(padic: PadicConfig, params, gen):
    """Max-norm of a uniform lattice vector (for the Haar statistics suite)."""
    (n,) = params
    src = ResidueSource(gen, padic.modulus, batch=max(n, 8))
    vec = src.take_vector(n)
    v = min(_val(x, padic.p, padic.precision) for x in vec)
    if v >= padic.precision:
        return ("zero",)
    return ("value", Fraction(1, padic.p**v))


def estimate_expected_norm(n: int, cfg: MCConfig) -> Estimate:
    return run_value_estimate("padicgeo.montecarlo:_norm_kernel", (n,), cfg, LABEL_HAAR)


# ---------------------------------------------------------------------------
# Position-vector histogram.
# ---------------------------------------------------------------------------


def _position_kernel(padic: PadicConfig, params, gen):
    k, l, n = params
    p, N = padic.p, padic.precision
    src = ResidueSource(gen, padic.modulus, batch=3 * n * n)
    g = _sample_gln_raw(padic, n, src)
    rows = [g[i][:k] + [1 if i == j else 0 for j in range(l)] for i in range(n)]
    _, _, raw = _snf_raw(rows, p, N)
    if any(v != 0 for v in raw[:l]):  # pragma: no cover - saturation guarantee
        return ("discard",)
    tail = raw[l:]
    finite = tuple(v for v in tail if v < N)
    return ("key", PositionKey(finite=finite, at_precision=len(tail) - len(finite)))


def empirical_position_histogram(k: int, l: int, n: int, cfg: MCConfig) -> PositionHistogram:
    """Histogram of the position vector of a uniform k-plane against the
    fixed coordinate l-plane; at-precision entries are bucketed separately."""
    if not (1 <= k <= l and k + l <= n):
        raise ValueError("need 1 <= k <= l and k + l <= n")
    total, totalsq, used, discarded, zeros, hist = _run_chunks(
        "padicgeo.montecarlo:_position_kernel", (k, l, n), cfg, LABEL_POSITION
    )
    if Fraction(discarded, cfg.samples) > cfg.max_discard_rate:
        raise DiscardRateExceeded(f"{discarded}/{cfg.samples} degenerate samples")
    return PositionHistogram(counts=dict(hist), samples=used, k=k, l=l, n=n)


# ---------------------------------------------------------------------------
# The four-lines problem in projective three-space.
# ---------------------------------------------------------------------------

_PLUCKER_INDEX = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _plucker(cols: list[list[int]], pN: int) -> list[int]:
    """Plucker coordinates of the span of two columns (entries mod p^N)."""
    u, v = cols
    return [(u[a] * v[b] - u[b] * v[a]) % pN for a, b in _PLUCKER_INDEX]


def _meeting_form_row(w: list[int], pN: int) -> list[int]:
    """Coefficients of the pairing <., w> expressing that two lines meet."""
    p12, p13, p14, p23, p24, p34 = w
    return [p34 % pN, (-p24) % pN, p23 % pN, p14 % pN, (-p13) % pN, p12 % pN]


def _quadric(w: list[int], pN: int) -> int:
    return (w[0] * w[5] - w[1] * w[4] + w[2] * w[3]) % pN


def _wedge_matrix(w: list[int], pN: int) -> list[list[int]]:
    """Matrix of x -> x ^ w from K^4 to the third exterior power; its kernel
    is the plane with Plucker vector w when w is decomposable."""
    p12, p13, p14, p23, p24, p34 = w
    return [
        [p23, (-p13) % pN, p12, 0],
        [p24, (-p14) % pN, 0, p12],
        [p34, 0, (-p14) % pN, p13],
        [0, p34, (-p24) % pN, p23],
    ]


class _Inconclusive(Exception):
    pass


def _newton_refine_quadratic(c0: int, c1: int, c2: int, u: int, p: int, W: int) -> int:
    """Refine a simple root (unit derivative) of c2 x^2 + c1 x + c0 to
    residual exactly zero modulo p^W."""
    pW = p**W
    for _ in range(W + 2):
        f = (c2 * u * u + c1 * u + c0) % pW
        if f == 0:
            return u
        d = (2 * c2 * u + c1) % pW
        u = (u - f * pow(d, -1, pW)) % pW
    raise _Inconclusive("Newton refinement failed to converge")


def _quadratic_roots_in_R(c0: int, c1: int, c2: int, p: int, W: int, depth: int = 0) -> list[int]:
    """All roots in the valuation ring of c2 x^2 + c1 x + c0, coefficients
    known modulo p^W, each returned with residual exactly 0 mod p^W.

    Raises _Inconclusive when the working precision is too small to certify.
    """
    if W < 3 or depth > 64:
        raise _Inconclusive("precision exhausted in quadratic root recovery")
    pW = p**W
    c0, c1, c2 = c0 % pW, c1 % pW, c2 % pW
    roots: list[int] = []
    for y in range(p):
        if (c2 * y * y + c1 * y + c0) % p != 0:
            continue
        d = (2 * c2 * y + c1) % p
        if d != 0:
            roots.append(_newton_refine_quadratic(c0, c1, c2, y, p, W))
            continue
        # shift x = y + p z and strip the content
        g0 = (c2 * y * y + c1 * y + c0) % pW
        g1 = ((2 * c2 * y + c1) * p) % pW
        g2 = (c2 * p * p) % pW
        vals = [v for v in (_val(g0, p, W), _val(g1, p, W), _val(g2, p, W))]
        content = min(vals)
        if content >= W:
            raise _Inconclusive("quadratic vanishes at precision along a branch")
        shift = p**content
        sub = _quadratic_roots_in_R(g0 // shift, g1 // shift, g2 // shift, p, W - content, depth + 1)
        roots.extend((y + p * z) % pW for z in sub)
    return roots


def _binary_quadratic_roots(a: int, b: int, c: int, p: int, N: int) -> list[tuple[int, int]]:
    """Primitive projective roots (s, t) of a s^2 + b s t + c t^2 modulo p^N,
    each with residual exactly zero at precision."""
    pN = p**N
    roots = [(u % pN, 1) for u in _quadratic_roots_in_R(c, b, a, p, N)]
    for v in _quadratic_roots_in_R(a, b, c, p, N):
        if v % p == 0:
            roots.append((1, v % pN))
    return roots


def _subspace_from_basis_rows(padic: PadicConfig, rows: list[list[int]]) -> Subspace:
    return saturate(RMatrix.from_rows(padic, rows))


@dataclass(frozen=True)
class FourLinesOutcome:
    """Either an exact solution count with verified solution lines, or a
    degenerate configuration (rank defect or indeterminate discriminant)."""

    count: int | None
    solutions: tuple[Subspace, ...] = ()
    degenerate_reason: str | None = None

    @property
    def is_degenerate(self) -> bool:
        return self.count is None


def _four_lines_raw(padic: PadicConfig, bases: list[list[list[int]]]):
    """Core of the four-lines solver on raw column data.

    Returns ("count", c, plucker_solutions) or ("degenerate", reason).
    """
    p, N, pN = padic.p, padic.precision, padic.modulus
    omegas = [_plucker(cols, pN) for cols in bases]
    cond = [_meeting_form_row(w, pN) for w in omegas]
    s_mat, t_mat, raw = _snf_raw(cond, p, N)
    if any(v >= N for v in raw):
        return ("degenerate", "meeting conditions are rank deficient at precision")
    w0 = [t_mat[i][4] for i in range(6)]
    w1 = [t_mat[i][5] for i in range(6)]
    qa = _quadric(w0, pN)
    qc = _quadric(w1, pN)
    qsum = _quadric([(x + y) % pN for x, y in zip(w0, w1)], pN)
    qb = (qsum - qa - qc) % pN
    disc = (qb * qb - 4 * qa * qc) % pN
    if disc == 0:
        return ("degenerate", "discriminant vanishes at precision")
    v = _val(disc, p, N)
    if v % 2 == 1:
        return ("count", 0, [])
    unit = disc // p**v
    if p == 2:
        if N - v < 3:
            return ("degenerate", "discriminant square test indeterminate at precision")
        if unit % 8 != 1:
            return ("count", 0, [])
    else:
        if pow(unit % p, (p - 1) // 2, p) != 1:
            return ("count", 0, [])
    try:
        sols = _binary_quadratic_roots(qa, qb, qc, p, N)
    except _Inconclusive as exc:
        return ("degenerate", f"root recovery: {exc}")
    if len(sols) != 2:
        return ("degenerate", "root recovery did not produce two distinct lines")
    (s0, t0), (s1, t1) = sols
    if (s0 * t1 - s1 * t0) % pN == 0:
        return ("degenerate", "recovered roots collide at precision")
    planes = []
    for s, t in sols:
        w = [(s * w0[i] + t * w1[i]) % pN for i in range(6)]
        planes.append(w)
    return ("count", 2, planes)


def _verify_solution_plane(padic: PadicConfig, w: list[int], line_bases: list[list[list[int]]]):
    """Reconstruct the plane of a decomposable Plucker vector and check that
    it meets every given line: the pair must share a direction at precision.

    Returns the verified Subspace or None.
    """
    p, N, pN = padic.p, padic.precision, padic.modulus
    mat = _wedge_matrix(w, pN)
    _, t_mat, raw = _snf_raw(mat, p, N)
    finite = [v for v in raw if v < N]
    if finite != [0, 0]:
        return None
    basis_rows = [[t_mat[i][2], t_mat[i][3]] for i in range(4)]
    for cols in line_bases:
        concat = [basis_rows[i] + [cols[0][i], cols[1][i]] for i in range(4)]
        _, _, exps = _snf_raw(concat, p, N)
        if exps[0] != 0 or exps[1] != 0 or exps[3] < N:
            return None
    return _subspace_from_basis_rows(padic, basis_rows)


def solve_four_lines(l1: Subspace, l2: Subspace, l3: Subspace, l4: Subspace) -> FourLinesOutcome:
    """Count the lines of projective three-space meeting four given lines.

    The four meeting conditions are linear on the Plucker quadric; a
    nondegenerate configuration leaves a pencil, and the count is decided by
    the squareness of the discriminant of the quadric restricted to the
    pencil.  Every reported solution is reconstructed and verified to meet
    all four input lines at working precision; any ambiguity at precision is
    reported as degenerate rather than guessed.
    """
    lines = (l1, l2, l3, l4)
    padic = l1.config
    for line in lines:
        if line.ambient != 4 or line.dim != 2:
            raise ValueError("inputs must be 2-dimensional subspaces of 4-space")
        if line.config != padic:
            raise ValueError("config mismatch")
    bases = [
        [[line.basis.entries[i][j] for i in range(4)] for j in range(2)] for line in lines
    ]
    out = _four_lines_raw(padic, bases)
    if out[0] == "degenerate":
        return FourLinesOutcome(count=None, degenerate_reason=out[1])
    count, planes = out[1], out[2]
    solutions = []
    for w in planes:
        plane = _verify_solution_plane(padic, w, bases)
        if plane is None:
            return FourLinesOutcome(count=None, degenerate_reason="solution verification failed")
        solutions.append(plane)
    if count == 2 and solutions[0] == solutions[1]:
        return FourLinesOutcome(count=None, degenerate_reason="solutions collide at precision")
    return FourLinesOutcome(count=count, solutions=tuple(solutions))


def _four_lines_kernel(padic: PadicConfig, params, gen):
    src = ResidueSource(gen, padic.modulus, batch=16 * 16)
    bases = []
    for _ in range(4):
        g = _sample_gln_raw(padic, 4, src)
        bases.append([[g[i][0] for i in range(4)], [g[i][1] for i in range(4)]])
    out = _four_lines_raw(padic, bases)
    if out[0] == "degenerate":
        return ("discard",)
    count, planes = out[1], out[2]
    for w in planes:
        if _verify_solution_plane(padic, w, bases) is None:
            return ("discard",)
    return ("value", Fraction(count))


def estimate_four_lines_expectation(cfg: MCConfig) -> Estimate:
    """Expected number of lines meeting four independent uniform lines.

    Each sample solves one random configuration exactly; degenerate
    configurations (measure zero, inflated to measure <= p^-(N-3) by the
    precision cutoff) are discarded and tallied.
    """
    return run_value_estimate("padicgeo.montecarlo:_four_lines_kernel", (), cfg, LABEL_FOUR_LINES)


def estimates_agree(a: Estimate, b: Estimate, sigmas: float = 3.0) -> bool:
    """Two-estimate consistency check at the given combined-sigma level."""
    gap = abs(float(a.mean - b.mean))
    width = math.hypot(a.stderr, b.stderr)
    return gap <= sigmas * max(width, 1e-300)
