"""Numeric machinery: root isolation, multistart 4-D solving, alpha scans.

The solving strategy is deliberately unsophisticated. Stable boundary
laws are found by damped fixed-point iteration from a deterministic
seed grid; unstable ones (which the iteration repels) are recovered by
running a batched Newton method on h - W(h) from both the raw seeds
and the iterated points. Everything returned is re-verified against
the residual, deduplicated in max-norm, and closed under the two exact
symmetries (negation and class swap) so downstream counting never
depends on which basin a seed happened to fall into.

Scans over the coupling reuse the closed-form counters from the
reduction module where they apply (balanced a_size = k, and the
single-index a_size = 1 antisymmetric chain); count transitions are
localized by bisection on alpha, splitting the bracket whenever the
midpoint count matches neither endpoint so short-lived intermediate
regimes (the tangency windows) are still resolved.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ising_field import (
    FieldQuad,
    ModelParams,
    SolutionRecord,
    f_field,
    theta_from_alpha,
    w_components,
)
from .reduction import (
    DEFAULT_TANGENCY_TOL,
    _roots_with_tangency,
    count_I3_solutions,
    lift_phi_fixed_point,
    phi,
)

__all__ = [
    "isolate_and_refine",
    "SolveResult",
    "solve_full_system",
    "Transition",
    "ScanReport",
    "scan_alpha",
    "PhiCrossings",
    "count_phi_crossings",
]

# Dip tolerance for the a_size = 1 antisymmetric counter; same role as
# the tangency tolerance of the polynomial counter, tuned so the
# three-solution window around its saddle-node is about 1.5e-3 wide.
A1_TANGENCY_TOL = 2e-3

_DEDUP_TOL = 1e-6


# ---------------------------------------------------------------------------
# scalar root isolation


def isolate_and_refine(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    grid_n: int = 10_000,
    tol: float = 1e-12,
    derivative: Callable[[float], float] | None = None,
) -> list[float]:
    """All simple roots of fn on [lo, hi] visible at grid resolution.

    Sign changes between consecutive grid nodes are refined by
    bisection to bracket width tol, then polished with one Newton step
    when a derivative is supplied (kept only if it does not escape the
    bracket neighborhood). Exact zeros at grid nodes count as roots.
    Roots closer than tol are merged. A root pair hiding between two
    nodes without a sign change is invisible; pick grid_n accordingly.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")
    xs = np.linspace(lo, hi, grid_n)
    try:
        vals = np.asarray(fn(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(fn(x)) for x in xs])
    if np.any(np.isnan(vals)):
        bad = xs[np.isnan(vals)][0]
        raise ValueError(f"fn returned NaN at x={bad}")

    roots = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    for i in range(len(xs) - 1):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 or fb == 0.0:
            continue
        if (fa < 0.0) != (fb < 0.0):
            a, b = float(xs[i]), float(xs[i + 1])
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = float(fn(mid))
                if fm == 0.0:
                    a = b = mid
                    break
                if (fm < 0.0) == (fa < 0.0):
                    a, fa = mid, fm
                else:
                    b = mid
            root = 0.5 * (a + b)
            if derivative is not None:
                d = float(derivative(root))
                if d != 0.0:
                    polished = root - float(fn(root)) / d
                    if abs(polished - root) <= max(10 * tol, 1e-9 * abs(root)):
                        root = polished
            roots.append(root)

    roots.sort()
    merged: list[float] = []
    for r in roots:
        if not merged or r - merged[-1] > tol:
            merged.append(r)
    return merged


# ---------------------------------------------------------------------------
# multistart solver for the full 4-component system

_HALTON_BASES = (2, 3, 5, 7)


def _halton(n: int) -> np.ndarray:
    """First n points of the 4-D Halton sequence, in [0, 1)^4."""
    out = np.empty((n, 4))
    for j, base in enumerate(_HALTON_BASES):
        for i in range(n):
            f, x, idx = 1.0, 0.0, i + 1
            while idx > 0:
                f /= base
                x += f * (idx % base)
                idx //= base
            out[i, j] = x
    return out


def _seed_grid(box: float, n_random: int = 200) -> np.ndarray:
    """Deterministic multistart seeds inside [-box, box]^4.

    A 7-level axis {-1, -1/3, -0.1, 0, 0.1, 1/3, 1} * box is laid over
    each invariant subspace (all-equal, symmetric pair, antisymmetric
    pair), since that is where most solutions live, plus n_random
    Halton points in general position to catch anything else.
    """
    levels = np.array([-1.0, -1.0 / 3.0, -0.1, 0.0, 0.1, 1.0 / 3.0, 1.0]) * box
    seeds = [np.array([[a, a, a, a] for a in levels])]
    seeds.append(np.array([[a, b, b, a] for a in levels for b in levels]))
    seeds.append(np.array([[a, b, -b, -a] for a in levels for b in levels]))
    seeds.append((2.0 * _halton(n_random) - 1.0) * box)
    grid = np.concatenate(seeds, axis=0)
    return np.unique(np.round(grid, 12), axis=0)


def default_seed_box(k: int, alpha: float) -> float:
    """Box half-width covering every reachable fixed point.

    Each component of a fixed point is a sum of at most k kernel values,
    each bounded by |artanh(theta)| = |ln(alpha)|/2, so |h_i| never
    exceeds (k/2)|ln alpha|. The floor of 3 keeps the classic grid for
    mild couplings.
    """
    return max(3.0, 0.5 * k * abs(math.log(alpha)) + 0.5)


def _residual_batch(H: np.ndarray, k: int, a_size: int, theta: float) -> np.ndarray:
    return H - w_components(H, k, a_size, theta)


def _newton_refine(
    H: np.ndarray, k: int, a_size: int, theta: float, iters: int = 60, fd_step: float = 1e-7
) -> np.ndarray:
    """Batched Newton on h - W(h) with finite-difference Jacobians.

    Rows iterate independently. Singular or non-finite Jacobians get a
    zero step that round; steps are clipped to max-norm 2 so a bad
    Jacobian far from any solution cannot fling the iterate away, and
    iterates are kept inside |h| <= 80 where the kernel is already flat
    to machine precision.
    """
    H = np.array(H, dtype=float)
    for _ in range(iters):
        R = _residual_batch(H, k, a_size, theta)
        J = np.empty(H.shape[:1] + (4, 4))
        for j in range(4):
            Hp = H.copy()
            Hp[:, j] += fd_step
            Hm = H.copy()
            Hm[:, j] -= fd_step
            J[:, :, j] = (
                _residual_batch(Hp, k, a_size, theta)
                - _residual_batch(Hm, k, a_size, theta)
            ) / (2.0 * fd_step)
        det = np.linalg.det(J)
        bad = ~np.isfinite(det) | (np.abs(det) < 1e-14)
        if np.any(bad):
            J[bad] = np.eye(4)
        step = np.linalg.solve(J, R[..., None])[..., 0]
        step[bad] = 0.0
        step = np.where(np.isfinite(step), step, 0.0)
        norms = np.max(np.abs(step), axis=1, keepdims=True)
        step *= np.minimum(1.0, 2.0 / np.maximum(norms, 1e-300))
        H = np.clip(H - step, -80.0, 80.0)
    return H


@dataclass(frozen=True)
class SolveResult:
    """Deduplicated solutions plus bookkeeping from the multistart run."""

    records: tuple[SolutionRecord, ...]
    dropped_starts: int
    n_starts: int

    def __len__(self) -> int:
        return len(self.records)

    def filtered(self, restrict: str) -> tuple[SolutionRecord, ...]:
        """Records lying in one invariant set: I1 | I2 | I3 | full."""
        if restrict == "full":
            return self.records
        key = {"I1": "in_i1", "I2": "in_i2", "I3": "in_i3"}.get(restrict)
        if key is None:
            raise ValueError(f"unknown restriction {restrict!r}")
        return tuple(r for r in self.records if getattr(r.flags, key))


def _dedup_rows(H: np.ndarray, tol: float) -> np.ndarray:
    """Greedy max-norm dedup after canonical lexicographic ordering.

    A coarse np.unique on rounded rows collapses the bulk first; rows
    split across a rounding boundary stay within tol of each other and
    are caught by the exact greedy pass.
    """
    if H.size == 0:
        return H
    _, first = np.unique(np.round(H, 8), axis=0, return_index=True)
    H = H[np.sort(first)]  # one full-precision representative per bucket
    order = np.lexsort((H[:, 3], H[:, 2], H[:, 1], H[:, 0]))
    H = H[order]
    kept: list[np.ndarray] = []
    for row in H:
        if all(np.max(np.abs(row - k_)) > tol for k_ in kept):
            kept.append(row)
    return np.array(kept)


def solve_full_system(
    params: ModelParams,
    tol: float = 1e-10,
    seed_box: float | None = None,
    seeds: np.ndarray | None = None,
    damping: float = 0.5,
    damp_iters: int = 120,
    newton_iters: int = 60,
    dedup_tol: float = _DEDUP_TOL,
    class_tol: float = 1e-8,
) -> SolveResult:
    """Find the fixed points of W by damped iteration plus Newton.

    The damped pass pulls seeds into the attracting solutions; Newton is
    then run from the union of raw and iterated seeds, which is what
    recovers the repelling ones. Only points with residual below tol
    survive. The result is deduplicated (max-norm, dedup_tol), closed
    under h -> -h and the class swap (h4,h3,h2,h1) - both exact
    symmetries of W - and the closure is verified, not assumed. Rows
    are ordered lexicographically, so output is fully deterministic.

    The flat solution h = 0 is always present: it is a seed and an
    exact fixed point.
    """
    k, a_size, theta = params.k, params.a_size, params.theta
    if seeds is None:
        box = seed_box if seed_box is not None else default_seed_box(k, params.alpha)
        seeds = _seed_grid(box)
    seeds = np.asarray(seeds, dtype=float)
    if seeds.ndim != 2 or seeds.shape[1] != 4:
        raise ValueError(f"seeds must have shape (n, 4), got {seeds.shape}")

    H = seeds.copy()
    for _ in range(damp_iters):
        H = (1.0 - damping) * H + damping * w_components(H, k, a_size, theta)
        H = np.clip(H, -80.0, 80.0)
    candidates = np.concatenate([seeds, H], axis=0)
    refined = _newton_refine(candidates, k, a_size, theta, iters=newton_iters)

    res = np.max(np.abs(_residual_batch(refined, k, a_size, theta)), axis=1)
    good = refined[np.isfinite(res) & (res < tol)]
    dropped = refined.shape[0] - good.shape[0]
    solutions = _dedup_rows(good, dedup_tol)

    # close under the exact symmetries, then verify closure holds
    orbit = np.concatenate(
        [solutions, -solutions, solutions[:, ::-1], -solutions[:, ::-1]], axis=0
    )
    solutions = _dedup_rows(orbit, dedup_tol)
    for row in solutions:
        for mate in (-row, row[::-1], -row[::-1]):
            if not np.any(np.max(np.abs(solutions - mate), axis=1) <= dedup_tol):
                raise RuntimeError("symmetry closure failed; dedup tolerance too tight")

    records = tuple(
        SolutionRecord.from_h(params, FieldQuad.from_array(row), "full-4d", class_tol)
        for row in solutions
    )
    for r in records:
        if not r.residual < tol:
            raise RuntimeError(f"accepted point fails re-verification: {r.residual}")
    return SolveResult(records=records, dropped_starts=dropped, n_starts=seeds.shape[0])


# ---------------------------------------------------------------------------
# exact antisymmetric counter for a_size = 1


def _a1_antisym_residual(h, k: int, theta: float):
    """Scalar residual of the antisymmetric chain for a_size = 1.

    On h1 = -h4, h2 = -h3 the four equations collapse to
    h2 = k f(h1) and h1 = (k-1) f(h1) - f(k f(h1)); this is the latter
    as G(h1) = 0.
    """
    fh = f_field(h, theta)
    return (k - 1) * fh - f_field(k * fh, theta) - h


def _count_antisym_single(
    k: int,
    alpha: float,
    tangency_tol: float = A1_TANGENCY_TOL,
    grid_n: int = 4001,
) -> tuple[int, bool, list[float]]:
    """Count antisymmetric solutions for a_size = 1 via the scalar chain.

    Roots of G come in +/- pairs around the always-present zero, so the
    count is 1 + 2 * (positive roots). Stationary points are located
    from a uniform grid over the reachable interval (|h1| is bounded by
    k |artanh theta|) and polished by ternary search; a stationary
    value within tangency_tol of zero is the saddle-node window and is
    counted as one collapsed root.

    Returns (count, tangent, positive_roots).
    """
    theta = theta_from_alpha(alpha)
    if theta == 0.0:
        return 1, False, []
    bound = k * abs(math.atanh(theta)) + 1.0
    lo = 1e-9 * bound

    def G(h: float) -> float:
        return float(_a1_antisym_residual(h, k, theta))

    hs = np.linspace(0.0, bound, grid_n)[1:]
    vals = _a1_antisym_residual(hs, k, theta)
    interior = np.nonzero(
        ((vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:]))
        | ((vals[1:-1] < vals[:-2]) & (vals[1:-1] <= vals[2:]))
    )[0]
    stationary = []
    for idx in interior:
        a, b = float(hs[idx]), float(hs[idx + 2])
        is_max = vals[idx + 1] > vals[idx]
        for _ in range(80):  # ternary search
            m1 = a + (b - a) / 3.0
            m2 = b - (b - a) / 3.0
            if (G(m1) < G(m2)) == is_max:
                a = m1
            else:
                b = m2
        stationary.append(0.5 * (a + b))

    simple, tangent = _roots_with_tangency(G, lo, bound, stationary, tangency_tol)
    roots = sorted(simple + tangent)
    return 1 + 2 * len(roots), bool(tangent), roots


# ---------------------------------------------------------------------------
# alpha scans


@dataclass(frozen=True)
class Transition:
    """A localized change of the solution count along the alpha axis."""

    alpha_lo: float
    alpha_hi: float
    count_before: int
    count_after: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.alpha_lo + self.alpha_hi)

    def as_dict(self) -> dict:
        return {
            "alpha_lo": self.alpha_lo,
            "alpha_hi": self.alpha_hi,
            "count_before": self.count_before,
            "count_after": self.count_after,
        }


@dataclass(frozen=True)
class ScanReport:
    """Counts, solutions, and localized transitions over an alpha grid."""

    k: int
    a_size: int
    restrict: str
    alphas: tuple[float, ...]
    counts: tuple[int, ...]
    records: tuple[tuple[SolutionRecord, ...], ...]
    transitions: tuple[Transition, ...]
    diagnostics: dict = field(compare=False)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "a_size": self.a_size,
            "restrict": self.restrict,
            "alphas": list(self.alphas),
            "counts": list(self.counts),
            "transitions": [t.as_dict() for t in self.transitions],
            "diagnostics": self.diagnostics,
        }


def _exact_counter(
    k: int, a_size: int, restrict: str, tangency_tol: float | None
) -> tuple[Callable[[float], int], Callable[[float], bool]] | None:
    """Closed-form count on the antisymmetric set, where one exists.

    Returns (counter, applicable) or None. The balanced chain's root
    pairing argument needs alpha > 1, so its applicability is limited;
    callers fall back to the multistart count elsewhere.
    """
    if restrict != "I3":
        return None
    if a_size == k:
        tt = DEFAULT_TANGENCY_TOL if tangency_tol is None else tangency_tol
        return (
            lambda alpha: count_I3_solutions(k, alpha, tangency_tol=tt).count,
            lambda alpha: alpha > 1.0,
        )
    if a_size == 1:
        tt = A1_TANGENCY_TOL if tangency_tol is None else tangency_tol
        return (
            lambda alpha: _count_antisym_single(k, alpha, tangency_tol=tt)[0],
            lambda alpha: True,
        )
    return None


def _scan_point(args: tuple) -> tuple[int, tuple[SolutionRecord, ...], int]:
    idx, k, a_size, alpha, tol, restrict = args
    result = solve_full_system(ModelParams(k=k, a_size=a_size, alpha=alpha), tol=tol)
    return idx, result.filtered(restrict), result.dropped_starts


def scan_alpha(
    k: int,
    a_size: int,
    alpha_lo: float,
    alpha_hi: float,
    steps: int,
    tol: float = 1e-10,
    restrict: str = "full",
    bifurcation_tol: float = 1e-3,
    tangency_tol: float | None = None,
    jobs: int = 1,
) -> ScanReport:
    """Solve along a uniform alpha grid and localize count transitions.

    Counts come from the closed-form antisymmetric counters when the
    restriction admits one (restrict="I3" with a_size in {1, k}), and
    from the filtered multistart solve otherwise; when both paths run,
    disagreements are recorded in diagnostics["count_mismatches"]
    rather than silently preferred. Each change of count between grid
    neighbors is narrowed by bisection to bifurcation_tol; if a
    midpoint count matches neither endpoint, the bracket splits so a
    short intermediate regime yields its own pair of transitions.

    jobs > 1 distributes grid points over processes; results are merged
    by grid index, so the report is identical for any worker count.
    """
    if not 0.0 < alpha_lo < alpha_hi:
        raise ValueError(f"need 0 < alpha_lo < alpha_hi, got [{alpha_lo}, {alpha_hi}]")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    if restrict not in ("full", "I1", "I2", "I3"):
        raise ValueError(f"unknown restriction {restrict!r}")

    alphas = np.linspace(alpha_lo, alpha_hi, steps)
    per_point: list[tuple[SolutionRecord, ...]] = [()] * steps
    drops = [0] * steps
    tasks = [(i, k, a_size, float(a), tol, restrict) for i, a in enumerate(alphas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, recs, dropped in pool.map(_scan_point, tasks):
                per_point[idx] = recs
                drops[idx] = dropped
    else:
        for task in tasks:
            idx, recs, dropped = _scan_point(task)
            per_point[idx] = recs
            drops[idx] = dropped

    solver_counts = [len(recs) for recs in per_point]

    def _solver_count(alpha: float) -> int:
        result = solve_full_system(ModelParams(k=k, a_size=a_size, alpha=alpha), tol=tol)
        return len(result.filtered(restrict))

    exact = _exact_counter(k, a_size, restrict, tangency_tol)
    mismatches = []
    if exact is not None:
        exact_fn, applicable = exact
        counts = []
        for a, sc in zip(alphas, solver_counts):
            if applicable(float(a)):
                ec = exact_fn(float(a))
                if ec != sc:
                    mismatches.append({"alpha": float(a), "solver": sc, "exact": ec})
                counts.append(ec)
            else:
                counts.append(sc)

        def counter(alpha: float) -> int:
            return exact_fn(alpha) if applicable(alpha) else _solver_count(alpha)

    else:
        counts = list(solver_counts)
        counter = _solver_count

    transitions: list[Transition] = []
    refine_evals = 0
    stack = [
        (float(alphas[i]), counts[i], float(alphas[i + 1]), counts[i + 1])
        for i in range(steps - 1)
        if counts[i] != counts[i + 1]
    ]
    while stack:
        lo, clo, hi, chi = stack.pop()
        if clo == chi:
            continue
        if hi - lo <= bifurcation_tol:
            transitions.append(Transition(lo, hi, clo, chi))
            continue
        mid = 0.5 * (lo + hi)
        cmid = counter(mid)
        refine_evals += 1
        if cmid == clo:
            stack.append((mid, cmid, hi, chi))
        elif cmid == chi:
            stack.append((lo, clo, mid, cmid))
        else:
            stack.append((lo, clo, mid, cmid))
            stack.append((mid, cmid, hi, chi))
    transitions.sort(key=lambda t: t.alpha_lo)

    diagnostics = {
        "counter": "closed-form" if exact is not None else "multistart",
        "count_mismatches": mismatches,
        "refinement_evaluations": refine_evals,
        "dropped_starts": int(sum(drops)),
        "tolerances": {
            "solver": tol,
            "bifurcation": bifurcation_tol,
            "dedup": _DEDUP_TOL,
        },
    }
    return ScanReport(
        k=k,
        a_size=a_size,
        restrict=restrict,
        alphas=tuple(float(a) for a in alphas),
        counts=tuple(counts),
        records=tuple(per_point),
        transitions=tuple(transitions),
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# crossings of the composite scalar map


@dataclass(frozen=True)
class PhiCrossings:
    """Crossing points of y = phi(x) with y = x, plus their lifts."""

    k: int
    alpha: float
    count: int
    crossings: tuple[float, ...]
    records: tuple[SolutionRecord, ...]
    x_lo: float
    x_hi: float
    grid_n: int


def count_phi_crossings(
    k: int,
    alpha: float,
    x_lo: float | None = None,
    x_hi: float | None = None,
    grid_n: int = 8192,
    refine_tol: float = 1e-13,
    class_tol: float = 1e-8,
) -> PhiCrossings:
    """Count solutions of phi(x) = x on a log-spaced grid.

    phi maps everything into (alpha^-k, alpha^k) (k kernel factors each
    bounded by alpha), so crossings cannot lie outside that interval;
    the default search range alpha^k + 1 down to its reciprocal covers
    it with margin. x = 1 is placed on the grid explicitly since it is
    always a crossing, bit-exactly. Sign changes between adjacent
    nonzero grid values are bisected in log-x; exact grid zeros count
    as crossings on their own (a sign flip across one is the same
    crossing, not a second one). Each crossing is lifted through the
    substitution chain to a four-component record and polished by the
    4-D Newton.
    """
    if x_hi is None:
        x_hi = float(alpha) ** k + 1.0
    if x_lo is None:
        x_lo = 1.0 / x_hi
    if not 0.0 < x_lo < 1.0 < x_hi:
        raise ValueError(f"need 0 < x_lo < 1 < x_hi, got [{x_lo}, {x_hi}]")
    if grid_n < 16:
        raise ValueError(f"grid_n must be >= 16, got {grid_n}")

    xs = np.unique(np.append(np.geomspace(x_lo, x_hi, grid_n), 1.0))
    d = phi(xs, k, alpha) - xs

    crossings = [float(x) for x, v in zip(xs, d) if v == 0.0]
    for i in range(len(xs) - 1):
        fa, fb = d[i], d[i + 1]
        if fa == 0.0 or fb == 0.0:
            continue
        if (fa < 0.0) != (fb < 0.0):
            ta, tb = math.log(xs[i]), math.log(xs[i + 1])
            va = fa
            while tb - ta > refine_tol:
                tm = 0.5 * (ta + tb)
                vm = float(phi(math.exp(tm), k, alpha)) - math.exp(tm)
                if vm == 0.0:
                    ta = tb = tm
                    break
                if (vm < 0.0) == (va < 0.0):
                    ta, va = tm, vm
                else:
                    tb = tm
            crossings.append(math.exp(0.5 * (ta + tb)))

    crossings.sort()
    merged: list[float] = []
    for c in crossings:
        if not merged or abs(math.log(c / merged[-1])) > 1e-9:
            merged.append(c)

    params = ModelParams(k=k, a_size=k, alpha=alpha)
    records = []
    for c in merged:
        quad = lift_phi_fixed_point(c, k, alpha)
        polished = _newton_refine(
            quad.as_array()[None, :], k, k, params.theta, iters=30
        )[0]
        # keep the polish only if it stayed on the same crossing
        if np.max(np.abs(polished - quad.as_array())) < 1e-3 * max(1.0, abs(math.log(c))):
            quad = FieldQuad.from_array(polished)
        records.append(SolutionRecord.from_h(params, quad, "phi-crossing", class_tol))

    return PhiCrossings(
        k=k,
        alpha=alpha,
        count=len(merged),
        crossings=tuple(merged),
        records=tuple(records),
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        grid_n=int(grid_n),
    )
