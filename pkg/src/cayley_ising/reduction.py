"""Closed-form reduction chain for the balanced subgroup case a_size = k.

On the antisymmetric invariant set (h1 = -h4, h2 = -h3) the fixed-point
system of W collapses to one scalar equation in z2 = exp(2 h2). Clearing
denominators turns that equation into a sparse degree-2k polynomial in
u = f_mobius(z2); u = 1 and u = -1 always split off, leaving a
palindromic polynomial of degree 2k-2, and the substitution
xi = u + 1/u halves the degree once more. For k = 4 the result is the
cubic gamma(xi) = xi^3 - alpha xi^2 - 2 xi + alpha^2 + alpha, whose
root count on xi > 2 switches at a critical coupling alpha_cr; for
k = 3 the reduced quadratic has no root with xi > 2, so the count
stays 1; for k <= 2 the chain degenerates outright.

The same regime admits a second scalar picture: the composite map
phi(x) = g(g(x)) with g(x) = f(x)^(k-1) * f(f(x)^k), whose fixed
points are exactly the z2 components of solutions of the full system.
Its derivative at the trivial point x = 1 has a closed form whose
"> 1" region in alpha is an explicit band, nonempty only for k >= 6.

Everything here is plain float polynomial arithmetic; reported roots
are always re-verified against the original scalar residual rather
than trusted from the algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .ising_field import (
    FieldQuad,
    ModelParams,
    SolutionRecord,
    f_mobius,
)

__all__ = [
    "ALPHA_PRIME",
    "u_from_z2",
    "z2_from_u",
    "i3_scalar_residual",
    "poly_u",
    "deflate_u2_minus_1",
    "xi_reduce",
    "gamma_cubic",
    "xi_star",
    "psi",
    "psi_prime",
    "alpha_critical",
    "I3Count",
    "count_I3_solutions",
    "phi",
    "phi_prime_at_1",
    "lift_phi_fixed_point",
    "AlphaBand",
    "alpha_band",
    "theta_band",
]

# Threshold beyond which psi is increasing (its one stationary point
# sits near 4.35, safely to the left). psi is still negative here, so
# the root beyond it exists and is unique. (48 + sqrt(264))/12 ~ 5.35.
ALPHA_PRIME = (48.0 + math.sqrt(264.0)) / 12.0

# |q| at a stationary point below this threshold is treated as a double
# root (tangency). Width of the resulting alpha window around the k=4
# critical point is about 2e-3; tight enough to keep the counts at
# alpha = 6 and alpha = 7 untouched, wide enough that the three-root
# regime is observable at 4-digit alpha values.
DEFAULT_TANGENCY_TOL = 5e-3


# ---------------------------------------------------------------------------
# coordinate changes


def u_from_z2(z2: float, alpha: float) -> float:
    """u = f_mobius(z2): the kernel image of z2, inside (1/alpha, alpha)."""
    return f_mobius(z2, alpha)


def z2_from_u(u: float, alpha: float) -> float:
    """Invert the kernel: z2 = (alpha - u)/(alpha u - 1).

    Only u strictly between min(alpha, 1/alpha) and max(alpha, 1/alpha)
    come from a positive z2; anything else is rejected.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lo, hi = min(alpha, 1.0 / alpha), max(alpha, 1.0 / alpha)
    if not lo < u < hi:
        raise ValueError(f"u={u} outside the reachable interval ({lo}, {hi})")
    return (alpha - u) / (alpha * u - 1.0)


def i3_scalar_residual(z2: float, k: int, alpha: float) -> float:
    """Defect of the antisymmetric scalar fixed-point equation at z2.

    With m = k, the four-component system on h1 = -h4, h2 = -h3 reduces
    to z2 = F(1/z2)^(k-1) * F(F(1/z2)^k) where F is the Mobius kernel.
    Returns RHS - z2; zero exactly at solutions. z2 = 1 gives zero
    bit-exactly since F fixes 1.
    """
    w = f_mobius(1.0 / z2, alpha)
    return w ** (k - 1) * f_mobius(w**k, alpha) - z2


# ---------------------------------------------------------------------------
# polynomial chain


def poly_u(k: int, alpha: float) -> np.ndarray:
    """Numerator polynomial of the scalar equation in u, ascending degree.

    p(u) = u^2k - alpha u^(2k-1) + alpha^2 u^(k+1) - alpha^2 u^(k-1)
           + alpha u - 1.

    Anti-palindromic (u^2k p(1/u) = -p(u)), so roots pair as u, 1/u and
    p(1) = p(-1) = 0 always. For k <= 2 some of the six terms share a
    degree; the sum is accumulated so those cases come out right.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    a2 = alpha * alpha
    c = np.zeros(2 * k + 1)
    c[2 * k] += 1.0
    c[2 * k - 1] -= alpha
    c[k + 1] += a2
    c[k - 1] -= a2
    c[1] += alpha
    c[0] -= 1.0
    return c


def deflate_u2_minus_1(p: Sequence[float], rel_tol: float = 1e-12) -> np.ndarray:
    """Divide out the guaranteed factor u^2 - 1, ascending coefficients.

    The quotient of the anti-palindromic p by u^2 - 1 is palindromic in
    exact arithmetic; after synthetic division the upper half is
    mirrored from the lower so the float result is palindromic to the
    bit. Both the division remainder and a full reconstruction
    (u^2 - 1) * quotient are checked against rel_tol * max|coeff|; a
    violation means the input was not actually divisible.
    """
    p = np.asarray(p, dtype=float)
    n = p.size - 1
    if n < 2:
        raise ValueError("degree must be at least 2 to divide by u^2 - 1")
    scale = float(np.max(np.abs(p)))
    d = p[::-1]  # descending for the synthetic division
    q = np.zeros(n - 1)
    q[0] = d[0]
    if n >= 3:
        q[1] = d[1]
    for i in range(2, n - 1):
        q[i] = d[i] + q[i - 2]
    r1 = d[n - 1] + (q[n - 3] if n >= 3 else 0.0)
    r0 = d[n] + q[n - 2]
    if max(abs(r0), abs(r1)) > rel_tol * scale:
        raise ValueError(
            f"(u^2 - 1) does not divide the input: remainder ({r1}) u + ({r0})"
        )
    for i in range((n - 1) // 2):
        q[n - 2 - i] = q[i]
    asc = q[::-1].copy()
    recon = np.convolve(asc, np.array([-1.0, 0.0, 1.0]))
    if float(np.max(np.abs(recon - p))) > rel_tol * max(scale, 1.0):
        raise ValueError("deflation reconstruction mismatch; input malformed")
    return asc


def xi_reduce(p: Sequence[float]) -> np.ndarray:
    """Halve the degree of a palindromic polynomial via xi = u + 1/u.

    For palindromic p of degree 2m, returns q of degree m with
    u^m q(u + 1/u) = p(u) identically. Uses the recurrence
    D_0 = 2, D_1 = xi, D_{j+1} = xi D_j - D_{j-1} for the polynomials
    expressing u^j + u^-j in xi. Input must be palindromic exactly
    (which deflate_u2_minus_1 guarantees by construction).
    """
    p = np.asarray(p, dtype=float)
    n = p.size - 1
    if n % 2 != 0:
        raise ValueError("palindromic reduction needs even degree")
    if not np.array_equal(p, p[::-1]):
        raise ValueError("input polynomial is not palindromic")
    m = n // 2
    q = np.zeros(m + 1)
    q[0] = p[m]
    if m == 0:
        return q
    d_prev = np.zeros(m + 1)
    d_prev[0] = 2.0
    d_cur = np.zeros(m + 1)
    d_cur[1] = 1.0
    q += p[m + 1] * d_cur
    for j in range(2, m + 1):
        d_next = np.empty(m + 1)
        d_next[0] = 0.0
        d_next[1:] = d_cur[:-1]
        d_next -= d_prev
        q += p[m + j] * d_next
        d_prev, d_cur = d_cur, d_next
    return q


# ---------------------------------------------------------------------------
# k = 4 closed forms


def gamma_cubic(xi, alpha: float):
    """The k = 4 reduced cubic: xi^3 - alpha xi^2 - 2 xi + alpha^2 + alpha."""
    xi = np.asarray(xi, dtype=float)
    out = ((xi - alpha) * xi - 2.0) * xi + alpha * (alpha + 1.0)
    return float(out) if out.ndim == 0 else out


def xi_star(alpha: float) -> float:
    """Positive stationary point of the cubic: (alpha + sqrt(alpha^2+6))/3.

    Exceeds 2 (the edge of the meaningful xi range) exactly when
    alpha > 2.5.
    """
    return (alpha + math.sqrt(alpha * alpha + 6.0)) / 3.0


def psi(alpha):
    """27 times the negated cubic minimum: 2a^3 - 27a^2 - 9a + 2(a^2+6)^{3/2}.

    Vanishing of psi is equivalent to the cubic being tangent to zero at
    xi_star, which is the root-count bifurcation.
    """
    a = np.asarray(alpha, dtype=float)
    out = 2.0 * a**3 - 27.0 * a**2 - 9.0 * a + 2.0 * np.sqrt(a * a + 6.0) ** 3
    return float(out) if out.ndim == 0 else out


def psi_prime(alpha: float) -> float:
    """Analytic derivative of psi, used for one Newton polish."""
    a = float(alpha)
    return 6.0 * a * a - 54.0 * a - 9.0 + 6.0 * a * math.sqrt(a * a + 6.0)


def alpha_critical(hi: float = 50.0, tol: float = 1e-14) -> float:
    """Root of psi on (ALPHA_PRIME, hi].

    psi is increasing past ALPHA_PRIME and still negative there
    (psi(5) < 0 already), so the root in that interval is unique.
    Bisection to tol, then two Newton steps with the analytic
    derivative; the result satisfies |psi| < 1e-10.
    """
    lo = ALPHA_PRIME
    flo, fhi = psi(lo), psi(hi)
    if not (flo < 0.0 < fhi):
        raise ValueError(f"bracket failure: psi({lo})={flo}, psi({hi})={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if psi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    for _ in range(2):
        d = psi_prime(root)
        if d == 0.0:
            break
        root -= psi(root) / d
    if abs(psi(root)) >= 1e-10:
        raise ValueError(f"critical point refinement stalled: psi={psi(root)}")
    return root


# ---------------------------------------------------------------------------
# root counting with tangency windows


def _bisect_root(fn: Callable[[float], float], a: float, b: float, fa: float, tol: float) -> float:
    """Bisect a bracketed sign change; fn assumed monotone on [a, b]."""
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _roots_with_tangency(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    stationary: Sequence[float],
    tangency_tol: float,
    refine_tol: float = 1e-12,
) -> tuple[list[float], list[float]]:
    """Roots of fn on (lo, hi) with near-zero extrema collapsed.

    stationary must hold all interior stationary points of fn, so fn is
    monotone between consecutive nodes and sign changes are exhaustive.
    A stationary point where |fn| <= tangency_tol is reported as one
    tangent root, and any sign-change roots in the two adjacent
    monotone pieces are absorbed into it: right at a tangency the pair
    of simple roots and the double root are numerically the same event,
    and counting both would double-count.

    Returns (simple_roots, tangent_roots), each ascending.
    """
    nodes = [lo] + [s for s in sorted(stationary) if lo < s < hi] + [hi]
    vals = [fn(x) for x in nodes]
    tangent_idx = {
        i for i in range(1, len(nodes) - 1) if abs(vals[i]) <= tangency_tol
    }
    simple: list[float] = []
    for i in range(len(nodes) - 1):
        if i in tangent_idx or (i + 1) in tangent_idx:
            continue
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 or fb == 0.0:
            # an exact zero at a non-stationary node only happens at the
            # domain edge (the split-off u = 1 root); not counted here
            continue
        if (fa < 0.0) != (fb < 0.0):
            simple.append(_bisect_root(fn, nodes[i], nodes[i + 1], fa, refine_tol))
    return simple, [nodes[i] for i in sorted(tangent_idx)]


@dataclass(frozen=True)
class I3Count:
    """Result of the antisymmetric solution count for a_size = k.

    count is 1 (the flat solution) plus two per xi-root, each root
    contributing the reciprocal pair {u, 1/u}. tangent marks whether a
    collapsed double root is among them, i.e. the parameter sits inside
    the bifurcation window. records carry the lifted four-component
    solutions, in the same order as z2_values.
    """

    k: int
    alpha: float
    count: int
    tangent: bool
    tangency_tol: float
    xi_roots: tuple[float, ...]
    z2_values: tuple[float, ...]
    records: tuple[SolutionRecord, ...]


def _polish_z2(z2: float, k: int, alpha: float, iters: int = 8) -> float:
    """Secant-polish z2 against the scalar residual; keep best seen."""
    x0, x1 = z2, z2 * (1.0 + 1e-8) + 1e-12
    f0, f1 = i3_scalar_residual(x0, k, alpha), i3_scalar_residual(x1, k, alpha)
    best_x, best_f = (x0, abs(f0)) if abs(f0) <= abs(f1) else (x1, abs(f1))
    for _ in range(iters):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (math.isfinite(x2) and x2 > 0.0):
            break
        x0, f0, x1 = x1, f1, x2
        f1 = i3_scalar_residual(x1, k, alpha)
        if abs(f1) < best_f:
            best_x, best_f = x1, abs(f1)
    return best_x


def lift_z2_to_quad(z2: float, k: int, alpha: float) -> FieldQuad:
    """Rebuild the four fields from the antisymmetric scalar coordinate.

    z3 = 1/z2 and z4 = 1/z1 by antisymmetry; z1 follows from the level
    recursion z1 = F(z3)^k.
    """
    z3 = 1.0 / z2
    z1 = f_mobius(z3, alpha) ** k
    h1 = 0.5 * math.log(z1)
    h2 = 0.5 * math.log(z2)
    return FieldQuad(h1, h2, -h2, -h1)


def count_I3_solutions(
    k: int,
    alpha: float,
    tangency_tol: float = DEFAULT_TANGENCY_TOL,
    refine_tol: float = 1e-12,
    class_tol: float = 1e-8,
) -> I3Count:
    """Count and construct all antisymmetric solutions for a_size = k.

    Roots of the xi-reduced polynomial q are sought on (2, alpha + 1/alpha
    + 1): xi = u + 1/u with u in (1/alpha, alpha) can reach no further,
    and xi <= 2 means u on the unit circle, where only the split-off
    u = 1 solution lives. The count is exact for simple roots because q
    is monotone between consecutive stationary points (taken from the
    exact derivative); a stationary point with |q| <= tangency_tol is
    reported as a tangent double root, which is the bifurcation regime.

    Each xi root is mapped back through the reciprocal pair {u, 1/u} to
    two z2 values, secant-polished on the original scalar residual, and
    lifted to a full FieldQuad record. At a tangency slightly off the
    exact critical coupling no true root exists nearby; the records
    then carry the honest (small but nonzero) residual of the extremal
    point.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    if not alpha > 1.0:
        raise ValueError(f"the balanced antisymmetric analysis needs alpha > 1, got {alpha}")
    q = xi_reduce(deflate_u2_minus_1(poly_u(k, alpha)))
    xi_hi = alpha + 1.0 / alpha + 1.0

    def q_eval(x: float) -> float:
        return float(npoly.polyval(x, q))

    qd = npoly.polyder(q)
    stationary: list[float] = []
    if qd.size > 1:
        roots = np.roots(qd[::-1])
        stationary = [float(r.real) for r in roots if abs(r.imag) < 1e-9]
    simple, tangent = _roots_with_tangency(
        q_eval, 2.0, xi_hi, stationary, tangency_tol, refine_tol
    )
    xi_roots = sorted(simple + tangent)

    params = ModelParams(k=k, a_size=k, alpha=alpha)
    z2s: list[float] = [1.0]
    for xi in xi_roots:
        u_big = 0.5 * (xi + math.sqrt(xi * xi - 4.0))
        if not u_big < alpha:
            continue  # beyond the kernel range: no field behind it
        for u in (u_big, 1.0 / u_big):
            z2s.append(_polish_z2(z2_from_u(u, alpha), k, alpha))
    z2s.sort()
    records = tuple(
        SolutionRecord.from_h(params, lift_z2_to_quad(z2, k, alpha), "i3-reduction", class_tol)
        for z2 in z2s
    )
    return I3Count(
        k=k,
        alpha=alpha,
        count=len(z2s),
        tangent=bool(tangent),
        tangency_tol=tangency_tol,
        xi_roots=tuple(xi_roots),
        z2_values=tuple(z2s),
        records=records,
    )


# ---------------------------------------------------------------------------
# the composite scalar map


def _g_half(x, k: int, alpha: float):
    fx = f_mobius(x, alpha)
    return fx ** (k - 1) * f_mobius(fx**k, alpha)


def phi(x, k: int, alpha: float):
    """The composite map g(g(x)) with g(x) = f(x)^(k-1) f(f(x)^k).

    Fixed points of phi in x = z2 are exactly the z2 components of
    solutions of the balanced (a_size = k) system: g sends z2 to z3 and
    z3 back to z2. phi is bounded between alpha^-2k and alpha^2k,
    fixes 1 bit-exactly, and inherits phi(1/x) = 1/phi(x) from the
    kernel. Accepts scalars or arrays.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    return _g_half(_g_half(x, k, alpha), k, alpha)


def phi_prime_at_1(k: int, alpha: float) -> float:
    """Closed-form derivative of phi at the trivial fixed point:

        phi'(1) = (alpha - 1)^2 (alpha + 1 - 2k)^2 / (1 + alpha)^4.

    Equal to g'(1)^2, hence never negative; vanishes at alpha = 1 and
    at alpha = 2k - 1.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    num = (alpha - 1.0) ** 2 * (alpha + 1.0 - 2.0 * k) ** 2
    return num / (1.0 + alpha) ** 4


def lift_phi_fixed_point(x: float, k: int, alpha: float) -> FieldQuad:
    """Extend a fixed point of phi to the full four-component field.

    Runs the substitution chain z2 = x, z4 = F(z2)^k,
    z3 = F(z2)^(k-1) F(z4), z1 = F(z3)^k and converts to h. The result
    is a solution of the full system whenever x solves phi(x) = x
    (callers typically polish it through the 4-D Newton afterwards).
    """
    if not x > 0.0:
        raise ValueError(f"fixed points live on x > 0, got {x}")
    z2 = float(x)
    F2 = f_mobius(z2, alpha)
    z4 = F2**k
    z3 = F2 ** (k - 1) * f_mobius(z4, alpha)
    z1 = f_mobius(z3, alpha) ** k
    return FieldQuad(
        0.5 * math.log(z1), 0.5 * math.log(z2), 0.5 * math.log(z3), 0.5 * math.log(z4)
    )


# ---------------------------------------------------------------------------
# the instability band


@dataclass(frozen=True)
class AlphaBand:
    """Couplings where the trivial fixed point of phi is unstable.

    Bounds are the roots of alpha^2 - (k-1) alpha + k; real only for
    k >= 6. factor_point = (k-1)/(k+1) is the third, always-real root
    of phi'(1) = 1, which sits below 1 and is therefore outside the
    physically relevant range alpha > 1.
    """

    lower: float | None
    upper: float | None
    empty: bool
    factor_point: float

    def contains(self, alpha: float) -> bool:
        if self.empty:
            return False
        return self.lower < alpha < self.upper


def alpha_band(k: int) -> AlphaBand:
    """Open interval of alpha > 1 with phi_prime_at_1 > 1, possibly empty.

    The bounds are (k - 1 -/+ sqrt(k^2 - 6k + 1))/2; the discriminant
    is negative exactly for k in 1..5, giving an empty band there. At
    k = 6 the discriminant is 1 and the band is exactly (2, 3).
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    factor_point = (k - 1.0) / (k + 1.0)
    disc = k * k - 6.0 * k + 1.0
    if disc < 0.0:
        return AlphaBand(lower=None, upper=None, empty=True, factor_point=factor_point)
    s = math.sqrt(disc)
    return AlphaBand(
        lower=(k - 1.0 - s) / 2.0,
        upper=(k - 1.0 + s) / 2.0,
        empty=False,
        factor_point=factor_point,
    )


def theta_band(k: int) -> tuple[float, float] | None:
    """The same instability band as theta magnitudes, or None if empty.

    Bounds are (k - 1 -/+ sqrt(k^2 - 6k + 1))/(2k). The coupling is
    negative throughout the band (alpha > 1), and these are the values
    of |theta| = (alpha - 1)/(alpha + 1) at the band edges, in the same
    order: the identity 2k(k - 3 - s) = (k - 1 - s)(k + 1 - s) with
    s = sqrt(k^2 - 6k + 1) matches them up pairwise.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an int >= 1, got {k!r}")
    disc = k * k - 6.0 * k + 1.0
    if disc < 0.0:
        return None
    s = math.sqrt(disc)
    return ((k - 1.0 - s) / (2.0 * k), (k - 1.0 + s) / (2.0 * k))
