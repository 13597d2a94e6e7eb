"""Boundary-field recursion for the Ising model on the order-k tree.

The model lives on the tree whose vertices are the reduced words of
cayley_group. A boundary law assigns a real field h_x to every vertex;
consistency across one tree level is the componentwise recursion

    h_x = sum over children y of f(h_y, theta),
    f(h, theta) = artanh(theta * tanh(h)),

with theta = tanh(J * beta) the effective coupling. This module covers
the two-class weakly periodic ansatz: fields take at most four values
h1..h4 selected by the (class, parent class) pair of a vertex under an
index-2 subgroup, and the level recursion collapses to a 4-dimensional
map W. Everything downstream (scalar reductions, solvers, the exact
enumeration oracle) is phrased in terms of this module.

Two coordinate systems are used interchangeably: additive fields h and
multiplicative z = exp(2h), where f becomes the Mobius map
(z + alpha)/(alpha z + 1) with alpha = (1 - theta)/(1 + theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .cayley_group import SubgroupSpec, Word, in_HA, parent

__all__ = [
    "ModelParams",
    "FieldQuad",
    "ZQuad",
    "ClassFlags",
    "SolutionRecord",
    "alpha_from_theta",
    "theta_from_alpha",
    "f_field",
    "f_mobius",
    "W_map",
    "W_map_z",
    "fixed_point_residual",
    "assign_field",
    "classify",
]

# Tolerance for classifying a numeric solution into the invariant sets.
DEFAULT_CLASS_TOL = 1e-8


def alpha_from_theta(theta: float) -> float:
    """alpha = (1 - theta)/(1 + theta); maps (-1, 1) onto (0, inf)."""
    if not -1.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (-1, 1), got {theta}")
    return (1.0 - theta) / (1.0 + theta)


def theta_from_alpha(alpha: float) -> float:
    """Inverse of alpha_from_theta; alpha > 1 lands in theta < 0."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (1.0 - alpha) / (1.0 + alpha)


def f_field(h, theta):
    """The recursion kernel artanh(theta * tanh(h)), odd and bounded.

    Evaluated in the logarithmic form

        f = sign(h)/2 * log(((1+theta) + (1-theta) e^{-2|h|}) /
                            ((1-theta) + (1+theta) e^{-2|h|}))

    which never saturates: tanh(h) rounds to 1 for h > 19 and the naive
    composition loses the tail, while this form stays exact out to
    h = inf (limit sign(h) * artanh(theta)). Accepts scalars or arrays.
    """
    if not -1.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (-1, 1), got {theta}")
    h_arr = np.asarray(h, dtype=float)
    e = np.exp(-2.0 * np.abs(h_arr))
    num = (1.0 + theta) + (1.0 - theta) * e
    den = (1.0 - theta) + (1.0 + theta) * e
    out = 0.5 * np.sign(h_arr) * np.log(num / den)
    if np.ndim(h) == 0:
        return float(out)
    return out


def f_mobius(x, alpha):
    """Multiplicative form of the kernel: (x + alpha)/(alpha x + 1).

    Acts on z = exp(2h). Fixes 1, swaps 0 and inf limits onto alpha and
    1/alpha, and satisfies f(1/x) = 1/f(x). Accepts scalars or arrays.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("f_mobius requires x > 0")
    out = (x_arr + alpha) / (alpha * x_arr + 1.0)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ModelParams:
    """Tree order, subgroup size, and coupling for one model instance.

    Exactly one of theta/alpha is required; the other is derived (both
    may be passed if they agree to machine precision). J and beta are
    optional and only matter to the enumeration oracle; when absent the
    convention beta = 1, J = artanh(theta) is used. Only the product
    J*beta enters any formula.
    """

    k: int
    a_size: int
    theta: float = None  # type: ignore[assignment]
    alpha: float = None  # type: ignore[assignment]
    J: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"tree order k must be an int >= 1, got {self.k!r}")
        if not isinstance(self.a_size, int) or not 1 <= self.a_size <= self.k:
            raise ValueError(
                f"a_size must satisfy 1 <= a_size <= k={self.k}, got {self.a_size!r}"
            )
        if (self.J is None) != (self.beta is None):
            raise ValueError("J and beta must be given together or not at all")
        theta, alpha = self.theta, self.alpha
        if theta is None and alpha is None:
            if self.J is None:
                raise ValueError("one of theta or alpha is required")
            theta = math.tanh(self.J * self.beta)
            alpha = alpha_from_theta(theta)
        elif theta is None:
            theta = theta_from_alpha(alpha)
        elif alpha is None:
            alpha = alpha_from_theta(theta)
        else:
            if not math.isclose(alpha, alpha_from_theta(theta), rel_tol=1e-12):
                raise ValueError(
                    f"theta={theta} and alpha={alpha} disagree: "
                    f"alpha should be {alpha_from_theta(theta)}"
                )
        if not -1.0 < theta < 1.0:
            raise ValueError(f"theta must lie in (-1, 1), got {theta}")
        if self.J is not None and not math.isclose(
            math.tanh(self.J * self.beta), theta, rel_tol=1e-12, abs_tol=1e-15
        ):
            raise ValueError("tanh(J*beta) does not match theta")
        object.__setattr__(self, "theta", float(theta))
        object.__setattr__(self, "alpha", float(alpha))

    @property
    def coupling(self) -> float:
        """The product J*beta = artanh(theta)."""
        if self.J is not None:
            return self.J * self.beta
        return math.atanh(self.theta)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "a_size": self.a_size,
            "theta": self.theta,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class FieldQuad:
    """The four field values of a weakly periodic boundary law."""

    h1: float
    h2: float
    h3: float
    h4: float

    def __post_init__(self):
        for name in ("h1", "h2", "h3", "h4"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")

    def __iter__(self) -> Iterator[float]:
        return iter((self.h1, self.h2, self.h3, self.h4))

    def as_array(self) -> np.ndarray:
        return np.array([self.h1, self.h2, self.h3, self.h4], dtype=float)

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "FieldQuad":
        a = np.asarray(arr, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def __neg__(self) -> "FieldQuad":
        return FieldQuad(-self.h1, -self.h2, -self.h3, -self.h4)

    def swapped(self) -> "FieldQuad":
        """Exchange the roles of the two parity classes: (h4,h3,h2,h1)."""
        return FieldQuad(self.h4, self.h3, self.h2, self.h1)

    def to_z(self) -> "ZQuad":
        return ZQuad(*(math.exp(2.0 * h) for h in self))


@dataclass(frozen=True)
class ZQuad:
    """Multiplicative coordinates z_i = exp(2 h_i), all positive."""

    z1: float
    z2: float
    z3: float
    z4: float

    def __post_init__(self):
        for name in ("z1", "z2", "z3", "z4"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and positive, got {v}")

    def __iter__(self) -> Iterator[float]:
        return iter((self.z1, self.z2, self.z3, self.z4))

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3, self.z4], dtype=float)

    def to_field(self) -> FieldQuad:
        return FieldQuad(*(0.5 * math.log(z) for z in self))


def w_components(H: np.ndarray, k: int, a_size: int, theta: float) -> np.ndarray:
    """Vectorized core of W on arrays shaped (..., 4).

    Component pattern (m = a_size): a class-1 vertex has m children of
    role 3 and k-m of role 1, and so on; one child slot is lost to the
    parent, which is why roles 2 and 3 carry m-1:

        W1 = m f(h3) + (k - m) f(h1)
        W2 = (m - 1) f(h3) + (k + 1 - m) f(h1)
        W3 = (m - 1) f(h2) + (k + 1 - m) f(h4)
        W4 = m f(h2) + (k - m) f(h4)
    """
    m = a_size
    f1 = f_field(H[..., 0], theta)
    f2 = f_field(H[..., 1], theta)
    f3 = f_field(H[..., 2], theta)
    f4 = f_field(H[..., 3], theta)
    return np.stack(
        [
            m * f3 + (k - m) * f1,
            (m - 1) * f3 + (k + 1 - m) * f1,
            (m - 1) * f2 + (k + 1 - m) * f4,
            m * f2 + (k - m) * f4,
        ],
        axis=-1,
    )


def W_map(h: FieldQuad, params: ModelParams) -> FieldQuad:
    """One level of the weakly periodic recursion in h-coordinates.

    Odd (W(-h) = -W(h)) and equivariant under the class swap
    s(h) = (h4, h3, h2, h1); both hold bit-exactly because each
    component is literally the same arithmetic expression on the
    negated/permuted inputs.
    """
    out = w_components(h.as_array(), params.k, params.a_size, params.theta)
    return FieldQuad.from_array(out)


def W_map_z(z: ZQuad, params: ModelParams) -> ZQuad:
    """Same map in z-coordinates, as products of Mobius-kernel powers."""
    k, m, alpha = params.k, params.a_size, params.alpha
    F1 = f_mobius(z.z1, alpha)
    F2 = f_mobius(z.z2, alpha)
    F3 = f_mobius(z.z3, alpha)
    F4 = f_mobius(z.z4, alpha)
    return ZQuad(
        F3**m * F1 ** (k - m),
        F3 ** (m - 1) * F1 ** (k + 1 - m),
        F2 ** (m - 1) * F4 ** (k + 1 - m),
        F2**m * F4 ** (k - m),
    )


def fixed_point_residual(h: FieldQuad, params: ModelParams) -> float:
    """Max-norm of h - W(h); zero exactly at boundary-law solutions."""
    H = h.as_array()
    return float(np.max(np.abs(H - w_components(H, params.k, params.a_size, params.theta))))


def assign_field(x: Word, spec: SubgroupSpec, h: FieldQuad) -> float:
    """Field value at vertex x under the two-class periodic ansatz.

    The value is chosen by the pair (class of x, class of its parent):

        (even, even) -> h1    (even, odd) -> h2
        (odd,  even) -> h3    (odd,  odd) -> h4

    The root has no parent and therefore no role; callers must not ask.
    """
    x = tuple(x)
    if not x:
        raise ValueError("the root has no parent class; assign_field is undefined there")
    cx = in_HA(x, spec)
    cp = in_HA(parent(x), spec)
    if cx:
        return h.h1 if cp else h.h2
    return h.h3 if cp else h.h4


@dataclass(frozen=True)
class ClassFlags:
    """Membership of a field quadruple in the W-invariant subspaces.

    ti: all four components equal (translation invariant), identical to
        membership in I1.
    in_i2: h1 = h4 and h2 = h3 (symmetric pairing).
    in_i3: h1 = -h4 and h2 = -h3 (antisymmetric pairing).
    All comparisons use the absolute tolerance recorded in tol.
    """

    ti: bool
    in_i1: bool
    in_i2: bool
    in_i3: bool
    tol: float

    def as_dict(self) -> dict:
        return {
            "ti": self.ti,
            "i1": self.in_i1,
            "i2": self.in_i2,
            "i3": self.in_i3,
            "tol": self.tol,
        }


def classify(h: FieldQuad, tol: float = DEFAULT_CLASS_TOL) -> ClassFlags:
    """Flag h against the invariant sets, with absolute tolerance tol."""
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    vals = h.as_array()
    ti = bool(vals.max() - vals.min() <= tol)
    in_i2 = bool(abs(h.h1 - h.h4) <= tol and abs(h.h2 - h.h3) <= tol)
    in_i3 = bool(abs(h.h1 + h.h4) <= tol and abs(h.h2 + h.h3) <= tol)
    return ClassFlags(ti=ti, in_i1=ti, in_i2=in_i2, in_i3=in_i3, tol=tol)


@dataclass(frozen=True)
class SolutionRecord:
    """A solved boundary law plus the evidence for it.

    source tags the producing procedure: "full-4d" for the multistart
    solver, "i3-reduction" for the antisymmetric scalar chain,
    "phi-crossing" for lifts of scalar composite-map crossings.
    """

    params: ModelParams
    h: FieldQuad
    residual: float
    flags: ClassFlags
    source: str

    @classmethod
    def from_h(
        cls,
        params: ModelParams,
        h: FieldQuad,
        source: str,
        class_tol: float = DEFAULT_CLASS_TOL,
    ) -> "SolutionRecord":
        return cls(
            params=params,
            h=h,
            residual=fixed_point_residual(h, params),
            flags=classify(h, class_tol),
            source=source,
        )

    def as_dict(self) -> dict:
        return {
            "h": [self.h.h1, self.h.h2, self.h.h3, self.h.h4],
            "residual": self.residual,
            "flags": self.flags.as_dict(),
            "source": self.source,
        }
