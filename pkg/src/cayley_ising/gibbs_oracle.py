"""Brute-force verification layer: exact finite-volume measures.

Nothing here trusts the recursion machinery. Measures on a depth-n ball
are built by enumerating all 2^|V_n| spin configurations, computing
Boltzmann weights directly from the energy and the boundary fields, and
normalizing; consistency of a field assignment is then a statement
about these tables (marginalizing the depth-n table onto the smaller
ball must reproduce the depth-(n-1) table) that can be checked to
machine precision. This is exponentially expensive on purpose: it is
the independent referee for the analytic path, not a production tool.

Configurations are encoded as integer bitmasks over the ball's fixed
vertex order (level-major, lexicographic within a level; bit i belongs
to vertex i, set bit = spin +1). The encoding is part of the module
contract so tables from different runs are comparable entry by entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cayley_group import (
    Ball,
    ResourceLimitError,
    SubgroupSpec,
    Word,
    ball,
    children,
    in_HA,
    parent,
)
from .ising_field import FieldQuad, ModelParams, assign_field, f_field

__all__ = [
    "DEFAULT_CONFIG_CAP",
    "hamiltonian",
    "ProbabilityTable",
    "mu_n_table",
    "check_compatibility",
    "Eq4Report",
    "check_eq4",
]

# Hard ceiling on enumerated configurations (2^|V_n|).
DEFAULT_CONFIG_CAP = 1 << 24


def _check_spec(params: ModelParams, spec: SubgroupSpec) -> None:
    if spec.k != params.k:
        raise ValueError(f"spec has k={spec.k} but params have k={params.k}")
    if spec.a_size != params.a_size:
        raise ValueError(
            f"spec has |A|={spec.a_size} but params have a_size={params.a_size}"
        )


def hamiltonian(config: Mapping[Word, int], J: float, n: int, k: int) -> float:
    """Energy of a spin configuration on the depth-n ball.

    H = -J * sum of sigma(x) sigma(y) over the |V_n| - 1 tree edges
    inside the ball. config must assign +1 or -1 to every vertex.
    """
    b = ball(n, k)
    for w in b.vertices:
        if w not in config:
            raise ValueError(f"configuration is missing vertex {w}")
        if config[w] not in (-1, 1):
            raise ValueError(f"spin at {w} must be -1 or +1, got {config[w]!r}")
    energy = 0.0
    for level in b.levels[1:]:
        for w in level:
            energy -= J * config[w] * config[parent(w)]
    return energy


@dataclass(frozen=True)
class ProbabilityTable:
    """Exact finite-volume measure over all configurations of a ball.

    probs[i] is the probability of the configuration whose bitmask is i
    under the vertex order in vertices. log_z is the log partition
    value; z_n = exp(log_z) can overflow for violent parameters while
    log_z never does.
    """

    n: int
    k: int
    vertices: tuple[Word, ...]
    probs: np.ndarray
    log_z: float

    @property
    def z_n(self) -> float:
        return math.exp(self.log_z)

    def index_of(self, config: Mapping[Word, int]) -> int:
        idx = 0
        for i, w in enumerate(self.vertices):
            s = config.get(w)
            if s not in (-1, 1):
                raise ValueError(f"spin at {w} must be -1 or +1, got {s!r}")
            if s == 1:
                idx |= 1 << i
        return idx

    def prob_of(self, config: Mapping[Word, int]) -> float:
        return float(self.probs[self.index_of(config)])


def _log_weights(
    b: Ball, params: ModelParams, quad: FieldQuad, spec: SubgroupSpec
) -> np.ndarray:
    nv = len(b.vertices)
    index = {w: i for i, w in enumerate(b.vertices)}
    ids = np.arange(1 << nv, dtype=np.int64)
    jb = params.coupling
    logw = np.zeros(1 << nv)
    for level in b.levels[1:]:
        for w in level:
            sc = (((ids >> index[w]) & 1) * 2 - 1).astype(float)
            sp = (((ids >> index[parent(w)]) & 1) * 2 - 1).astype(float)
            logw += jb * sc * sp
    for w in b.boundary:
        hx = assign_field(w, spec, quad)
        sx = (((ids >> index[w]) & 1) * 2 - 1).astype(float)
        logw += hx * sx
    return logw


def mu_n_table(
    params: ModelParams,
    quad: FieldQuad,
    spec: SubgroupSpec,
    n: int,
    cap: int = DEFAULT_CONFIG_CAP,
) -> ProbabilityTable:
    """Exact measure on the depth-n ball by total enumeration.

    Weights are exp(-beta H + sum of h_x sigma(x) over the boundary),
    with the boundary fields read off the weakly periodic assignment.
    Everything is normalized in log space; the summation for the
    partition value runs over sorted log-weights so the result is
    independent of enumeration order (and hence bit-stable under the
    global spin flip, whose weight array is a permutation of this one).

    n = 0 is rejected: the root has no parent, so no boundary role.
    """
    _check_spec(params, spec)
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"depth n must be an int >= 1, got {n!r}")
    b = ball(n, params.k, max_vertices=64)
    nv = len(b.vertices)
    if nv >= 63 or (1 << nv) > cap:
        raise ResourceLimitError(
            f"enumeration needs 2^{nv} configurations, over the cap {cap}"
        )
    logw = _log_weights(b, params, quad, spec)
    m = float(np.max(logw))
    log_z = m + math.log(float(np.sum(np.exp(np.sort(logw) - m))))
    probs = np.exp(logw - log_z)
    total = float(np.sum(np.sort(probs)))
    if not math.isfinite(log_z) or abs(total - 1.0) > 1e-12:
        raise ArithmeticError(f"normalization failed: sum(probs)={total}")
    return ProbabilityTable(
        n=n, k=params.k, vertices=b.vertices, probs=probs, log_z=log_z
    )


def check_compatibility(
    params: ModelParams,
    quad: FieldQuad,
    spec: SubgroupSpec,
    n: int,
    cap: int = DEFAULT_CONFIG_CAP,
) -> float:
    """Marginalization defect between the depth-n and depth-(n-1) measures.

    Builds both tables by enumeration, sums the depth-n table over the
    outermost level, and returns the max absolute difference against
    the depth-(n-1) table. Zero (up to roundoff) iff the field quad is
    recursion-consistent on this ball. Needs n >= 2 so every interior
    vertex has a parent and exactly k children, keeping the root's
    missing role out of the argument.
    """
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"compatibility check needs n >= 2, got {n!r}")
    big = mu_n_table(params, quad, spec, n, cap=cap)
    small = mu_n_table(params, quad, spec, n - 1, cap=cap)
    nv_small = len(small.vertices)
    if big.vertices[:nv_small] != small.vertices:
        raise AssertionError("ball vertex order is not prefix-stable")
    n_outer = len(big.vertices) - nv_small
    marginal = big.probs.reshape(1 << n_outer, 1 << nv_small).sum(axis=0)
    return float(np.max(np.abs(marginal - small.probs)))


def _role(x: Word, spec: SubgroupSpec) -> int:
    cx = in_HA(x, spec)
    cp = in_HA(parent(x), spec)
    if cx:
        return 1 if cp else 2
    return 3 if cp else 4


@dataclass(frozen=True)
class Eq4Report:
    """Vertex-by-vertex recursion residuals, split by field role.

    per_role maps role index (1..4, same numbering as the quad) to the
    max residual among checked vertices of that role, or None when the
    checked depth range contains no vertex of that role. Because the
    field assignment depends only on the role, each role's residual is
    a single number repeated across its vertices; reporting the max
    per role keeps that structure visible.
    """

    depth: int
    max_residual: float
    per_role: dict

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "max_residual": self.max_residual,
            "per_role": {str(r): v for r, v in self.per_role.items()},
        }


def check_eq4(
    quad: FieldQuad, params: ModelParams, spec: SubgroupSpec, depth: int
) -> Eq4Report:
    """Check the level recursion h_x = sum_children f(h_y) directly.

    Walks every vertex at distance 1 .. depth-1 from the root (those
    are the ones whose children are still inside the ball), evaluates
    both sides from the raw word-level definitions, and aggregates
    residuals per role. This shares no code path with the map W, which
    is the point: agreement means the four-component reduction matches
    the tree-level definition.
    """
    _check_spec(params, spec)
    if not isinstance(depth, int) or depth < 2:
        raise ValueError(f"depth must be an int >= 2, got {depth!r}")
    b = ball(depth, params.k)
    theta = params.theta
    per_role: dict[int, float | None] = {1: None, 2: None, 3: None, 4: None}
    for level in b.levels[1:-1]:
        for x in level:
            hx = assign_field(x, spec, quad)
            total = 0.0
            for y in children(x, params.k):
                total += f_field(assign_field(y, spec, quad), theta)
            r = abs(hx - total)
            role = _role(x, spec)
            prev = per_role[role]
            per_role[role] = r if prev is None else max(prev, r)
    seen = [v for v in per_role.values() if v is not None]
    return Eq4Report(depth=depth, max_residual=max(seen), per_role=per_role)
