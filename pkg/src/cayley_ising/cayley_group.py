"""Reduced words over a free product of involutive generators.

Vertices of the regular tree with coordination number k+1 are identified
with reduced words over the alphabet {1..k+1}, where each letter squares
to the identity. The empty word is the root; appending a fresh letter
steps to a child, cancelling the last letter steps back to the parent.
Word length equals graph distance from the root.

Words are plain tuples of ints. Neighbors are computed on demand, never
stored: the ball of radius n holds 1 + (k+1)(k^n - 1)/(k - 1) vertices,
so any precomputed adjacency blows up fast.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Word = tuple[int, ...]

IDENTITY: Word = ()

# Default ceiling on generated vertices; ball() refuses to go past it.
DEFAULT_MAX_VERTICES = 1 << 21


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed its configured size cap."""


def _check_letters(letters: Iterable[int], k: int | None) -> None:
    for a in letters:
        if not isinstance(a, int) or a < 1:
            raise ValueError(f"generator index must be a positive int, got {a!r}")
        if k is not None and a > k + 1:
            raise ValueError(f"generator index {a} out of range 1..{k + 1}")


def reduce_word(letters: Sequence[int], k: int | None = None) -> Word:
    """Cancel adjacent equal letters until none remain.

    The rewriting system {aa -> empty} is terminating and confluent, so a
    single left-to-right stack pass gives the unique normal form.

    Args:
        letters: generator indices, any iterable of ints >= 1.
        k: optional tree order; when given, indices are checked against
            the alphabet {1..k+1}.
    """
    _check_letters(letters, k)
    out: list[int] = []
    for a in letters:
        if out and out[-1] == a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def multiply(w1: Sequence[int], w2: Sequence[int], k: int | None = None) -> Word:
    """Group product: concatenate then reduce. Identity is the empty word."""
    return reduce_word(tuple(w1) + tuple(w2), k)


def letter_count(w: Sequence[int], i: int) -> int:
    """Number of occurrences of generator i in the (reduced) word."""
    if not isinstance(i, int) or i < 1:
        raise ValueError(f"generator index must be a positive int, got {i!r}")
    return sum(1 for a in w if a == i)


def parent(w: Sequence[int]) -> Word:
    """Drop the final letter: the unique neighbor closer to the root."""
    w = tuple(w)
    if not w:
        raise ValueError("the root (empty word) has no parent")
    return w[:-1]


def children(w: Sequence[int], k: int) -> list[Word]:
    """Neighbors farther from the root.

    Appending the last letter again would cancel, so a non-root word has
    k children; the root has k+1.
    """
    w = tuple(w)
    _check_letters(w, k)
    last = w[-1] if w else 0
    return [w + (a,) for a in range(1, k + 2) if a != last]


@dataclass(frozen=True)
class SubgroupSpec:
    """An index set A picking out an index-2 normal subgroup.

    The subgroup consists of all words with an even total count of
    letters from A. A must be a nonempty proper subset of {1..k+1}
    (taking all generators collapses the two-class structure this
    package is about).
    """

    k: int
    members: frozenset[int]

    def __init__(self, k: int, members: Iterable[int]):
        if not isinstance(k, int) or k < 1:
            raise ValueError(f"tree order k must be an int >= 1, got {k!r}")
        ms = frozenset(members)
        if not ms:
            raise ValueError("index set A must be nonempty")
        if not all(isinstance(a, int) and 1 <= a <= k + 1 for a in ms):
            raise ValueError(f"index set {sorted(ms)} not a subset of 1..{k + 1}")
        if len(ms) > k:
            raise ValueError("index set A must be proper: |A| <= k")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "members", ms)

    @property
    def a_size(self) -> int:
        return len(self.members)


def in_HA(w: Sequence[int], spec: SubgroupSpec) -> bool:
    """Membership in the even-parity class of spec.

    True iff the total number of letters of w that lie in A is even.
    Class membership is a homomorphism onto {even, odd} because
    reduction removes letters in pairs.
    """
    _check_letters(w, spec.k)
    return sum(1 for a in w if a in spec.members) % 2 == 0


@dataclass(frozen=True)
class Ball:
    """Vertices of the radius-n ball, grouped by distance from the root.

    levels[d] lists the words at distance d, lexicographically sorted.
    The flattened order (level-major, lexicographic within each level)
    is a contract other modules rely on for reproducible enumeration.
    """

    k: int
    n: int
    levels: tuple[tuple[Word, ...], ...]

    @property
    def vertices(self) -> tuple[Word, ...]:
        return tuple(w for level in self.levels for w in level)

    @property
    def boundary(self) -> tuple[Word, ...]:
        """The outermost level (distance exactly n)."""
        return self.levels[-1]

    def __iter__(self) -> Iterator[Word]:
        return iter(self.vertices)

    def __len__(self) -> int:
        return sum(len(level) for level in self.levels)


def level_size(n: int, k: int) -> int:
    """Closed-form size of level n: 1 for the root, else (k+1) k^(n-1)."""
    if n < 0:
        raise ValueError("level index must be >= 0")
    return 1 if n == 0 else (k + 1) * k ** (n - 1)


def ball(n: int, k: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> Ball:
    """Generate all reduced words of length <= n.

    Levels are built by appending every non-cancelling letter to the
    previous level in ascending order, which keeps each level sorted.

    Raises ResourceLimitError before allocating anything when the total
    vertex count would exceed max_vertices.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"tree order k must be an int >= 1, got {k!r}")
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"radius n must be an int >= 0, got {n!r}")
    total = sum(level_size(d, k) for d in range(n + 1))
    if total > max_vertices:
        raise ResourceLimitError(
            f"ball(n={n}, k={k}) holds {total} vertices, over the cap {max_vertices}"
        )
    levels: list[tuple[Word, ...]] = [(IDENTITY,)]
    for _ in range(n):
        prev = levels[-1]
        nxt: list[Word] = []
        for w in prev:
            last = w[-1] if w else 0
            nxt.extend(w + (a,) for a in range(1, k + 2) if a != last)
        levels.append(tuple(nxt))
    return Ball(k=k, n=n, levels=tuple(levels))
