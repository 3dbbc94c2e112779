"""Translation-invariant oriented graphs on Z^d, subadditive weights and windows.

Edges are never materialised: the edge set of a :class:`GraphSpec` is
``{(x, x + v) : x in Z^d, v in dirs}``.  The order of ``dirs`` is part of the
graph identity, since the seeded random field is keyed on direction indices;
permuting ``dirs`` gives a different (identically distributed) sample.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSpec, InvalidWindow

MAX_RADIUS = 2**31
# linear window indices must stay well inside int64
MAX_INDEX_BITS = 62

Vertex = tuple


@dataclass(frozen=True)
class GraphSpec:
    d: int
    dirs: tuple

    @cached_property
    def dirs_array(self) -> np.ndarray:
        return np.array(self.dirs, dtype=np.int64).reshape(len(self.dirs), self.d)

    @property
    def m(self) -> int:
        return len(self.dirs)

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "dirs": [list(v) for v in self.dirs]})

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        try:
            doc = json.loads(text)
            return make_graph(doc["d"], doc["dirs"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"bad graph document: {exc}") from exc


def make_graph(d: int, dirs: Iterable[Sequence[int]]) -> GraphSpec:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidSpec(f"dimension must be a positive integer, got {d!r}")
    out = []
    for v in dirs:
        v = tuple(int(c) for c in v)
        if len(v) != d:
            raise InvalidSpec(f"direction {v} does not have length {d}")
        if not any(v):
            raise InvalidSpec("zero vector in direction set")
        if v in out:
            raise InvalidSpec(f"duplicate direction {v}")
        out.append(v)
    if not out:
        raise InvalidSpec("direction set is empty")
    return GraphSpec(int(d), tuple(out))


def example_model(M: int) -> GraphSpec:
    """Two-dimensional model with one step down and 2M+1 steps up.

    ``(x, y) -> (x, y - 1)`` and ``(x, y) -> (x', y + 1)`` for ``|x - x'| <= M``.
    """
    if M < 1:
        raise InvalidSpec(f"M must be >= 1, got {M}")
    return make_graph(2, [(0, -1)] + [(k, 1) for k in range(-M, M + 1)])


def oriented_line() -> GraphSpec:
    return make_graph(1, [(1,)])


def bidirectional_line() -> GraphSpec:
    return make_graph(1, [(1,), (-1,)])


def out_neighbors(g: GraphSpec, x: Sequence[int]) -> list:
    return [tuple(a + b for a, b in zip(x, v)) for v in g.dirs]


def generates_zd(g: GraphSpec, radius: int) -> bool:
    """Check that sums of directions reach every point of the L-inf ball.

    Paths are confined to the ball, so a positive answer certifies that the
    semigroup generated by ``dirs`` contains the ball (and hence, with the
    unit vectors and their negatives inside, all of Z^d).  A negative answer
    only says the certificate failed at this radius.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    origin = (0,) * g.d
    seen = {origin}
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        for y in out_neighbors(g, x):
            if y not in seen and max(abs(c) for c in y) <= radius:
                seen.add(y)
                queue.append(y)
    return len(seen) == (2 * radius + 1) ** g.d


def _as_fraction_vector(u) -> tuple:
    return tuple(Fraction(c) for c in u)


@dataclass(frozen=True)
class SubadditiveWeight:
    """A subadditive weight realised as a maximum of linear forms.

    ``kind == "linear"`` holds a single form; ``"custom"`` holds several and
    evaluates to their maximum, which is subadditive by construction.
    """

    forms: tuple
    kind: str = "linear"

    @classmethod
    def linear(cls, u) -> "SubadditiveWeight":
        return cls((_as_fraction_vector(u),), "linear")

    @classmethod
    def max_of_linear(cls, forms) -> "SubadditiveWeight":
        forms = tuple(_as_fraction_vector(f) for f in forms)
        if not forms:
            raise InvalidSpec("need at least one linear form")
        if len({len(f) for f in forms}) != 1:
            raise InvalidSpec("linear forms of mixed dimension")
        return cls(forms, "linear" if len(forms) == 1 else "custom")

    @property
    def d(self) -> int:
        return len(self.forms[0])

    @property
    def u(self) -> tuple:
        if self.kind != "linear":
            raise AttributeError("only linear weights have a single direction")
        return self.forms[0]

    def __call__(self, x) -> Fraction:
        return psi_eval(self, x)

    @cached_property
    def integer_forms(self):
        """Forms scaled to integers, with the common denominator used."""
        den = 1
        for f in self.forms:
            for c in f:
                den = den * c.denominator // math.gcd(den, c.denominator)
        arr = np.array([[int(c * den) for c in f] for f in self.forms], dtype=np.int64)
        return arr, den


def psi_eval(w: SubadditiveWeight, x) -> Fraction:
    vals = [sum(a * int(c) for a, c in zip(f, x)) for f in w.forms]
    best = max(vals)
    return int(best) if best.denominator == 1 else best


@dataclass(frozen=True)
class Window:
    """A finite region of Z^d.

    Every window is a box ``|x_i| <= radius[i]``, optionally cut down to a
    sublevel set ``{psi <= level}`` or to an explicit vertex set.
    """

    radius: tuple
    psi: SubadditiveWeight | None = None
    level: Fraction | None = None
    members: frozenset | None = field(default=None, compare=True)

    def __post_init__(self):
        if any(r < 0 for r in self.radius):
            raise InvalidWindow("negative radius")
        if any(r > MAX_RADIUS for r in self.radius):
            raise InvalidWindow(f"window radius above {MAX_RADIUS}")
        bits = sum(math.log2(2 * r + 1) for r in self.radius)
        if bits > MAX_INDEX_BITS:
            raise InvalidWindow("window volume too large to index")
        if (self.psi is None) != (self.level is None):
            raise InvalidWindow("psi and level must be given together")

    @classmethod
    def box(cls, d: int, radius) -> "Window":
        if isinstance(radius, (int, np.integer)):
            radius = (int(radius),) * d
        radius = tuple(int(r) for r in radius)
        if len(radius) != d:
            raise InvalidWindow("radius length does not match dimension")
        return cls(radius)

    @classmethod
    def psiball(cls, psi: SubadditiveWeight, n, radius) -> "Window":
        """``{x : psi(x) <= n}`` truncated to the box of the given radius."""
        base = cls.box(psi.d, radius)
        return cls(base.radius, psi, Fraction(n))

    @classmethod
    def from_set(cls, vertices) -> "Window":
        verts = frozenset(tuple(int(c) for c in v) for v in vertices)
        if not verts:
            raise InvalidWindow("empty vertex set")
        d = len(next(iter(verts)))
        radius = tuple(max(abs(v[i]) for v in verts) for i in range(d))
        return cls(radius, members=verts)

    @property
    def d(self) -> int:
        return len(self.radius)

    @property
    def kind(self) -> str:
        if self.members is not None:
            return "set"
        return "box" if self.psi is None else "psiball"

    def contains(self, x) -> bool:
        if len(x) != self.d:
            return False
        if any(abs(int(c)) > r for c, r in zip(x, self.radius)):
            return False
        if self.psi is not None and psi_eval(self.psi, x) > self.level:
            return False
        if self.members is not None and tuple(int(c) for c in x) not in self.members:
            return False
        return True

    __contains__ = contains

    def vertices(self) -> list:
        """All member vertices in lexicographic order (small windows only)."""
        if self.members is not None:
            return sorted(v for v in self.members if self.contains(v))
        ranges = [range(-r, r + 1) for r in self.radius]
        return [v for v in itertools.product(*ranges) if self.contains(v)]
