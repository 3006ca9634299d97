"""Quivers, dimension vectors, torus weights and colored shuffles.

Vertices are kept as strings in declaration order; every internal ordering
(variable indexing, shuffle blocks) follows that order so that outputs are
deterministic.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb, prod
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import GradingError, QuiverError, ShapeMismatch

__all__ = [
    "Arrow",
    "Quiver",
    "FramedQuiver",
    "DimPair",
    "ColoredPermutation",
    "ColoredShuffle",
    "default_torus_weights",
    "build_framed_quiver",
    "colored_shuffles",
    "shuffle_count",
    "sl2",
    "jordan",
    "type_a",
    "builtin_quiver",
    "load_quiver",
]


@dataclass(frozen=True)
class Arrow:
    src: str
    tgt: str
    m_h: int | None = None
    m_hstar: int | None = None

    @property
    def weights(self) -> tuple[int, int]:
        if self.m_h is None or self.m_hstar is None:
            raise QuiverError(f"arrow {self.src}->{self.tgt} has no torus weights")
        return self.m_h, self.m_hstar


@dataclass(frozen=True)
class Quiver:
    vertices: tuple[str, ...]
    arrows: tuple[Arrow, ...] = ()
    framing: tuple[int, ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        verts = tuple(str(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(set(verts)) != len(verts):
            raise QuiverError(f"duplicate vertex identifiers in {verts}")
        known = set(verts)
        arrows = []
        for a in self.arrows:
            a = Arrow(str(a.src), str(a.tgt), a.m_h, a.m_hstar)
            if a.src not in known or a.tgt not in known:
                raise QuiverError(f"arrow {a.src}->{a.tgt} uses an undeclared vertex")
            arrows.append(a)
        if any(a.m_h is None or a.m_hstar is None for a in arrows):
            defaults = default_torus_weights(Quiver(verts, tuple(Arrow(a.src, a.tgt, 0, 0) for a in arrows)))
            arrows = [
                a if a.m_h is not None and a.m_hstar is not None else Arrow(a.src, a.tgt, *d)
                for a, d in zip(arrows, defaults)
            ]
        object.__setattr__(self, "arrows", tuple(arrows))
        if self.framing is not None:
            fr = tuple(int(x) for x in self.framing)
            if len(fr) != len(verts) or any(x < 0 for x in fr):
                raise QuiverError("framing must be a natural number per vertex")
            object.__setattr__(self, "framing", fr)

    def index(self, vertex) -> int:
        try:
            return self.vertices.index(str(vertex))
        except ValueError:
            raise QuiverError(f"unknown vertex {vertex!r}") from None

    def vector(self, values: Mapping | Sequence[int] | int | None) -> tuple[int, ...]:
        """Normalize a per-vertex natural-number function to a tuple in vertex order."""
        n = len(self.vertices)
        if values is None:
            return (0,) * n
        if isinstance(values, int):
            if n != 1:
                raise GradingError("a bare integer grading needs a one-vertex quiver")
            values = (values,)
        if isinstance(values, Mapping):
            out = [0] * n
            for k, x in values.items():
                out[self.index(k)] = int(x)
        else:
            out = [int(x) for x in values]
            if len(out) != n:
                raise GradingError(f"expected {n} entries, got {len(out)}")
        if any(x < 0 for x in out):
            raise GradingError("dimension vectors take natural-number values")
        return tuple(out)

    def dims(self, v=None, w=None) -> DimPair:
        return DimPair(self.vector(v), self.vector(w))

    def unit_vector(self, vertex) -> DimPair:
        v = [0] * len(self.vertices)
        v[self.index(vertex)] = 1
        return DimPair(tuple(v), (0,) * len(self.vertices))

    def to_json(self) -> dict:
        data = {
            "vertices": [_json_vertex(v) for v in self.vertices],
            "arrows": [
                {"src": _json_vertex(a.src), "tgt": _json_vertex(a.tgt), "m_h": a.m_h, "m_hstar": a.m_hstar}
                for a in self.arrows
            ],
        }
        if self.framing is not None:
            data["framing"] = {_json_vertex(v): x for v, x in zip(self.vertices, self.framing)}
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> Quiver:
        if not isinstance(data, Mapping) or "vertices" not in data:
            raise QuiverError("quiver JSON needs a 'vertices' list")
        vertices = tuple(str(v) for v in data["vertices"])
        arrows = []
        for rec in data.get("arrows", []):
            try:
                arrows.append(Arrow(str(rec["src"]), str(rec["tgt"]), rec.get("m_h"), rec.get("m_hstar")))
            except (KeyError, TypeError) as exc:
                raise QuiverError(f"malformed arrow record {rec!r}") from exc
        for a in arrows:
            for m in (a.m_h, a.m_hstar):
                if m is not None and not isinstance(m, int):
                    raise QuiverError(f"torus weights must be integers, got {m!r}")
        framing = None
        if data.get("framing") is not None:
            fr = data["framing"]
            unknown = [k for k in fr if str(k) not in vertices]
            if unknown:
                raise QuiverError(f"framing names unknown vertices {unknown}")
            framing = tuple(int(fr.get(v, fr.get(_json_vertex(v), 0))) for v in vertices)
        return cls(vertices, tuple(arrows), framing, name=str(data.get("name", "")))


def _json_vertex(v: str):
    return int(v) if v.lstrip("-").isdigit() else v


def load_quiver(path: str | Path) -> Quiver:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise QuiverError(f"cannot read quiver file {path}: {exc}") from exc
    return Quiver.from_json(data)


def default_torus_weights(q: Quiver) -> list[tuple[int, int]]:
    """Weights (a+2-2p, -a+2p) for the p-th of the a parallel arrows i->j.

    Parallel arrows are enumerated in declaration order, so the result depends
    on the order of ``q.arrows``.
    """
    total = defaultdict(int)
    for a in q.arrows:
        total[a.src, a.tgt] += 1
    seen = defaultdict(int)
    out = []
    for a in q.arrows:
        seen[a.src, a.tgt] += 1
        n, p = total[a.src, a.tgt], seen[a.src, a.tgt]
        out.append((n + 2 - 2 * p, -n + 2 * p))
    return out


@dataclass(frozen=True)
class FramedQuiver:
    quiver: Quiver
    framing: tuple[int, ...]
    framing_nodes: tuple[str, ...]
    framing_arrows: tuple[tuple[str, str], ...]


def build_framed_quiver(q: Quiver, w: Mapping | Sequence[int] | int | None) -> FramedQuiver:
    """Attach one framing node (and one framing arrow) to every vertex with w > 0."""
    try:
        wv = q.vector(w)
    except GradingError as exc:
        raise QuiverError(str(exc)) from exc
    nodes, arrows = [], []
    for vertex, k in zip(q.vertices, wv):
        if k:
            node = f"w:{vertex}"
            nodes.append(node)
            arrows.append((vertex, node))
    return FramedQuiver(q, wv, tuple(nodes), tuple(arrows))


@dataclass(frozen=True)
class DimPair:
    """Pair (v, w) of per-vertex dimensions, stored in the quiver's vertex order."""

    v: tuple[int, ...]
    w: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(int(x) for x in self.v))
        object.__setattr__(self, "w", tuple(int(x) for x in self.w))
        if len(self.v) != len(self.w):
            raise GradingError("v and w must be indexed by the same vertex set")
        if any(x < 0 for x in self.v + self.w):
            raise GradingError("dimension vectors take natural-number values")

    def __add__(self, other: DimPair) -> DimPair:
        if len(self.v) != len(other.v):
            raise GradingError("gradings over different vertex sets")
        return DimPair(
            tuple(a + b for a, b in zip(self.v, other.v)),
            tuple(a + b for a, b in zip(self.w, other.w)),
        )

    @property
    def is_zero(self) -> bool:
        return not any(self.v) and not any(self.w)

    def __str__(self):
        return f"v={list(self.v)} w={list(self.w)}"


@dataclass(frozen=True)
class ColoredPermutation:
    """Per-vertex permutations of the lambda and z variable indices.

    ``lam[i][s-1]`` is the image of index ``s`` at vertex ``i`` (1-based), and
    the action renames ``x_s`` to ``x_{sigma(s)}``.
    """

    lam: tuple[tuple[int, ...], ...]
    z: tuple[tuple[int, ...], ...]

    @classmethod
    def identity(cls, d: DimPair) -> ColoredPermutation:
        return cls(
            tuple(tuple(range(1, n + 1)) for n in d.v),
            tuple(tuple(range(1, n + 1)) for n in d.w),
        )

    @property
    def shape(self) -> DimPair:
        return DimPair(tuple(len(b) for b in self.lam), tuple(len(b) for b in self.z))

    def compose(self, other: ColoredPermutation) -> ColoredPermutation:
        """Return ``self o other`` (apply ``other`` first)."""
        if self.shape != other.shape:
            raise ShapeMismatch("cannot compose permutations of different shapes")

        def comp(a, b):
            return tuple(tuple(x[y - 1] for y in yb) for x, yb in zip(a, b))

        return ColoredPermutation(comp(self.lam, other.lam), comp(self.z, other.z))

    def inverse(self) -> ColoredPermutation:
        def inv(blocks):
            out = []
            for b in blocks:
                r = [0] * len(b)
                for s, t in enumerate(b, 1):
                    r[t - 1] = s
                out.append(tuple(r))
            return tuple(out)

        return ColoredPermutation(inv(self.lam), inv(self.z))

    def sign(self) -> int:
        sgn = 1
        for b in self.lam + self.z:
            for i in range(len(b)):
                for j in range(i + 1, len(b)):
                    if b[i] > b[j]:
                        sgn = -sgn
        return sgn

    def is_shuffle(self, d1: DimPair, d2: DimPair) -> bool:
        """True iff each block keeps the relative order of both input blocks."""
        def ok(blocks, n1s):
            for b, n1 in zip(blocks, n1s):
                first, second = b[:n1], b[n1:]
                if list(first) != sorted(first) or list(second) != sorted(second):
                    return False
            return True

        if self.shape != d1 + d2:
            return False
        return ok(self.lam, d1.v) and ok(self.z, d1.w)


ColoredShuffle = ColoredPermutation


def _block_shuffles(n1: int, n2: int) -> list[tuple[int, ...]]:
    total = n1 + n2
    out = []
    for first in combinations(range(1, total + 1), n1):
        chosen = set(first)
        out.append(first + tuple(k for k in range(1, total + 1) if k not in chosen))
    return out


def colored_shuffles(d1: DimPair, d2: DimPair) -> Iterator[ColoredPermutation]:
    """Enumerate Sh(v1, v2) x Sh(w1, w2) in lexicographic order."""
    if len(d1.v) != len(d2.v):
        raise GradingError("gradings over different vertex sets")
    blocks = [_block_shuffles(a, b) for a, b in zip(d1.v, d2.v)]
    blocks += [_block_shuffles(a, b) for a, b in zip(d1.w, d2.w)]
    nv = len(d1.v)
    for choice in product(*blocks):
        yield ColoredPermutation(tuple(choice[:nv]), tuple(choice[nv:]))


def shuffle_count(d1: DimPair, d2: DimPair) -> int:
    return prod(comb(a + b, a) for a, b in zip(d1.v + d1.w, d2.v + d2.w))


def sl2() -> Quiver:
    return Quiver(("1",), (), name="sl2")


def jordan() -> Quiver:
    return Quiver(("1",), (Arrow("1", "1"),), name="jordan")


def type_a(rank: int) -> Quiver:
    """Linear quiver 1 -> 2 -> ... -> rank-1 (the sl_rank Dynkin quiver)."""
    if rank < 2:
        raise QuiverError("type A quiver needs rank >= 2")
    verts = tuple(str(i) for i in range(1, rank))
    arrows = tuple(Arrow(str(i), str(i + 1)) for i in range(1, rank - 1))
    return Quiver(verts, arrows, name=f"A{rank - 1}")


_BUILTINS = {"sl2": sl2, "jordan": jordan, "a2": lambda: type_a(3), "a3": lambda: type_a(4)}


def builtin_quiver(name: str) -> Quiver:
    try:
        return _BUILTINS[name.lower()]()
    except KeyError:
        raise QuiverError(f"unknown builtin quiver {name!r}; choose from {sorted(_BUILTINS)}") from None


def resolve_quiver(spec: str | None) -> Quiver:
    """A builtin name or a path to a JSON quiver file (default sl2)."""
    if spec is None:
        return sl2()
    if spec.lower() in _BUILTINS:
        return builtin_quiver(spec)
    return load_quiver(spec)

