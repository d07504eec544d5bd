"""Dual graphs of plane-curve singularities with smooth branches.

A dual graph is the complete graph on the branches of a germ, each edge
weighted by the intersection multiplicity of the two branches.  A weighted
complete graph arises this way iff it is *ultrametric*: in every triangle the
two smallest weights coincide.  Ultrametric graphs are the same thing as
rooted trees with integer levels (dendrograms); that tree, with children
sorted, is the canonical form used for isomorphism tests.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

LEAF_KEY = "•"


class GraphError(ValueError):
    """Base class for invalid dual graphs and type names."""


class TooFewBranches(GraphError):
    pass


class IncompleteGraph(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class UltrametricViolation(GraphError):
    def __init__(self, triple: tuple[int, int, int], weights: tuple[int, int, int]):
        self.triple = triple
        self.weights = weights
        i, j, k = triple
        super().__init__(
            f"ultrametric condition fails on branches {triple}: "
            f"w({i},{j})={weights[0]}, w({i},{k})={weights[1]}, w({j},{k})={weights[2]}"
        )


class SubsetTooSmall(GraphError):
    pass


class NotAnEmbedding(GraphError):
    pass


class WeightUnderflow(GraphError):
    pass


class SingularBranchType(GraphError):
    pass


class UnknownName(GraphError):
    pass


def _pair_index(i: int, j: int, r: int) -> int:
    if i > j:
        i, j = j, i
    return i * r - i * (i + 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class DualGraph:
    """Validated ultrametric weighted complete graph.

    ``weights`` is the dense upper-triangular table, row by row:
    w(0,1), w(0,2), ..., w(0,r-1), w(1,2), ...
    ``labels`` optionally records where the vertices came from (e.g. the
    vertices of a larger graph after a subtraction); it takes no part in
    equality.
    """

    r: int
    weights: tuple[int, ...]
    labels: tuple[int, ...] | None = field(default=None, compare=False)

    def w(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("no loop edges in a dual graph")
        return self.weights[_pair_index(i, j, self.r)]

    def pairs(self) -> Iterable[tuple[int, int]]:
        return combinations(range(self.r), 2)

    def edges(self) -> Iterable[tuple[int, int, int]]:
        for (i, j), w in zip(self.pairs(), self.weights):
            yield i, j, w

    @property
    def delta(self) -> int:
        return sum(self.weights)

    def matrix(self) -> list[list[int]]:
        m = [[0] * self.r for _ in range(self.r)]
        for i, j, w in self.edges():
            m[i][j] = m[j][i] = w
        return m

    def to_json(self) -> dict:
        return {"branches": self.r, "weights": [[i, j, w] for i, j, w in self.edges()]}


WeightTable = Union[Mapping[tuple[int, int], int], Iterable[Sequence[int]]]


def validate_dual_graph(r: int, weights: WeightTable) -> DualGraph:
    """Check a weight table and return the corresponding :class:`DualGraph`.

    ``weights`` is either a mapping ``{(i, j): w}`` or an iterable of
    ``(i, j, w)`` triples, 0-based, one entry per unordered pair.
    """
    if r < 2:
        raise TooFewBranches(f"a singular germ needs at least 2 smooth branches, got {r}")
    if isinstance(weights, Mapping):
        items = list(weights.items())
    else:
        items = [((t[0], t[1]), t[2]) for t in weights]
    table: dict[tuple[int, int], int] = {}
    for (i, j), w in items:
        if not (0 <= i < r and 0 <= j < r) or i == j:
            raise IncompleteGraph(f"pair ({i},{j}) is not an edge of a graph on {r} vertices")
        key = (min(i, j), max(i, j))
        if key in table:
            raise IncompleteGraph(f"pair {key} listed more than once")
        if not isinstance(w, int) or isinstance(w, bool):
            raise NonPositiveWeight(f"weight of {key} must be an integer, got {w!r}")
        if w < 1:
            raise NonPositiveWeight(f"weight of {key} is {w}; weights must be >= 1")
        table[key] = w
    missing = [p for p in combinations(range(r), 2) if p not in table]
    if missing:
        raise IncompleteGraph(f"missing weights for pairs {missing[:5]}" + (" ..." if len(missing) > 5 else ""))
    flat = tuple(table[p] for p in combinations(range(r), 2))
    g = DualGraph(r, flat)
    _check_ultrametric(g)
    return g


def _check_ultrametric(g: DualGraph) -> None:
    for i, j, k in combinations(range(g.r), 3):
        a, b, c = g.w(i, j), g.w(i, k), g.w(j, k)
        lo = sorted((a, b, c))
        if lo[0] != lo[1]:
            raise UltrametricViolation((i, j, k), (a, b, c))


def graph_from_matrix(m: Sequence[Sequence[int]]) -> DualGraph:
    r = len(m)
    return validate_dual_graph(r, {(i, j): m[i][j] for i, j in combinations(range(r), 2)})


def load_graph(path: str | Path) -> DualGraph:
    data = json.loads(Path(path).read_text())
    return graph_from_json(data)


def graph_from_json(data: Mapping) -> DualGraph:
    try:
        r = data["branches"]
        rows = data["weights"]
    except (KeyError, TypeError) as exc:
        raise GraphError("graph JSON needs 'branches' and 'weights'") from exc
    for row in rows:
        if len(row) != 3:
            raise GraphError(f"weight entry {row!r} is not [i, j, w]")
        if row[0] >= row[1]:
            raise GraphError(f"weight entry {row!r} must have i < j")
    return validate_dual_graph(r, rows)


# --- level trees -----------------------------------------------------------


@dataclass(frozen=True)
class LevelTree:
    """Internal node of the nested-cluster tree.

    Children are either ``LevelTree`` nodes (with strictly larger level) or
    ``int`` leaves naming branches.  The weight between two leaves is the
    level of their deepest common ancestor.
    """

    level: int
    children: tuple[Union["LevelTree", int], ...]

    @property
    def key(self) -> str:
        return _key(self)

    def leaves(self) -> list[int]:
        out: list[int] = []
        for c in self.children:
            if isinstance(c, LevelTree):
                out.extend(c.leaves())
            else:
                out.append(c)
        return out

    @property
    def size(self) -> int:
        return sum(c.size if isinstance(c, LevelTree) else 1 for c in self.children)


def _key(node: Union[LevelTree, int]) -> str:
    if not isinstance(node, LevelTree):
        return LEAF_KEY
    return f"({node.level}:{','.join(sorted(_key(c) for c in node.children))})"


def level_tree(g: DualGraph) -> LevelTree:
    """Nested clusters of ``g`` (leaves keep the labels of ``g``)."""
    return _cluster(g, list(range(g.r)))


def _cluster(g: DualGraph, members: list[int]) -> LevelTree:
    level = min(g.w(i, j) for i, j in combinations(members, 2))
    blocks: list[list[int]] = []
    for v in members:
        for b in blocks:
            if g.w(b[0], v) > level:
                b.append(v)
                break
        else:
            blocks.append([v])
    children = tuple(b[0] if len(b) == 1 else _cluster(g, b) for b in blocks)
    return LevelTree(level, children)


def _sorted_tree(node: LevelTree) -> LevelTree:
    kids = [c if not isinstance(c, LevelTree) else _sorted_tree(c) for c in node.children]
    kids.sort(key=_key)
    return LevelTree(node.level, tuple(kids))


def _relabel(node: LevelTree, counter: list[int], mapping: dict[int, int] | None) -> LevelTree:
    kids: list[Union[LevelTree, int]] = []
    for c in node.children:
        if isinstance(c, LevelTree):
            kids.append(_relabel(c, counter, mapping))
        else:
            if mapping is not None:
                mapping[c] = counter[0]
            kids.append(counter[0])
            counter[0] += 1
    return LevelTree(node.level, tuple(kids))


def graph_of_tree(tree: LevelTree) -> DualGraph:
    table: dict[tuple[int, int], int] = {}

    def walk(node: LevelTree) -> list[int]:
        groups = [walk(c) if isinstance(c, LevelTree) else [c] for c in node.children]
        for a, b in combinations(groups, 2):
            for i in a:
                for j in b:
                    table[(min(i, j), max(i, j))] = node.level
        return [v for grp in groups for v in grp]

    walk(tree)
    return validate_dual_graph(tree.size, table)


@dataclass(frozen=True, eq=False)
class SingularityType:
    """Topological type of a germ with smooth branches, in canonical form.

    ``graph`` is labelled by the DFS leaf order of the canonical ``tree``;
    all witnesses and vertex maps refer to that labelling.
    """

    key: str
    tree: LevelTree
    graph: DualGraph
    name: str | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SingularityType) and other.key == self.key

    def __hash__(self) -> int:
        return hash(self.key)

    def sort_key(self) -> tuple[int, str]:
        return (self.graph.r, self.key)

    def __lt__(self, other: "SingularityType") -> bool:
        return self.sort_key() < other.sort_key()

    @property
    def r(self) -> int:
        return self.graph.r

    @property
    def delta(self) -> int:
        return self.graph.delta

    @property
    def label(self) -> str:
        return self.name if self.name is not None else self.key

    @property
    def pretty(self) -> str:
        return pretty_name(self.name) if self.name is not None else self.key

    def __repr__(self) -> str:
        return f"SingularityType({self.label})"


def canonical_labelling(g: DualGraph) -> tuple[SingularityType, dict[int, int]]:
    """Canonical type of ``g`` plus the map old vertex -> canonical vertex."""
    tree = _sorted_tree(level_tree(g))
    mapping: dict[int, int] = {}
    tree = _relabel(tree, [0], mapping)
    return _from_canonical_tree(tree), mapping


def canonical_form(g: DualGraph) -> SingularityType:
    return canonical_labelling(g)[0]


def _from_canonical_tree(tree: LevelTree) -> SingularityType:
    graph = graph_of_tree(tree)
    return SingularityType(tree.key, tree, graph, registry_name(graph))


def type_from_tree(tree: LevelTree) -> SingularityType:
    return _from_canonical_tree(_relabel(_sorted_tree(tree), [0], None))


# --- registry --------------------------------------------------------------

_NAME_RE = re.compile(
    r"^(?:J(?P<j>10|22)|X(?P<x>9|12)|K\((?P<kp>\d+),(?P<kk>\d+)\)|(?P<letter>[ADEK])(?P<num>\d+))$"
)


def _complete(p: int, k: int = 1) -> DualGraph:
    return DualGraph(p, (k,) * (p * (p - 1) // 2))


def _triangle(a: int, b: int, c: int) -> DualGraph:
    return validate_dual_graph(3, {(0, 1): a, (0, 2): b, (1, 2): c})


def _named_graph(name: str) -> DualGraph:
    m = _NAME_RE.match(name.strip())
    if not m:
        raise UnknownName(f"unknown singularity name {name!r}")
    letter, num, j, x, kp, kk = (m.group(g) for g in ("letter", "num", "j", "x", "kp", "kk"))
    if j is not None:
        return _triangle(2, 2, 2) if j == "10" else _triangle(2, 2, 3)
    if x is not None:
        if x == "9":
            return _complete(4)
        return validate_dual_graph(4, {(0, 1): 2, (0, 2): 1, (0, 3): 1, (1, 2): 1, (1, 3): 1, (2, 3): 1})
    if kp is not None:
        p, k = int(kp), int(kk)
        if p < 2 or k < 1:
            raise UnknownName(f"K({p},{k}) needs p >= 2 and k >= 1")
        return _complete(p, k)
    n = int(num)
    if letter == "A":
        if n < 1:
            raise UnknownName(f"A{n} is not a singular type")
        if n % 2 == 0:
            raise SingularBranchType(f"A{n} has a singular branch")
        return _complete(2, (n + 1) // 2)
    if letter == "D":
        if n < 4:
            raise UnknownName(f"D{n} is not defined (need n >= 4)")
        if n % 2 == 1:
            raise SingularBranchType(f"D{n} has a singular branch")
        return _triangle(1, 1, (n - 2) // 2)
    if letter == "E":
        if n in (6, 7, 8):
            raise SingularBranchType(f"E{n} has a singular branch")
        raise UnknownName(f"unknown singularity name {name!r}")
    if letter == "K":
        if n < 2:
            raise UnknownName(f"K{n} needs at least 2 branches")
        return _complete(n)
    raise UnknownName(f"unknown singularity name {name!r}")


def make_named_type(name: str) -> SingularityType:
    return canonical_form(_named_graph(name))


def registry_name(g: DualGraph) -> str | None:
    """Preferred registry identifier for ``g``, or ``None`` if unnamed."""
    ws = sorted(g.weights)
    if g.r == 2:
        return f"A{2 * ws[0] - 1}"
    if g.r == 3:
        a, b, c = ws
        if a == b == 1:
            return f"D{2 * c + 2}"
        if (a, b, c) == (2, 2, 2):
            return "J10"
        if (a, b, c) == (2, 2, 3):
            return "J22"
    if g.r == 4:
        if ws == [1] * 6:
            return "X9"
        if ws == [1] * 5 + [2]:
            return "X12"
    if ws[0] == ws[-1]:
        return f"K{g.r}" if ws[0] == 1 else f"K({g.r},{ws[0]})"
    return None


_PRETTY = {"J10": "J_10", "J22": "J_{2,2}", "X9": "X_9", "X12": "X_{1,2}"}


def pretty_name(name: str) -> str:
    """Subscripted rendering of a registry identifier (``A7`` -> ``A_7``)."""
    if name in _PRETTY:
        return _PRETTY[name]
    if name.startswith("K("):
        return name
    return f"{name[0]}_{name[1:]}"


def is_omp(t: SingularityType) -> bool:
    return all(w == 1 for w in t.graph.weights)


def constant_weight(t: SingularityType) -> int | None:
    ws = set(t.graph.weights)
    return ws.pop() if len(ws) == 1 else None


# --- subgraphs and subtraction ---------------------------------------------


def full_subgraph(g: DualGraph, subset: Iterable[int]) -> DualGraph:
    vs = sorted(set(subset))
    if len(vs) < 2:
        raise SubsetTooSmall("a full subgraph needs at least 2 vertices")
    if vs[0] < 0 or vs[-1] >= g.r:
        raise GraphError(f"vertex subset {vs} out of range for {g.r} branches")
    weights = tuple(g.w(vs[a], vs[b]) for a, b in combinations(range(len(vs)), 2))
    return DualGraph(len(vs), weights, labels=tuple(vs))


def subtract_graph(g2: DualGraph, g1: DualGraph, embedding: Sequence[int] | Mapping[int, int]) -> list[DualGraph]:
    """Remove an embedded copy of ``g1`` from ``g2``.

    ``embedding[v]`` is the vertex of ``g2`` receiving vertex ``v`` of ``g1``.
    Edges whose weight drops to zero and vertices left isolated are erased;
    the remaining connected components are returned, each labelled by the
    ``g2`` vertices it occupies.
    """
    emb = [embedding[v] for v in range(g1.r)]
    if len(set(emb)) != len(emb) or any(not 0 <= x < g2.r for x in emb):
        raise NotAnEmbedding(f"vertex map {emb} is not injective into {g2.r} vertices")
    residual = list(g2.weights)
    for i, j, w in g1.edges():
        idx = _pair_index(emb[i], emb[j], g2.r)
        if residual[idx] < w:
            raise WeightUnderflow(
                f"edge ({emb[i]},{emb[j]}) has weight {residual[idx]} < {w} in the embedded graph"
            )
        residual[idx] -= w
    return _components(g2.r, residual)


def _components(r: int, residual: Sequence[int]) -> list[DualGraph]:
    adj: dict[int, set[int]] = {v: set() for v in range(r)}
    for (i, j), w in zip(combinations(range(r), 2), residual):
        if w > 0:
            adj[i].add(j)
            adj[j].add(i)
    seen: set[int] = set()
    out = []
    for v in range(r):
        if v in seen or not adj[v]:
            continue
        stack, comp = [v], []
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for x in adj[u]:
                if x not in seen:
                    seen.add(x)
                    stack.append(x)
        comp.sort()
        table = {(a, b): residual[_pair_index(comp[a], comp[b], r)] for a, b in combinations(range(len(comp)), 2)}
        zero = [(comp[a], comp[b]) for (a, b), w in table.items() if w == 0]
        if zero:
            raise IncompleteGraph(f"component {comp} is not complete: edges {zero} were erased")
        g = validate_dual_graph(len(comp), table)
        out.append(DualGraph(g.r, g.weights, labels=tuple(comp)))
    return out


# --- enumeration -------------------------------------------------------------


@lru_cache(maxsize=None)
def _trees(delta: int, min_level: int) -> tuple[LevelTree, ...]:
    """Canonical unlabelled trees of total weight ``delta``, root level >= ``min_level``."""
    out: list[LevelTree] = []
    for level in range(min_level, delta + 1):
        cands: list[tuple[Union[LevelTree, int], int, int]] = [(0, 0, 1)]
        for d in range(1, delta - level + 1):
            cands.extend((t, d, t.size) for t in _trees(d, level + 1))
        cands.sort(key=lambda c: _key(c[0]))

        def pick(start: int, chosen: list, n: int, used: int) -> None:
            for idx in range(start, len(cands)):
                node, d, size = cands[idx]
                total = used + d + level * n * size
                if total > delta:
                    continue
                chosen.append(node)
                if total == delta and len(chosen) >= 2:
                    out.append(LevelTree(level, tuple(chosen)))
                elif total < delta:
                    pick(idx, chosen, n + size, total)
                chosen.pop()

        pick(0, [], 0, 0)
    return tuple(out)


def enumerate_types_with_delta(n: int) -> list[SingularityType]:
    """All types with smooth branches and delta invariant ``n``, up to isomorphism."""
    if n < 1:
        return []
    types = {type_from_tree(t) for t in _trees(n, 1)}
    return sorted(types, key=SingularityType.sort_key)
