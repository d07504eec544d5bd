"""Decompositions of dual graphs into sums of dual graphs.

A delta-constant deformation S -> S_1 + ... + S_k of a germ with smooth
branches forces the dual graph of S to split as a sum of the dual graphs of
the S_i: every S_i is mapped injectively into the branches of S, and over
each pair of branches the weights of the edges mapped there add up to the
weight of S.  :func:`decompose_check` searches for such maps.

The search is an exact cover over weighted edges.  It always branches on the
first edge (in lexicographic order) that still carries residual weight, and
tries every placement of every remaining component that covers it.
Placements are generated once per automorphism orbit of the component,
using the level tree of the component with the two vertices landing on the
branching edge marked.
"""

from __future__ import annotations

import enum
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence, Union

from .graph import (
    LEAF_KEY,
    DualGraph,
    LevelTree,
    SingularityType,
    _components,
    canonical_form,
    enumerate_types_with_delta,
    make_named_type,
)
from .invariants import binom2

DEFAULT_NODE_BUDGET = 10**7


class DeltaMismatch(ValueError):
    pass


class InvalidHint(ValueError):
    pass


class CriterionFailed(ValueError):
    pass


class Outcome(str, enum.Enum):
    WITNESS = "WITNESS"
    NO_DECOMPOSITION = "NO_DECOMPOSITION"
    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = DEFAULT_NODE_BUDGET
    max_millis: int | None = None

    def __post_init__(self) -> None:
        if self.max_nodes < 1 or (self.max_millis is not None and self.max_millis < 1):
            raise ValueError("budgets must be positive")


@dataclass(frozen=True)
class DecompositionWitness:
    """``maps[i][v]``: source vertex receiving vertex ``v`` of target ``i``.

    Target vertices use the canonical labelling of the target type; source
    vertices use the labelling of the source graph handed to the search.
    """

    maps: tuple[tuple[int, ...], ...]

    def to_json(self) -> list:
        return [list(m) for m in self.maps]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[int]]) -> "DecompositionWitness":
        return cls(tuple(tuple(int(x) for x in m) for m in data))


@dataclass(frozen=True)
class DecompositionResult:
    status: Outcome
    witness: DecompositionWitness | None = None
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.status is Outcome.WITNESS


TypeLike = Union[SingularityType, DualGraph]


def _as_graph(t: TypeLike) -> DualGraph:
    return t.graph if isinstance(t, SingularityType) else t


def _as_type(t: TypeLike) -> SingularityType:
    return t if isinstance(t, SingularityType) else canonical_form(t)


def target_order(t: SingularityType) -> tuple:
    """Display order inside a multiset: larger delta first, then more branches."""
    return (-t.delta, -t.r, t.key)


# --- witness checking ------------------------------------------------------


def verify_witness(source: TypeLike, targets: Sequence[TypeLike], witness: DecompositionWitness) -> bool:
    """Independent check: injective maps whose pushed-forward weights sum exactly."""
    g = _as_graph(source)
    graphs = [_as_graph(t) for t in targets]
    if len(witness.maps) != len(graphs):
        return False
    total: Counter = Counter()
    hit: set[int] = set()
    for tg, m in zip(graphs, witness.maps):
        if len(m) != tg.r or len(set(m)) != tg.r or any(not 0 <= x < g.r for x in m):
            return False
        hit.update(m)
        for i, j, w in tg.edges():
            total[frozenset((m[i], m[j]))] += w
    expected = {frozenset((i, j)): w for i, j, w in g.edges()}
    return dict(total) == expected and hit == set(range(g.r))


# --- functional bounds -----------------------------------------------------


def _iroot(n: int, e: int) -> int:
    """floor(n ** (1/e)) for n >= 0."""
    if e == 1 or n < 2:
        return n
    if e == 2:
        return math.isqrt(n)
    x = 1 << ((n.bit_length() + e - 1) // e)
    while True:
        y = ((e - 1) * x + n // x ** (e - 1)) // e
        if y >= x:
            break
        x = y
    while x**e > n:
        x -= 1
    while (x + 1) ** e <= n:
        x += 1
    return x


def root_sum_exceeds(lhs: int, rhs: Sequence[int], e: int, max_bits: int = 512) -> bool:
    """Decide ``lhs**(1/e) > sum(x**(1/e) for x in rhs)``; undecidable ties count as False."""
    if e == 1:
        return lhs > sum(rhs)
    bits = 32
    while bits <= max_bits:
        scale = 1 << (e * bits)
        l_lo = _iroot(lhs * scale, e)
        l_hi = l_lo if l_lo**e == lhs * scale else l_lo + 1
        r_lo = 0
        r_hi = 0
        for x in rhs:
            y = _iroot(x * scale, e)
            r_lo += y
            r_hi += y if y**e == x * scale else y + 1
        if l_lo > r_hi:
            return True
        if l_hi <= r_lo:
            return False
        bits *= 2
    return False


def functional_violations(source: DualGraph, targets: Sequence[DualGraph]) -> list[dict]:
    """Necessary conditions for a decomposition that only look at weight lists.

    * pairs of branches: C(r, 2) <= sum C(r_i, 2);
    * Minkowski: ||w||_e <= sum_i ||w_i||_e for e = 1, 2, 3;
    * power mean: sum w^e <= M^(e-1) sum_i sum w_i^e for e = 2, 3, where M
      bounds the number of components sharing one edge (at most the number
      of components and at most the largest source weight).
    """
    out = []
    pairs = binom2(source.r)
    target_pairs = sum(binom2(t.r) for t in targets)
    if pairs > target_pairs:
        out.append({"check": "branch_pairs", "source": pairs, "targets": target_pairs})
    for e in (1, 2, 3):
        lhs = sum(w**e for w in source.weights)
        rhs = [sum(w**e for w in t.weights) for t in targets]
        if root_sum_exceeds(lhs, rhs, e):
            out.append({"check": f"minkowski_{e}", "source": lhs, "targets": rhs})
    share = min(len(targets), max(source.weights)) if targets else 0
    for e in (2, 3):
        lhs = sum(w**e for w in source.weights)
        rhs = share ** (e - 1) * sum(sum(w**e for w in t.weights) for t in targets)
        if lhs > rhs:
            out.append({"check": f"power_mean_{e}", "source": lhs, "bound": rhs})
    return out


# --- placements ------------------------------------------------------------


def _marked_key(node: Union[LevelTree, int], marks: dict[int, str]) -> str:
    if not isinstance(node, LevelTree):
        return marks.get(node, LEAF_KEY)
    return f"({node.level}:{','.join(sorted(_marked_key(c, marks) for c in node.children))})"


def _layout(tree: LevelTree, marks: dict[int, str]) -> tuple[list[int], list[tuple[int, int]]]:
    """DFS order of the unmarked leaves and the orbit-breaking constraints.

    A constraint ``(x, y)`` demands ``image[x] < image[y]``: among
    interchangeable siblings the first leaves must land in increasing order.
    """
    order: list[int] = []
    constraints: list[tuple[int, int]] = []

    def first_leaf(node: Union[LevelTree, int]) -> int:
        while isinstance(node, LevelTree):
            node = node.children[0]
        return node

    def walk(node: Union[LevelTree, int]) -> Union[LevelTree, int]:
        if not isinstance(node, LevelTree):
            if node not in marks:
                order.append(node)
            return node
        kids = sorted(node.children, key=lambda c: _marked_key(c, marks))
        # walk after sorting so the DFS order follows the sorted layout
        rebuilt = []
        for c in kids:
            rebuilt.append(walk(c))
        keys = [_marked_key(c, marks) for c in kids]
        for a in range(len(kids) - 1):
            if keys[a] == keys[a + 1]:
                constraints.append((first_leaf(rebuilt[a]), first_leaf(rebuilt[a + 1])))
        return LevelTree(node.level, tuple(rebuilt))

    walk(tree)
    return order, constraints


@dataclass
class _TypeInfo:
    t: SingularityType
    w: list[list[int]]
    n: int
    maxw: int
    pairs: int
    # per ordered-pair orbit representative: (a, b, order, constraints)
    edge_layouts: list[tuple[int, int, list[int], list[tuple[int, int]]]] = field(default_factory=list)
    free_layout: tuple[list[int], list[tuple[int, int]]] | None = None


def _type_info(t: SingularityType) -> _TypeInfo:
    g = t.graph
    info = _TypeInfo(t, g.matrix(), g.r, max(g.weights), binom2(g.r))
    seen: set[str] = set()
    for a in range(g.r):
        for b in range(g.r):
            if a == b:
                continue
            marks = {a: "A", b: "B"}
            k = _marked_key(t.tree, marks)
            if k in seen:
                continue
            seen.add(k)
            order, cons = _layout(t.tree, marks)
            info.edge_layouts.append((a, b, order, cons))
    info.free_layout = _layout(t.tree, {})
    return info


def _extend(
    info: _TypeInfo,
    R: list[list[int]],
    img: list[int],
    order: list[int],
    cons: list[tuple[int, int]],
    pos: int,
    used: set[int],
    r: int,
) -> Iterator[list[int]]:
    if pos == len(order):
        yield img
        return
    x = order[pos]
    lower = -1
    for a, b in cons:
        if b == x and img[a] >= 0:
            lower = max(lower, img[a])
    assigned = [y for y in range(info.n) if img[y] >= 0]
    wx = info.w[x]
    for cand in range(lower + 1, r):
        if cand in used:
            continue
        row = R[cand]
        if all(row[img[y]] >= wx[y] for y in assigned):
            img[x] = cand
            used.add(cand)
            yield from _extend(info, R, img, order, cons, pos + 1, used, r)
            used.discard(cand)
            img[x] = -1


def _placements_on_edge(info: _TypeInfo, R: list[list[int]], u: int, v: int, r: int) -> Iterator[tuple[int, ...]]:
    avail = R[u][v]
    for a, b, order, cons in info.edge_layouts:
        if info.w[a][b] > avail:
            continue
        img = [-1] * info.n
        img[a], img[b] = u, v
        for done in _extend(info, R, img, order, cons, 0, {u, v}, r):
            yield tuple(done)


def embeds(t: TypeLike, g: TypeLike) -> bool:
    """Whether ``t`` maps injectively into ``g`` without exceeding any weight."""
    info = _type_info(_as_type(t))
    host = _as_graph(g)
    if info.n > host.r:
        return False
    order, cons = info.free_layout
    img = [-1] * info.n
    return next(_extend(info, host.matrix(), img, order, cons, 0, set(), host.r), None) is not None


class _BudgetExceeded(Exception):
    pass


class _Search:
    def __init__(self, g: DualGraph, infos: list[_TypeInfo], counts: list[int], budget: SearchBudget):
        self.r = g.r
        self.R = g.matrix()
        self.infos = infos
        self.counts = counts
        self.budget = budget
        self.nodes = 0
        self.deadline = None if budget.max_millis is None else time.monotonic() + budget.max_millis / 1000
        self.solution: list[tuple[int, tuple[int, ...]]] = []

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget.max_nodes:
            raise _BudgetExceeded
        if self.deadline is not None and self.nodes % 512 == 0 and time.monotonic() > self.deadline:
            raise _BudgetExceeded

    def _first_edge(self) -> tuple[int, int] | None:
        R = self.R
        for u in range(self.r):
            row = R[u]
            for v in range(u + 1, self.r):
                if row[v] > 0:
                    return u, v
        return None

    def _hopeless(self) -> bool:
        positive = 0
        heaviest = 0
        for u in range(self.r):
            row = self.R[u]
            for v in range(u + 1, self.r):
                if row[v] > 0:
                    positive += 1
                    heaviest = max(heaviest, row[v])
        capacity = sum(c * info.pairs for c, info in zip(self.counts, self.infos))
        stack = sum(c * info.maxw for c, info in zip(self.counts, self.infos))
        return positive > capacity or heaviest > stack

    def _apply(self, info: _TypeInfo, img: tuple[int, ...], sign: int) -> None:
        R = self.R
        for a in range(info.n):
            ia = img[a]
            wa = info.w[a]
            for b in range(a + 1, info.n):
                ib = img[b]
                R[ia][ib] -= sign * wa[b]
                R[ib][ia] = R[ia][ib]

    def _pattern(self, ti: int, img: tuple[int, ...]) -> tuple:
        info = self.infos[ti]
        return (ti, tuple(sorted(
            (min(img[a], img[b]), max(img[a], img[b]), info.w[a][b])
            for a, b in combinations(range(info.n), 2)
        )))

    def run(self) -> bool:
        return self._rec(None, None)

    def _rec(self, prev_edge: tuple[int, int] | None, prev_key: tuple | None) -> bool:
        edge = self._first_edge()
        if edge is None:
            return not any(self.counts)
        if self._hopeless():
            return False
        u, v = edge
        for ti, info in enumerate(self.infos):
            if not self.counts[ti]:
                continue
            for img in _placements_on_edge(info, self.R, u, v, self.r):
                key = self._pattern(ti, img)
                if edge == prev_edge and key < prev_key:
                    continue
                self._tick()
                self._apply(info, img, +1)
                self.counts[ti] -= 1
                self.solution.append((ti, img))
                if self._rec(edge, key):
                    return True
                self.solution.pop()
                self.counts[ti] += 1
                self._apply(info, img, -1)
        return False


def decompose_check(
    source: TypeLike,
    targets: Sequence[TypeLike],
    budget: SearchBudget | None = None,
    hint: DecompositionWitness | None = None,
) -> DecompositionResult:
    """Search for maps realising ``source = sum(targets)`` on dual graphs."""
    g = _as_graph(source)
    types = [_as_type(t) for t in targets]
    total = sum(t.delta for t in types)
    if total != g.delta:
        raise DeltaMismatch(f"delta of source is {g.delta}, targets sum to {total}")
    if hint is not None:
        if not verify_witness(g, [t.graph for t in types], hint):
            raise InvalidHint("the supplied witness does not realise the decomposition")
        return DecompositionResult(Outcome.WITNESS, hint, 0)
    if any(t.r > g.r for t in types) or functional_violations(g, [t.graph for t in types]):
        return DecompositionResult(Outcome.NO_DECOMPOSITION, None, 0)

    distinct = sorted(set(types), key=target_order)
    infos = [_type_info(t) for t in distinct]
    counts = [sum(1 for x in types if x == t) for t in distinct]
    search = _Search(g, infos, counts, budget or SearchBudget())
    try:
        found = search.run()
    except _BudgetExceeded:
        return DecompositionResult(Outcome.BUDGET_EXCEEDED, None, search.nodes)
    if not found:
        return DecompositionResult(Outcome.NO_DECOMPOSITION, None, search.nodes)

    pools: dict[int, list[tuple[int, ...]]] = {}
    for ti, img in search.solution:
        pools.setdefault(ti, []).append(img)
    index = {t.key: i for i, t in enumerate(distinct)}
    maps = [pools[index[t.key]].pop(0) for t in types]
    witness = DecompositionWitness(tuple(maps))
    assert verify_witness(g, [t.graph for t in types], witness)
    return DecompositionResult(Outcome.WITNESS, witness, search.nodes)


# --- enumeration of targets ------------------------------------------------


@dataclass(frozen=True)
class TargetEntry:
    targets: tuple[SingularityType, ...]
    witness: DecompositionWitness


@dataclass(frozen=True)
class TargetEnumeration:
    entries: tuple[TargetEntry, ...]
    complete: bool
    skipped: tuple[tuple[SingularityType, ...], ...] = ()

    def multisets(self) -> list[tuple[SingularityType, ...]]:
        return [e.targets for e in self.entries]


def normalize_targets(targets: Iterable[SingularityType]) -> tuple[SingularityType, ...]:
    return tuple(sorted(targets, key=target_order))


def candidate_types(source: TypeLike) -> list[SingularityType]:
    """Types that embed weight-wise into ``source`` (each could be one part)."""
    g = _as_graph(source)
    out = []
    for d in range(1, g.delta + 1):
        for t in enumerate_types_with_delta(d):
            if t.r <= g.r and max(t.graph.weights) <= max(g.weights) and embeds(t, g):
                out.append(t)
    return out


def _multisets(cands: list[SingularityType], delta: int) -> Iterator[tuple[SingularityType, ...]]:
    cands = sorted(cands, key=target_order)

    def rec(start: int, left: int, acc: list[SingularityType]) -> Iterator[tuple[SingularityType, ...]]:
        if left == 0:
            yield tuple(acc)
            return
        for i in range(start, len(cands)):
            t = cands[i]
            if t.delta <= left:
                acc.append(t)
                yield from rec(i, left - t.delta, acc)
                acc.pop()

    yield from rec(0, delta, [])


def enumerate_decomposition_targets(source: TypeLike, budget: SearchBudget | None = None) -> TargetEnumeration:
    """Every non-trivial multiset of types the dual graph of ``source`` splits into."""
    st = _as_type(source)
    g = _as_graph(source)
    entries = []
    skipped = []
    for ms in _multisets(candidate_types(g), g.delta):
        if len(ms) == 1 and ms[0] == st:
            continue
        res = decompose_check(g, ms, budget)
        if res.status is Outcome.WITNESS:
            entries.append(TargetEntry(ms, res.witness))
        elif res.status is Outcome.BUDGET_EXCEEDED:
            skipped.append(ms)
    entries.sort(key=lambda e: (len(e.targets), [target_order(t) for t in e.targets]))
    return TargetEnumeration(tuple(entries), not skipped, tuple(skipped))


# --- canonical decomposition into ordinary multiple points ------------------


@dataclass(frozen=True)
class OMPDecomposition:
    """Canonical splitting into ordinary multiple points.

    ``blocks`` lists, for every K_p copy, the source vertices it occupies
    (one entry per copy, so a w-fold subtraction contributes w blocks).
    """

    blocks: tuple[tuple[int, ...], ...]

    @property
    def parts(self) -> dict[int, int]:
        return dict(sorted(Counter(len(b) for b in self.blocks).items(), reverse=True))

    def targets(self) -> tuple[SingularityType, ...]:
        return normalize_targets(make_named_type(f"K{len(b)}") for b in self.blocks)

    def witness(self) -> DecompositionWitness:
        """Witness aligned with :meth:`targets`."""
        order = sorted(self.blocks, key=lambda b: (-len(b), b))
        return DecompositionWitness(tuple(tuple(b) for b in order))

    @property
    def count(self) -> int:
        return len(self.blocks)


def canonical_omp_decomposition(source: TypeLike) -> OMPDecomposition:
    g = _as_graph(source)
    blocks: list[tuple[int, ...]] = []
    stack: list[tuple[DualGraph, tuple[int, ...]]] = [(g, tuple(range(g.r)))]
    while stack:
        comp, verts = stack.pop()
        wmin = min(comp.weights)
        blocks.extend([verts] * wmin)
        residual = [w - wmin for w in comp.weights]
        for sub in _components(comp.r, residual):
            stack.append((sub, tuple(verts[x] for x in sub.labels)))
    blocks.sort(key=lambda b: (-len(b), b))
    return OMPDecomposition(tuple(blocks))


def collide_nodes(n: int) -> list[SingularityType]:
    """Every type that a collision of ``n`` nodes can produce.

    Each dual graph splits into its delta unit edges, so these are exactly
    the types with delta = n.
    """
    return enumerate_types_with_delta(n)


# --- ordinary multiple points into ordinary multiple points -----------------


class Criterion(str, enum.Enum):
    POSSIBLE = "POSSIBLE"
    IMPOSSIBLE = "IMPOSSIBLE"
    NOT_APPLICABLE = "NOT_APPLICABLE"


def leftover_nodes(p: int, parts: Sequence[int]) -> int:
    return binom2(p) - sum(binom2(x) for x in parts)


def omp_criterion(p: int, parts: Sequence[int]) -> Criterion:
    """K_p -> K_{p_1} + ... + K_{p_k} + nodes, for parts all >= max(k-1, 3)."""
    if p < 2 or not parts:
        raise ValueError("need p >= 2 and at least one part")
    if any(x < 2 for x in parts):
        raise ValueError(f"parts must be multiplicities >= 2, got {list(parts)}")
    k = len(parts)
    if leftover_nodes(p, parts) < 0:
        return Criterion.IMPOSSIBLE
    if any(x < max(k - 1, 3) for x in parts):
        return Criterion.NOT_APPLICABLE
    return Criterion.POSSIBLE if p + binom2(k) >= sum(parts) else Criterion.IMPOSSIBLE


@dataclass(frozen=True)
class ArrangementIncidence:
    """Combinatorial line arrangement: lines ``1..lines``, points as sets of lines.

    Every pair of lines meets in exactly one listed point; a point on m lines
    is an ordinary m-fold point (m = 2 is a node).
    """

    lines: int
    points: tuple[tuple[int, ...], ...]

    def multiplicities(self) -> dict[int, int]:
        return dict(sorted(Counter(len(pt) for pt in self.points).items(), reverse=True))

    @property
    def nodes(self) -> int:
        return sum(1 for pt in self.points if len(pt) == 2)

    def is_consistent(self) -> bool:
        seen: set[tuple[int, int]] = set()
        for pt in self.points:
            if len(pt) < 2 or len(set(pt)) != len(pt) or not all(1 <= x <= self.lines for x in pt):
                return False
            for pair in combinations(sorted(pt), 2):
                if pair in seen:
                    return False
                seen.add(pair)
        return len(seen) == binom2(self.lines)

    def witness(self) -> tuple[tuple[SingularityType, ...], DecompositionWitness]:
        """Dual-graph witness for K_lines: each point is a complete graph on its lines."""
        pts = sorted(self.points, key=lambda pt: (-len(pt), pt))
        targets = tuple(make_named_type(f"K{len(pt)}") for pt in pts)
        return targets, DecompositionWitness(tuple(tuple(x - 1 for x in pt) for pt in pts))

    def to_json(self) -> dict:
        return {"lines": self.lines, "points": [{"lines": list(pt)} for pt in self.points]}

    @classmethod
    def from_json(cls, data: dict) -> "ArrangementIncidence":
        return cls(int(data["lines"]), tuple(tuple(pt["lines"]) for pt in data["points"]))


def construct_omp_witness(p: int, parts: Sequence[int]) -> ArrangementIncidence:
    """Lines realising K_p -> sum K_{p_i} + nodes.

    Take k points in general position and the C(k, 2) lines joining them,
    add p_i - (k - 1) further lines through the i-th point, then fill up to
    p lines with lines in general position.
    """
    if omp_criterion(p, parts) is not Criterion.POSSIBLE:
        raise CriterionFailed(f"K{p} -> {list(parts)} does not satisfy the criterion")
    k = len(parts)
    through: list[list[int]] = [[] for _ in range(k)]
    line = 0
    for i, j in combinations(range(k), 2):
        line += 1
        through[i].append(line)
        through[j].append(line)
    for i, pi in enumerate(parts):
        for _ in range(pi - (k - 1)):
            line += 1
            through[i].append(line)
    line += p - sum(parts) + binom2(k)
    assert line == p
    points = [tuple(sorted(t)) for t in through]
    covered = {pair for pt in points for pair in combinations(pt, 2)}
    points.extend(pair for pair in combinations(range(1, p + 1), 2) if pair not in covered)
    inc = ArrangementIncidence(p, tuple(points))
    assert inc.is_consistent()
    return inc
