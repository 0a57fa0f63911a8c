"""Top-k directed Steiner trees over the alignment graph, and candidate ranking.

The search runs one backward iterator per steiner node. Iterators follow
incoming links in order of accumulated cost, and partial trees that reach
the same node with disjoint terminal sets are joined, so a tree is produced
as soon as every iterator has met at a common ancestor. Up to ``k`` distinct
partial trees are kept per (node, terminal set), which makes the first
complete tree an exact minimum and the following ones near-optimal
alternatives, including trees that use the heavier of two parallel links.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import NoModelError, UnknownEntityError
from .graph import CLASS, AlignmentGraph
from .model import ClassNode, DataNode, ModelLink, SemanticModel, rel
from .validation import check_positive_int

log = logging.getLogger(__name__)

DEFAULT_MAX_POPS = 200_000


@dataclass(frozen=True)
class SteinerTask:
    graph: AlignmentGraph
    steiner_nodes: tuple[str, ...]
    k: int = 10
    max_pops: int = DEFAULT_MAX_POPS

    def __post_init__(self):
        object.__setattr__(self, "steiner_nodes", tuple(dict.fromkeys(self.steiner_nodes)))
        check_positive_int(self.k, "k")
        for n in self.steiner_nodes:
            if n not in self.graph.nodes:
                raise UnknownEntityError(f"steiner node {n!r} not in graph")


@dataclass(frozen=True)
class CandidateTree:
    links: tuple[str, ...]
    cost: float
    coherence: float
    root: str
    mapping: object = field(default=None, compare=False)

    def nodes(self, g):
        out = {self.root}
        for i in self.links:
            out.add(g.links[i].source)
            out.add(g.links[i].target)
        return out


@dataclass(frozen=True)
class _State:
    root: str
    mask: int
    links: frozenset
    nodes: frozenset
    cost: float
    last_tags: frozenset


def link_coherence(g, link_ids):
    """Largest share of the links carried by a single known model."""
    link_ids = list(link_ids)
    if not link_ids:
        return 0.0
    counts: dict[str, int] = defaultdict(int)
    for i in link_ids:
        for t in g.links[i].tags:
            counts[t] += 1
    return max(counts.values(), default=0) / len(link_ids)


def _cost(g, link_ids):
    return sum(g.links[i].weight for i in sorted(link_ids, key=lambda i: g.links[i].order))


def _ordered(g, link_ids):
    return tuple(sorted(link_ids, key=lambda i: g.links[i].order))


def _reduce_terminals(g, steiner):
    """Swap leaf-only steiner nodes for their single parent plus a forced link."""
    if len(steiner) < 2:
        return list(steiner), []
    terms, forced = [], []
    for s in steiner:
        inc = g.incoming(s)
        if len(inc) == 1 and not g.outgoing(s):
            forced.append(inc[0].id)
            terms.append(inc[0].source)
        else:
            terms.append(s)
    return list(dict.fromkeys(terms)), forced


def _repair(g, root, link_ids, terminals):
    """Shortest-path arborescence from ``root`` inside ``link_ids``, pruned to ``terminals``."""
    out = defaultdict(list)
    for i in link_ids:
        out[g.links[i].source].append(g.links[i])
    dist, parent = {root: 0.0}, {}
    heap = [(0.0, g.nodes[root].order, root)]
    while heap:
        d, _, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for l in sorted(out[u], key=lambda l: l.order):
            nd = d + l.weight
            if nd < dist.get(l.target, float("inf")):
                dist[l.target] = nd
                parent[l.target] = l
                heapq.heappush(heap, (nd, g.nodes[l.target].order, l.target))
    keep, nodes = set(), {root}
    for t in terminals:
        v = t
        while v != root:
            l = parent[v]
            if l.id in keep:
                break
            keep.add(l.id)
            nodes.add(v)
            v = l.source
        nodes.add(t)
    return frozenset(keep), frozenset(nodes)


def top_k_steiner(task: SteinerTask) -> list[CandidateTree]:
    """Up to ``task.k`` trees spanning the steiner nodes, cheapest first."""
    g, k = task.graph, task.k
    steiner = list(task.steiner_nodes)
    if not steiner:
        return []
    terminals, forced = _reduce_terminals(g, steiner)
    if len(terminals) == 1:
        root = terminals[0]
        links = _ordered(g, forced)
        return [CandidateTree(links, _cost(g, links), link_coherence(g, links), root)]

    bit = {t: 1 << i for i, t in enumerate(terminals)}
    full = (1 << len(terminals)) - 1
    seq = itertools.count()
    heap: list = []
    pushed: dict[tuple[str, int], set] = defaultdict(set)

    def push(st, pref=1):
        key = (st.root, st.mask)
        if st.links in pushed[key]:
            return
        pushed[key].add(st.links)
        heapq.heappush(heap, (round(st.cost, 9), pref, next(seq), st))

    for t in terminals:
        push(_State(t, bit[t], frozenset(), frozenset({t}), 0.0, frozenset()), 0)

    done: dict[tuple[str, int], list] = defaultdict(list)
    at_root: dict[str, dict[int, list]] = defaultdict(dict)
    results: list[_State] = []
    pops = 0
    while heap and len(results) < k:
        _, _, _, st = heapq.heappop(heap)
        pops += 1
        if pops > task.max_pops:
            log.warning("steiner search stopped after %d expansions with %d trees", task.max_pops, len(results))
            break
        key = (st.root, st.mask)
        kept = done[key]
        if len(kept) >= k or any(o.links == st.links for o in kept):
            continue
        kept.append(st)
        at_root[st.root].setdefault(st.mask, kept)
        if st.mask == full:
            results.append(st)
            continue

        for l in g.incoming(st.root):
            u = l.source
            if u in st.nodes:
                continue
            pref = 0 if l.tags & st.last_tags else 1
            nxt = _State(
                u,
                st.mask | bit.get(u, 0),
                st.links | {l.id},
                st.nodes | {u},
                st.cost + l.weight,
                frozenset(l.tags),
            )
            push(nxt, pref)

        rbit = bit.get(st.root, 0)
        for mask2, others in list(at_root[st.root].items()):
            if mask2 & st.mask & ~rbit:
                continue
            if (mask2 | st.mask) == st.mask or (mask2 | st.mask) == mask2:
                continue
            for o in list(others):
                push(_merge(g, st, o, terminals, bit))

    trees, seen = [], set()
    for st in results:
        links = _ordered(g, st.links | set(forced))
        if frozenset(links) in seen:
            continue
        seen.add(frozenset(links))
        trees.append(CandidateTree(links, _cost(g, links), link_coherence(g, links), st.root))
    trees.sort(key=lambda t: (round(t.cost, 9), [g.links[i].order for i in t.links]))
    return trees


def _merge(g, a: _State, b: _State, terminals, bit):
    mask = a.mask | b.mask
    tags = a.last_tags | b.last_tags
    if a.nodes & b.nodes == {a.root}:
        links = a.links | b.links
        return _State(a.root, mask, links, a.nodes | b.nodes, a.cost + b.cost, tags)
    covered = [t for t in terminals if bit[t] & mask]
    links, nodes = _repair(g, a.root, a.links | b.links, covered)
    return _State(a.root, mask, links, nodes, _cost(g, links), tags)


def is_spanning_tree(g, tree: CandidateTree, steiner) -> bool:
    """Check that ``tree`` is an arborescence containing every steiner node."""
    indeg: dict[str, int] = defaultdict(int)
    nodes = {tree.root}
    children = defaultdict(list)
    for i in tree.links:
        l = g.links[i]
        indeg[l.target] += 1
        nodes.update((l.source, l.target))
        children[l.source].append(l.target)
    if indeg.get(tree.root, 0) != 0 or any(indeg[n] != 1 for n in nodes if n != tree.root):
        return False
    seen, stack = set(), [tree.root]
    while stack:
        n = stack.pop()
        if n in seen:
            return False
        seen.add(n)
        stack.extend(children[n])
    return seen == nodes and set(steiner) <= nodes


def tree_to_model(g: AlignmentGraph, tree: CandidateTree, attribute_of=None, model_id="learned") -> SemanticModel:
    """Turn a tree into a semantic model; ``attribute_of`` names the mapped data nodes."""
    attribute_of = attribute_of or {}
    nodes = sorted(tree.nodes(g), key=lambda n: g.nodes[n].order)
    classes = [ClassNode(n, g.nodes[n].label) for n in nodes if g.nodes[n].kind == CLASS]
    datas = [DataNode(n, attribute_of.get(n, g.nodes[n].label)) for n in nodes if g.nodes[n].kind != CLASS]
    links = [ModelLink(g.links[i].source, g.links[i].target, g.links[i].property) for i in tree.links]
    return SemanticModel(model_id, classes, datas, links)


@dataclass(frozen=True)
class RankedModel:
    rank: int
    model: SemanticModel
    coherence: float
    cost: float
    mapping_score: float
    tree: CandidateTree = field(compare=False)
    mapping: object = field(default=None, compare=False)

    def to_dict(self):
        return {
            "rank": self.rank,
            "coherence": self.coherence,
            "cost": round(self.cost, 9),
            "mapping_score": round(self.mapping_score, 12),
            "model": self.model.to_dict(),
        }


def rank_candidates(g: AlignmentGraph, trees, model_id="learned") -> list[RankedModel]:
    """Order candidate trees by link coherence, then cost, then mapping score.

    Trees whose models have the same triple set are reported once, at the
    position of the best-ranked copy.
    """
    if not trees:
        raise NoModelError("no candidate semantic model")

    def key(t):
        score = t.mapping.score if t.mapping is not None else 0.0
        canon = tuple(sorted((g.links[i].source, g.links[i].target, g.links[i].property) for i in t.links))
        return (-round(t.coherence, 12), round(t.cost, 9), -round(score, 12), canon)

    out, seen = [], set()
    for t in sorted(trees, key=key):
        attrs = {}
        if t.mapping is not None:
            attrs = {m.data_node: m.attribute for m in t.mapping.matches}
        sm = tree_to_model(g, t, attrs, model_id)
        r = rel(sm)
        if r in seen:
            continue
        seen.add(r)
        score = t.mapping.score if t.mapping is not None else 0.0
        out.append(RankedModel(len(out) + 1, sm, t.coherence, t.cost, score, t, t.mapping))
    return out
