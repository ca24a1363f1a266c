"""Package dependency DAG: ordering, wave scheduling and dirty-set closure."""

import heapq
from dataclasses import dataclass

from .errors import CycleError, MissingDependencyError


@dataclass(frozen=True)
class DepGraph:
    nodes: frozenset
    # (dependency, dependent) pairs
    edges: frozenset

    def dependencies(self, name):
        return sorted(a for a, b in self.edges if b == name)

    def dependents(self, name):
        return sorted(b for a, b in self.edges if a == name)

    def restrict(self, names):
        """Subgraph on *names* plus everything they transitively depend on."""
        keep = set()
        stack = list(names)
        while stack:
            n = stack.pop()
            if n not in self.nodes:
                raise MissingDependencyError("(selection)", n)
            if n in keep:
                continue
            keep.add(n)
            stack.extend(self.dependencies(n))
        return DepGraph(frozenset(keep), frozenset((a, b) for a, b in self.edges if b in keep))


def _canonical_cycle(cycle):
    i = min(range(len(cycle)), key=lambda k: cycle[k:] + cycle[:k])
    return cycle[i:] + cycle[:i]


def _find_cycle(nodes, deps):
    """Return one cycle as a list, walking dependencies in sorted order."""
    state = {}
    path = []

    def visit(n):
        state[n] = 1
        path.append(n)
        for d in sorted(deps[n]):
            if state.get(d) == 1:
                return path[path.index(d):]
            if d not in state:
                found = visit(d)
                if found:
                    return found
        path.pop()
        state[n] = 2
        return None

    for n in sorted(nodes):
        if n not in state:
            found = visit(n)
            if found:
                return found
    return None


def build_graph(manifests):
    nodes = {m.name for m in manifests}
    edges = set()
    deps = {m.name: set() for m in manifests}
    for m in manifests:
        for d in m.depends:
            if d not in nodes:
                raise MissingDependencyError(m.name, d)
            edges.add((d, m.name))
            # cycle search follows dependent -> dependency
            deps[m.name].add(d)
    cycle = _find_cycle(nodes, deps)
    if cycle:
        # report in dependency order: each element depends on the next
        raise CycleError(_canonical_cycle(cycle))
    return DepGraph(frozenset(nodes), frozenset(edges))


def _indegrees(g):
    indeg = {n: 0 for n in g.nodes}
    out = {n: [] for n in g.nodes}
    for a, b in g.edges:
        indeg[b] += 1
        out[a].append(b)
    return indeg, out


def topo_order(g):
    """Kahn's algorithm with the lexicographically smallest ready node first."""
    indeg, out = _indegrees(g)
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    return order


def longest_path_levels(g):
    """Map node -> length of its longest dependency chain (sources are 0)."""
    level = {}
    preds = {n: [] for n in g.nodes}
    for a, b in g.edges:
        preds[b].append(a)
    for n in topo_order(g):
        level[n] = max((level[p] + 1 for p in preds[n]), default=0)
    return level


def schedule_waves(g):
    level = longest_path_levels(g)
    waves = [set() for _ in range(max(level.values(), default=-1) + 1)]
    for n, k in level.items():
        waves[k].add(n)
    return [frozenset(w) for w in waves]


def dirty_set(g, changed):
    for n in changed:
        if n not in g.nodes:
            raise MissingDependencyError("(changed set)", n)
    _, out = _indegrees(g)
    dirty = set(changed)
    stack = list(changed)
    while stack:
        for m in out[stack.pop()]:
            if m not in dirty:
                dirty.add(m)
                stack.append(m)
    return dirty


def to_dot(g):
    lines = ["digraph workspace {"]
    lines += [f'  "{n}";' for n in sorted(g.nodes)]
    lines += [f'  "{a}" -> "{b}";' for a, b in sorted(g.edges)]
    lines.append("}")
    return "\n".join(lines) + "\n"
