"""Deterministic union-find over comparable keys (element codes or handles)."""

from __future__ import annotations


class FrozenError(RuntimeError):
    pass


class UnionFind:
    """Disjoint sets whose representative is always the minimum member.

    Roots are chosen by key order rather than by rank, so the resulting
    labels do not depend on the order of union events. Path halving keeps
    ``find`` cheap.
    """

    def __init__(self, items=()):
        self._parent = {}
        self._frozen = False
        for x in items:
            self.add(x)

    def __len__(self):
        return len(self._parent)

    def __contains__(self, x):
        return x in self._parent

    @property
    def frozen(self):
        return self._frozen

    def add(self, x):
        if x not in self._parent:
            if self._frozen:
                raise FrozenError("union-find is finalized")
            self._parent[x] = x

    def find(self, x):
        parent = self._parent
        if x not in parent:
            raise KeyError(x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def unite(self, items):
        """Put every item of ``items`` into one set."""
        if self._frozen:
            raise FrozenError("union-find is finalized")
        items = list(items)
        for x in items:
            self.add(x)
        if len(items) < 2:
            return
        roots = {self.find(x) for x in items}
        root = min(roots)
        for r in roots:
            self._parent[r] = root

    def finalize(self):
        """Compress every path and freeze the structure."""
        for x in self._parent:
            self._parent[x] = self.find(x)
        self._frozen = True
        return self

    def components(self):
        """``{representative: sorted members}``, keyed in ascending order."""
        groups = {}
        for x in self._parent:
            groups.setdefault(self.find(x), []).append(x)
        return {r: sorted(groups[r]) for r in sorted(groups)}


def split_chains(nodes, adj):
    """Split a graph into maximal chains whose interior nodes have degree 2.

    ``adj`` maps every node to its neighbour set. Returns ``(path, is_loop)``
    pairs; every edge lies on exactly one path and nodes of degree != 2
    (endpoints and branch points) may appear in several paths.
    """
    seen_edges = set()
    chains = []
    stops = {v for v in nodes if len(adj[v]) != 2}
    for s in sorted(stops):
        if not adj[s]:
            chains.append(([s], False))
            continue
        for nb in sorted(adj[s]):
            if (min(s, nb), max(s, nb)) in seen_edges:
                continue
            path = [s]
            prev, cur = s, nb
            seen_edges.add((min(prev, cur), max(prev, cur)))
            while True:
                path.append(cur)
                if cur in stops:
                    break
                nxt = [w for w in adj[cur] if w != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                seen_edges.add((min(prev, cur), max(prev, cur)))
            chains.append((path, False))
    # cycles of degree-2 nodes
    visited = {v for path, _ in chains for v in path}
    for s in sorted(nodes):
        if s in visited:
            continue
        path = [s]
        visited.add(s)
        prev, cur = s, min(adj[s])
        while cur != s:
            path.append(cur)
            visited.add(cur)
            nxt = [w for w in adj[cur] if w != prev]
            prev, cur = cur, nxt[0]
        chains.append((path, True))
    return chains
