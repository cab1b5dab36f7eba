"""Small exact max-flow (works with int or Fraction capacities)."""

from __future__ import annotations

from collections import deque


class MaxFlow:
    """Dinic's algorithm on adjacency lists; capacities stay exact."""

    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list = []

    def add_edge(self, u: int, v: int, cap) -> int:
        eid = len(self.to)
        self.head[u].append(eid)
        self.to.append(v)
        self.cap.append(cap)
        self.head[v].append(eid + 1)
        self.to.append(u)
        self.cap.append(cap * 0)
        return eid

    def _bfs(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for eid in self.head[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        self.level = level
        return level[t] >= 0

    def _dfs(self, u, t, pushed):
        if u == t:
            return pushed
        while self.it[u] < len(self.head[u]):
            eid = self.head[u][self.it[u]]
            v = self.to[eid]
            if self.cap[eid] > 0 and self.level[v] == self.level[u] + 1:
                amt = self._dfs(v, t, min(pushed, self.cap[eid]))
                if amt > 0:
                    self.cap[eid] -= amt
                    self.cap[eid ^ 1] += amt
                    return amt
            self.it[u] += 1
        return pushed * 0

    def max_flow(self, s: int, t: int):
        total = None
        while self._bfs(s, t):
            self.it = [0] * self.n
            while True:
                inf = sum((c for c in self.cap if c > 0),
                          self.cap[0] * 0) + 1 if self.cap else 1
                f = self._dfs(s, t, inf)
                if f <= 0:
                    break
                total = f if total is None else total + f
        return total if total is not None else 0

    def min_cut_source_side(self, s: int) -> set[int]:
        """Nodes reachable from s in the residual graph after max_flow."""
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for eid in self.head[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen

    def edge_flow(self, eid: int):
        return self.cap[eid ^ 1]
