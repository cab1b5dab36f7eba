"""Constructive matching inside a 0/1 support structure.

check_hall decides the two-sided neighborhood condition by max-flow
feasibility (equivalent to the subset conditions by Hall's theorem).
find_permutation follows the inductive construction: when every proper
subset has strictly more neighbors, delete any edge's row and column and
recurse; otherwise split along a tight subset (found from the matching's
reachability structure, a min-cut certificate) and recurse on both blocks.
construct_plan clears rational masses to a common denominator, runs the
permutation construction on the expanded unit-mass support, and
re-aggregates; the expansion is exact, so no reservoir mass is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import HallViolationError, MassMismatchError, NotSquareError
from .geometry.primitives import lcm_denominators
from .maxflow import MaxFlow
from .measures import WeightedPointCloud
from .transport import TransportPlan


@dataclass(frozen=True)
class SupportGraph:
    """Bipartite 0/1 support between source and target indices."""

    n_sources: int
    n_targets: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < self.n_sources and 0 <= j < self.n_targets):
                raise ValueError(f"edge ({i},{j}) out of range")

    @staticmethod
    def from_matrix(rows: list[list[int]]) -> "SupportGraph":
        n = len(rows)
        m = len(rows[0]) if rows else 0
        edges = {(i, j) for i, row in enumerate(rows)
                 for j, v in enumerate(row) if v}
        return SupportGraph(n, m, frozenset(edges))

    def row_masks(self) -> list[int]:
        masks = [0] * self.n_sources
        for i, j in self.edges:
            masks[i] |= 1 << j
        return masks

    def to_json_dict(self) -> dict:
        return {"n": self.n_sources, "m": self.n_targets,
                "edges": sorted(map(list, self.edges))}

    @staticmethod
    def from_json_dict(doc) -> "SupportGraph":
        return SupportGraph(doc["n"], doc["m"],
                            frozenset(tuple(e) for e in doc["edges"]))


# -- bitmask matching core -------------------------------------------------


def _match(rows: list[int], n: int) -> tuple[int, list[int]]:
    """Maximum bipartite matching (Kuhn); returns (size, col->row or -1)."""
    match_col = [-1] * n

    def try_row(i: int, seen: int) -> tuple[bool, int]:
        avail = rows[i] & ~seen
        free = avail & ~_used_mask(match_col)
        if free:
            j = (free & -free).bit_length() - 1
            match_col[j] = i
            return True, seen
        m = avail
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            if seen >> j & 1:
                continue
            seen |= 1 << j
            ok, seen = try_row(match_col[j], seen)
            if ok:
                match_col[j] = i
                return True, seen
        return False, seen

    size = 0
    for i in range(len(rows)):
        ok, _ = try_row(i, 0)
        if ok:
            size += 1
    return size, match_col


def _used_mask(match_col: list[int]) -> int:
    m = 0
    for j, v in enumerate(match_col):
        if v >= 0:
            m |= 1 << j
    return m


def _hall_flow_one_side(rows: list[int], n: int) -> bool:
    """Perfect fractional matching feasibility = perfect matching exists."""
    size, _ = _match(rows, n)
    return size == len(rows)


def hall_witness(rows: list[int], n: int):
    """Violating subset I with |I| > |N(I)| when no perfect matching exists
    (Koenig-style reachability from unmatched rows), else None."""
    size, match_col = _match(rows, n)
    if size == len(rows):
        return None
    match_row = [-1] * len(rows)
    for j, i in enumerate(match_col):
        if i >= 0:
            match_row[i] = j
    frontier = [i for i in range(len(rows)) if match_row[i] < 0]
    in_i = set(frontier)
    cols_seen = 0
    while frontier:
        nxt = []
        for i in frontier:
            m = rows[i] & ~cols_seen
            while m:
                j = (m & -m).bit_length() - 1
                m &= m - 1
                cols_seen |= 1 << j
                i2 = match_col[j]
                if i2 >= 0 and i2 not in in_i:
                    in_i.add(i2)
                    nxt.append(i2)
        frontier = nxt
    return sorted(in_i)


def check_hall(graph: SupportGraph) -> bool:
    """Both subset conditions of the square 0/1 support, via two max-flow
    (perfect matching) feasibility checks."""
    if graph.n_sources != graph.n_targets:
        raise NotSquareError("support must be square")
    n = graph.n_sources
    rows = graph.row_masks()
    if not _hall_flow_one_side(rows, n):
        return False
    cols = [0] * n
    for i, j in graph.edges:
        cols[j] |= 1 << i
    return _hall_flow_one_side(cols, n)


def subset_enumeration_hall(graph: SupportGraph) -> bool:
    """Oracle: check both subset conditions by enumerating all 2^N subsets."""
    if graph.n_sources != graph.n_targets:
        raise NotSquareError("support must be square")
    n = graph.n_sources
    rows = graph.row_masks()
    cols = [0] * n
    for i, j in graph.edges:
        cols[j] |= 1 << i
    for masks in (rows, cols):
        for sub in range(1, 1 << n):
            nb = 0
            m = sub
            while m:
                i = (m & -m).bit_length() - 1
                m &= m - 1
                nb |= masks[i]
            if bin(sub).count("1") > bin(nb).count("1"):
                return False
    return True


# -- permutation construction ----------------------------------------------


def find_permutation(graph: SupportGraph) -> list[int]:
    """Permutation sigma with (i, sigma(i)) in the support for all i.

    Follows the two-case induction; tie-breaks are deterministic: the
    lexicographically smallest edge in the strict case, and the first
    proper closure (by ascending row index) of the matching's reassignment
    digraph as the tight set in the split case.
    """
    if graph.n_sources != graph.n_targets:
        raise NotSquareError("support must be square")
    n = graph.n_sources
    rows = graph.row_masks()
    w = hall_witness(rows, n)
    if w is not None:
        raise HallViolationError("subset with too few neighbors", witness=w)
    cols = [0] * n
    for i, j in graph.edges:
        cols[j] |= 1 << i
    wc = hall_witness(cols, n)
    if wc is not None:
        raise HallViolationError("column subset with too few neighbors",
                                 witness=wc)
    full = (1 << n) - 1
    assignment = _solve_cached(tuple(rows), full, n)
    return list(assignment)


def _columns_of(rows, col_mask, n):
    cols = {}
    for i, r in enumerate(rows):
        m = r & col_mask
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            cols.setdefault(j, 0)
            cols[j] |= 1 << i
    return cols


_solve_cache: dict[tuple, tuple] = {}


def _solve_cached(rows: tuple[int, ...], col_mask: int, n: int) -> tuple[int, ...]:
    key = (rows, col_mask)
    hit = _solve_cache.get(key)
    if hit is not None:
        return hit
    out = _solve(list(rows), col_mask, n)
    if len(_solve_cache) < 1 << 18:
        _solve_cache[key] = out
    return out


def _solve(rows: list[int], col_mask: int, n: int) -> tuple[int, ...]:
    """Recursive construction on the sub-support (rows, allowed columns).

    Precondition: the sub-support is square and satisfies both subset
    conditions.  Returns sigma as a tuple aligned with `rows`.
    """
    k = len(rows)
    if k == 0:
        return ()
    masked = [r & col_mask for r in rows]
    if k == 1:
        j = (masked[0] & -masked[0]).bit_length() - 1
        return (j,)

    tight = _tight_rowset(masked, col_mask, k)
    if tight is None:
        # strict case: remove the lexicographically smallest edge's row/col
        i0 = 0
        j0 = (masked[0] & -masked[0]).bit_length() - 1
        sub_rows = [masked[i] for i in range(k) if i != i0]
        sub = _solve_cached(tuple(sub_rows), col_mask & ~(1 << j0), n)
        out = [j0]
        for s in sub:
            out.append(s)
        # rows after i0 shifted by one; re-insert i0 at front
        return tuple(out)

    in_rows, in_cols = tight
    # split into the tight block and its complement
    a_rows = [masked[i] & in_cols for i in range(k) if (in_rows >> i) & 1]
    b_rows = [masked[i] & ~in_cols for i in range(k) if not (in_rows >> i) & 1]
    sig_a = _solve_cached(tuple(a_rows), col_mask & in_cols, n)
    sig_b = _solve_cached(tuple(b_rows), col_mask & ~in_cols, n)
    out = []
    ia = ib = 0
    for i in range(k):
        if (in_rows >> i) & 1:
            out.append(sig_a[ia])
            ia += 1
        else:
            out.append(sig_b[ib])
            ib += 1
    return tuple(out)


def _tight_rowset(masked: list[int], col_mask: int, k: int):
    """Proper nonempty row subset I with |I| = |N(I)|, or the analogous
    column split mapped back to rows; None when all inequalities are strict.

    Found as the first proper successor-closure in the digraph row -> row
    induced by a perfect matching; a closed set's neighborhood is exactly
    its matched columns, which makes it tight.
    """
    dense_cols = sorted(_columns_of(masked, col_mask, k))
    col_of = {j: t for t, j in enumerate(dense_cols)}
    rows_dense = [0] * k
    for i, r in enumerate(masked):
        m = r
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            rows_dense[i] |= 1 << col_of[j]
    size, match_col = _match(rows_dense, len(dense_cols))
    assert size == k, "precondition: sub-support satisfies the Hall condition"
    row_to_col = [-1] * k
    for jd, i in enumerate(match_col):
        if i >= 0:
            row_to_col[i] = jd
    # successors: i -> i2 when row i can use the column matched to i2
    succ = [0] * k
    for i in range(k):
        m = rows_dense[i]
        while m:
            jd = (m & -m).bit_length() - 1
            m &= m - 1
            succ[i] |= 1 << match_col[jd]
    for i in range(k):
        closure = 1 << i
        frontier = closure
        while frontier:
            nxt = 0
            m = frontier
            while m:
                t = (m & -m).bit_length() - 1
                m &= m - 1
                nxt |= succ[t]
            frontier = nxt & ~closure
            closure |= nxt
        if closure != (1 << k) - 1:
            in_cols = 0
            m = closure
            while m:
                t = (m & -m).bit_length() - 1
                m &= m - 1
                in_cols |= 1 << dense_cols[row_to_col[t]]
            return closure, in_cols
    # No proper row closure.  A tight column set J0 would make the rows not
    # touching J0 a tight row set (their neighborhoods fill the column
    # complement exactly), so none exists either: the strict case applies.
    return None


def construct_plan(mu: WeightedPointCloud, nu: WeightedPointCloud,
                   graph: SupportGraph) -> TransportPlan:
    """Coupling with exact marginals concentrated on the support edges.

    Masses are cleared to a common denominator, every atom is split into
    unit masses, the permutation construction runs on the expanded square
    support, and the units are re-aggregated.
    """
    if mu.total_mass() != nu.total_mass():
        raise MassMismatchError("total masses differ")
    if len(mu) != graph.n_sources or len(nu) != graph.n_targets:
        raise ValueError("support shape does not match the measures")
    _check_discrete_condition(mu, nu, graph)

    D = lcm_denominators(mu.masses + nu.masses)
    k_units = [int(m * D) for m in mu.masses]
    l_units = [int(m * D) for m in nu.masses]
    unit_src = [i for i, k in enumerate(k_units) for _ in range(k)]
    unit_tgt = [j for j, l in enumerate(l_units) for _ in range(l)]
    tgt_slots: dict[int, int] = {}
    unit_cols_of_tgt: dict[int, int] = {}
    pos = 0
    for j, l in enumerate(l_units):
        mask = 0
        for _ in range(l):
            mask |= 1 << pos
            pos += 1
        unit_cols_of_tgt[j] = mask
    edges_of_src: dict[int, int] = {i: 0 for i in range(len(mu))}
    for i, j in graph.edges:
        edges_of_src[i] |= unit_cols_of_tgt[j]
    rows = [edges_of_src[unit_src[u]] for u in range(len(unit_src))]
    n = len(unit_tgt)
    sigma = _solve_cached(tuple(rows), (1 << n) - 1, n)

    agg: dict[tuple[int, int], int] = {}
    for u, col in enumerate(sigma):
        key = (unit_src[u], unit_tgt[col])
        agg[key] = agg.get(key, 0) + 1
    entries = sorted((i, j, Fraction(c, D)) for (i, j), c in agg.items())
    plan = TransportPlan(entries, mu, nu)
    assert plan.check_marginals()
    assert all((i, j) in graph.edges for i, j, _ in plan.entries)
    return plan


def _check_discrete_condition(mu, nu, graph):
    """Mass feasibility of the support by exact max-flow; the min cut is the
    violating subset when it fails."""
    D = lcm_denominators(mu.masses + nu.masses)
    m, n = len(mu), len(nu)
    s, t = m + n, m + n + 1
    net = MaxFlow(m + n + 2)
    for i, mass in enumerate(mu.masses):
        net.add_edge(s, i, int(mass * D))
    for j, mass in enumerate(nu.masses):
        net.add_edge(m + j, t, int(mass * D))
    big = int(mu.total_mass() * D) + 1
    for i, j in graph.edges:
        net.add_edge(i, m + j, big)
    got = net.max_flow(s, t)
    want = int(mu.total_mass() * D)
    if got != want:
        side = net.min_cut_source_side(s)
        witness = sorted(i for i in range(m) if i in side)
        raise HallViolationError(
            "support cannot carry the source masses", witness=witness)
