"""Tanner graphs: edge-indexed adjacency, alist I/O and a PEG constructor.

Edges are numbered variable-node-major: the edges of VN 0 come first, in the
order of its check list, then those of VN 1, and so on. Decoder messages live
on edges, so every per-edge array in the package is indexed by these ids.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

import numpy as np

from ._accel import njit


class AlistError(ValueError):
    """Raised for malformed or inconsistent alist input."""


class InfeasibleCodeError(ValueError):
    """Raised when a regular code with the requested parameters cannot exist."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class TannerGraph:
    """Bipartite graph of a binary LDPC code.

    Parameters
    ----------
    n, m : int
        Number of variable and check nodes.
    vn_checks : sequence of sequences
        ``vn_checks[i]`` lists the check nodes of VN ``i`` in edge order.
    cn_vars : sequence of sequences, optional
        ``cn_vars[j]`` lists the VNs of CN ``j`` in the order the check node
        visits its edges. Defaults to ascending VN index.

    The graph is immutable; all array attributes are read-only.
    """

    def __init__(
        self,
        n: int,
        m: int,
        vn_checks: Sequence[Sequence[int]],
        cn_vars: Sequence[Sequence[int]] | None = None,
    ):
        n = int(n)
        m = int(m)
        if n < 0 or m < 0:
            raise ValueError("node counts must be non-negative")
        if len(vn_checks) != n:
            raise ValueError(f"vn_checks has {len(vn_checks)} rows, expected n={n}")

        edge_vn: list[int] = []
        edge_cn: list[int] = []
        lookup: dict[tuple[int, int], int] = {}
        for i, checks in enumerate(vn_checks):
            for c in checks:
                c = int(c)
                if not 0 <= c < m:
                    raise ValueError(f"VN {i} lists check {c} outside [0, {m})")
                if (i, c) in lookup:
                    raise ValueError(f"parallel edge between VN {i} and CN {c}")
                lookup[(i, c)] = len(edge_vn)
                edge_vn.append(i)
                edge_cn.append(c)

        if cn_vars is None:
            per_cn: list[list[int]] = [[] for _ in range(m)]
            for e, c in enumerate(edge_cn):
                per_cn[c].append(e)
        else:
            if len(cn_vars) != m:
                raise ValueError(f"cn_vars has {len(cn_vars)} rows, expected m={m}")
            per_cn = []
            seen = 0
            for j, vars_ in enumerate(cn_vars):
                row = []
                for v in vars_:
                    v = int(v)
                    if not 0 <= v < n:
                        raise ValueError(f"CN {j} lists variable {v} outside [0, {n})")
                    e = lookup.get((v, j))
                    if e is None:
                        raise ValueError(f"CN {j} lists VN {v} but VN {v} does not list CN {j}")
                    row.append(e)
                if len(set(row)) != len(row):
                    raise ValueError(f"CN {j} lists a variable twice")
                seen += len(row)
                per_cn.append(row)
            if seen != len(edge_vn):
                raise ValueError("check-side adjacency is missing edges present on the variable side")

        self.n = n
        self.m = m
        self.edge_vn = _frozen(np.asarray(edge_vn, dtype=np.int64))
        self.edge_cn = _frozen(np.asarray(edge_cn, dtype=np.int64))
        vn_deg = np.array([len(c) for c in vn_checks], dtype=np.int64)
        cn_deg = np.array([len(r) for r in per_cn], dtype=np.int64)
        self.vn_degrees = _frozen(vn_deg)
        self.cn_degrees = _frozen(cn_deg)
        self.vn_ptr = _frozen(np.concatenate(([0], np.cumsum(vn_deg))).astype(np.int64))
        self.cn_ptr = _frozen(np.concatenate(([0], np.cumsum(cn_deg))).astype(np.int64))
        flat = [e for row in per_cn for e in row]
        self.cn_edges = _frozen(np.asarray(flat, dtype=np.int64))

    # -- views -------------------------------------------------------------
    @property
    def num_edges(self) -> int:
        return int(self.edge_vn.size)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.edge_vn.tolist(), self.edge_cn.tolist()))

    @property
    def vn_adj(self) -> list[list[int]]:
        p = self.vn_ptr
        return [list(range(p[i], p[i + 1])) for i in range(self.n)]

    @property
    def cn_adj(self) -> list[list[int]]:
        p, ce = self.cn_ptr, self.cn_edges
        return [ce[p[j]:p[j + 1]].tolist() for j in range(self.m)]

    def checks_of(self, v: int) -> list[int]:
        return self.edge_cn[self.vn_ptr[v]:self.vn_ptr[v + 1]].tolist()

    def vars_of(self, c: int) -> list[int]:
        return self.edge_vn[self.cn_edges[self.cn_ptr[c]:self.cn_ptr[c + 1]]].tolist()

    @property
    def max_vn_degree(self) -> int:
        return int(self.vn_degrees.max()) if self.n else 0

    @property
    def max_cn_degree(self) -> int:
        return int(self.cn_degrees.max()) if self.m else 0

    def to_dense(self) -> np.ndarray:
        """Parity-check matrix as an ``(m, n)`` uint8 array."""
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        H[self.edge_cn, self.edge_vn] = 1
        return H

    @classmethod
    def from_dense(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        if H.ndim != 2:
            raise ValueError("parity-check matrix must be 2-D")
        m, n = H.shape
        vn_checks = [np.flatnonzero(H[:, i] % 2).tolist() for i in range(n)]
        return cls(n, m, vn_checks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.edge_vn, other.edge_vn)
            and np.array_equal(self.edge_cn, other.edge_cn)
            and np.array_equal(self.cn_ptr, other.cn_ptr)
            and np.array_equal(self.cn_edges, other.cn_edges)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.m, self.edge_cn.tobytes(), self.cn_edges.tobytes()))

    def __repr__(self) -> str:
        return f"TannerGraph(n={self.n}, m={self.m}, edges={self.num_edges})"


# -- alist ---------------------------------------------------------------------

def _ints(line: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise AlistError(f"non-integer token in {what}: {line.strip()!r}") from None


def parse_alist(text: str | Iterable[str]) -> TannerGraph:
    """Parse MacKay's alist format.

    Zero entries in the adjacency rows are treated as padding and ignored.
    Both halves of the file must describe the same edge set.
    """
    if not isinstance(text, str):
        text = "".join(text)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 4:
        raise AlistError("alist needs at least four header lines")

    header = _ints(lines[0], "header line 1")
    if len(header) != 2:
        raise AlistError("header line 1 must hold exactly 'n m'")
    n, m = header
    if n <= 0 or m <= 0:
        raise AlistError(f"header declares n={n}, m={m}; both must be positive")
    maxes = _ints(lines[1], "header line 2")
    if len(maxes) != 2:
        raise AlistError("header line 2 must hold 'max_vn_degree max_cn_degree'")
    max_dv, max_dc = maxes
    vn_deg = _ints(lines[2], "VN degree line")
    cn_deg = _ints(lines[3], "CN degree line")
    if len(vn_deg) != n:
        raise AlistError(f"VN degree line has {len(vn_deg)} entries, expected {n}")
    if len(cn_deg) != m:
        raise AlistError(f"CN degree line has {len(cn_deg)} entries, expected {m}")
    if any(d < 0 or d > max_dv for d in vn_deg) or any(d < 0 or d > max_dc for d in cn_deg):
        raise AlistError("a node degree exceeds the declared maximum")
    if sum(vn_deg) != sum(cn_deg):
        raise AlistError(f"VN degrees sum to {sum(vn_deg)} but CN degrees sum to {sum(cn_deg)}")
    if len(lines) < 4 + n + m:
        raise AlistError(f"expected {n} VN rows and {m} CN rows, file is too short")
    if len(lines) > 4 + n + m:
        raise AlistError("trailing content after the CN rows")

    vn_checks: list[list[int]] = []
    for i in range(n):
        row = [x for x in _ints(lines[4 + i], f"VN row {i + 1}") if x != 0]
        if len(row) != vn_deg[i]:
            raise AlistError(f"VN row {i + 1} lists {len(row)} checks, degree line says {vn_deg[i]}")
        if any(not 1 <= x <= m for x in row):
            raise AlistError(f"VN row {i + 1} has a check index outside [1, {m}]")
        vn_checks.append([x - 1 for x in row])

    cn_vars: list[list[int]] = []
    for j in range(m):
        row = [x for x in _ints(lines[4 + n + j], f"CN row {j + 1}") if x != 0]
        if len(row) != cn_deg[j]:
            raise AlistError(f"CN row {j + 1} lists {len(row)} variables, degree line says {cn_deg[j]}")
        if any(not 1 <= x <= n for x in row):
            raise AlistError(f"CN row {j + 1} has a variable index outside [1, {n}]")
        cn_vars.append([x - 1 for x in row])

    try:
        return TannerGraph(n, m, vn_checks, cn_vars)
    except ValueError as exc:
        raise AlistError(f"VN and CN sides disagree: {exc}") from None


def emit_alist(g: TannerGraph) -> str:
    """Serialize ``g`` to alist text without zero padding.

    A node of degree zero is written as a lone ``0`` so its row is not blank.
    """
    if g.n == 0 or g.m == 0:
        raise ValueError("cannot emit an empty graph")
    out = [
        f"{g.n} {g.m}",
        f"{g.max_vn_degree} {g.max_cn_degree}",
        " ".join(str(d) for d in g.vn_degrees.tolist()),
        " ".join(str(d) for d in g.cn_degrees.tolist()),
    ]
    for i in range(g.n):
        out.append(" ".join(str(c + 1) for c in g.checks_of(i)) or "0")
    for j in range(g.m):
        out.append(" ".join(str(v + 1) for v in g.vars_of(j)) or "0")
    return "\n".join(out) + "\n"


def read_alist(path) -> TannerGraph:
    with open(path, "r", encoding="ascii") as fh:
        return parse_alist(fh.read())


def write_alist(g: TannerGraph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(emit_alist(g))


# -- PEG construction ----------------------------------------------------------

@njit(cache=True)
def _peg_kernel(vn_target, cn_target, vn_adj, vn_deg, cn_adj, cn_deg, rank):
    """Fill the remaining edge stubs greedily, maximizing local girth.

    ``vn_adj``/``cn_adj`` are fixed-width and may hold pre-placed edges.
    Returns 0 on success, -1 if a stub could not be placed.
    """
    n = vn_target.shape[0]
    m = cn_target.shape[0]
    far = m + 1
    dist = np.empty(m, dtype=np.int64)
    vseen = np.empty(n, dtype=np.int64)
    cq = np.empty(m, dtype=np.int64)
    vq = np.empty(n, dtype=np.int64)
    for j in range(n):
        while vn_deg[j] < vn_target[j]:
            best = -1
            if vn_deg[j] == 0:
                for c in range(m):
                    if cn_deg[c] < cn_target[c]:
                        if best < 0 or cn_deg[c] < cn_deg[best] or (
                            cn_deg[c] == cn_deg[best] and rank[c] < rank[best]
                        ):
                            best = c
            else:
                for c in range(m):
                    dist[c] = -1
                for v in range(n):
                    vseen[v] = 0
                vseen[j] = 1
                ch = 0
                ct = 0
                for k in range(vn_deg[j]):
                    c = vn_adj[j, k]
                    dist[c] = 0
                    cq[ct] = c
                    ct += 1
                while ch < ct:
                    c = cq[ch]
                    ch += 1
                    for k in range(cn_deg[c]):
                        v = cn_adj[c, k]
                        if vseen[v] == 0:
                            vseen[v] = 1
                            for kk in range(vn_deg[v]):
                                c2 = vn_adj[v, kk]
                                if dist[c2] < 0:
                                    dist[c2] = dist[c] + 1
                                    cq[ct] = c2
                                    ct += 1
                bd = -1
                for c in range(m):
                    if cn_deg[c] >= cn_target[c] or dist[c] == 0:
                        continue
                    d = dist[c] if dist[c] > 0 else far
                    if (
                        best < 0
                        or d > bd
                        or (d == bd and cn_deg[c] < cn_deg[best])
                        or (d == bd and cn_deg[c] == cn_deg[best] and rank[c] < rank[best])
                    ):
                        best = c
                        bd = d
            if best < 0:
                # Only CNs already adjacent to j have capacity: rewire one edge.
                cap = -1
                for c in range(m):
                    if cn_deg[c] < cn_target[c]:
                        cap = c
                        break
                if cap < 0:
                    return -1
                done = False
                for u in range(n):
                    if u == j or done:
                        continue
                    u_on_cap = False
                    for k in range(vn_deg[u]):
                        if vn_adj[u, k] == cap:
                            u_on_cap = True
                    if u_on_cap:
                        continue
                    for k in range(vn_deg[u]):
                        c2 = vn_adj[u, k]
                        j_on_c2 = False
                        for kk in range(vn_deg[j]):
                            if vn_adj[j, kk] == c2:
                                j_on_c2 = True
                        if j_on_c2:
                            continue
                        # move u from c2 to cap, then attach j to c2
                        vn_adj[u, k] = cap
                        cn_adj[cap, cn_deg[cap]] = u
                        cn_deg[cap] += 1
                        for kk in range(cn_deg[c2]):
                            if cn_adj[c2, kk] == u:
                                cn_adj[c2, kk] = j
                        vn_adj[j, vn_deg[j]] = c2
                        vn_deg[j] += 1
                        done = True
                        break
                if not done:
                    return -1
                continue
            vn_adj[j, vn_deg[j]] = best
            vn_deg[j] += 1
            cn_adj[best, cn_deg[best]] = j
            cn_deg[best] += 1
    return 0


def peg_fill(
    n: int,
    m: int,
    vn_target: Sequence[int],
    cn_target: Sequence[int],
    seed: int,
    initial: Sequence[tuple[int, int]] = (),
) -> TannerGraph:
    """Complete a graph with prescribed degrees by progressive edge growth.

    ``initial`` holds (vn, cn) edges placed before growth starts. Candidate
    checks are ranked by distance from the current VN (unreachable first),
    then by current degree, then by position in a seed-driven permutation.
    """
    vt = np.asarray(vn_target, dtype=np.int64)
    ct = np.asarray(cn_target, dtype=np.int64)
    if vt.shape != (n,) or ct.shape != (m,):
        raise ValueError("degree targets must have lengths n and m")
    if vt.sum() != ct.sum():
        raise InfeasibleCodeError("VN and CN degree targets have different sums")
    max_dv = int(vt.max()) if n else 0
    max_dc = int(ct.max()) if m else 0
    vn_adj = np.full((n, max(max_dv, 1)), -1, dtype=np.int64)
    cn_adj = np.full((m, max(max_dc, 1)), -1, dtype=np.int64)
    vn_deg = np.zeros(n, dtype=np.int64)
    cn_deg = np.zeros(m, dtype=np.int64)
    for v, c in initial:
        if vn_deg[v] >= vt[v] or cn_deg[c] >= ct[c]:
            raise ValueError(f"initial edge ({v}, {c}) exceeds a degree target")
        if c in vn_adj[v, : vn_deg[v]]:
            raise ValueError(f"duplicate initial edge ({v}, {c})")
        vn_adj[v, vn_deg[v]] = c
        vn_deg[v] += 1
        cn_adj[c, cn_deg[c]] = v
        cn_deg[c] += 1
    perm = np.random.default_rng(np.random.SeedSequence(int(seed))).permutation(m)
    rank = np.empty(m, dtype=np.int64)
    rank[perm] = np.arange(m)
    status = _peg_kernel(vt, ct, vn_adj, vn_deg, cn_adj, cn_deg, rank)
    if status != 0:
        raise InfeasibleCodeError("progressive edge growth could not place every edge")
    vn_sets = [set(vn_adj[i, : vn_deg[i]].tolist()) for i in range(n)]
    frozen = {(v, c) for v, c in initial}
    _break_four_cycles(vn_sets, m, frozen)
    return TannerGraph(n, m, [sorted(s) for s in vn_sets])


def _break_four_cycles(vn_sets: list[set[int]], m: int, frozen: set[tuple[int, int]]) -> None:
    """Remove 4-cycles left by the greedy end game using degree-preserving swaps.

    Swaps (v, c), (u, c2) -> (v, c2), (u, c). Edges in ``frozen`` never move.
    Best effort: stops when no improving swap exists.
    """
    cn_sets: list[set[int]] = [set() for _ in range(m)]
    for v, checks in enumerate(vn_sets):
        for c in checks:
            cn_sets[c].add(v)

    def on_four_cycle(v: int, c: int) -> bool:
        for w in cn_sets[c]:
            if w != v and len(vn_sets[v] & vn_sets[w]) > 1:
                return True
        return False

    def bad_edges() -> list[tuple[int, int]]:
        out = []
        for v in range(len(vn_sets)):
            for c in sorted(vn_sets[v]):
                if (v, c) not in frozen and on_four_cycle(v, c):
                    out.append((v, c))
        return out

    def move(v, c_old, c_new):
        vn_sets[v].discard(c_old)
        cn_sets[c_old].discard(v)
        vn_sets[v].add(c_new)
        cn_sets[c_new].add(v)

    for _ in range(4 * len(vn_sets) + 4):
        bad = bad_edges()
        if not bad:
            return
        v, c = bad[-1]
        fixed = False
        for u in range(len(vn_sets)):
            if u == v or c in vn_sets[u]:
                continue
            for c2 in sorted(vn_sets[u]):
                if c2 in vn_sets[v] or (u, c2) in frozen:
                    continue
                move(v, c, c2)
                move(u, c2, c)
                if not on_four_cycle(v, c2) and not on_four_cycle(u, c):
                    fixed = True
                    break
                move(u, c, c2)
                move(v, c2, c)
            if fixed:
                break
        if not fixed:
            return


def make_regular_code(n: int, dv: int, dc: int, seed: int) -> TannerGraph:
    """Deterministic (dv, dc)-regular code built by progressive edge growth."""
    if n <= 0 or dv < 2 or dc < 2:
        raise InfeasibleCodeError(f"need n >= 1, dv >= 2, dc >= 2 (got n={n}, dv={dv}, dc={dc})")
    if (n * dv) % dc:
        raise InfeasibleCodeError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    m = n * dv // dc
    if dc > n or dv > m:
        raise InfeasibleCodeError(f"no simple graph with n={n}, m={m}, dv={dv}, dc={dc}")
    return peg_fill(n, m, [dv] * n, [dc] * m, seed)


# -- structure queries ---------------------------------------------------------

def syndrome(g: TannerGraph, bits) -> tuple[np.ndarray, bool]:
    """Parity of each check over a hard-decision frame.

    Returns the length-``m`` syndrome and whether it is all zero.
    """
    b = np.asarray(bits)
    if b.shape != (g.n,):
        raise ValueError(f"frame has shape {b.shape}, expected ({g.n},)")
    acc = np.zeros(g.m, dtype=np.int64)
    np.add.at(acc, g.edge_cn, b[g.edge_vn].astype(np.int64) & 1)
    s = (acc & 1).astype(np.uint8)
    return s, not s.any()


def girth(g: TannerGraph) -> float:
    """Length of the shortest cycle, or ``inf`` for a forest."""
    # nodes 0..n-1 are VNs, n..n+m-1 are CNs
    adj: list[list[int]] = [[] for _ in range(g.n + g.m)]
    for v, c in zip(g.edge_vn.tolist(), g.edge_cn.tolist()):
        adj[v].append(g.n + c)
        adj[g.n + c].append(v)
    best = float("inf")
    for root in range(g.n):
        dist = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    q.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best
