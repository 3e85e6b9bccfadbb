"""Exact 2-Wasserstein distances between atomic measures on L2(D).

The transport linear program is solved by a primal network simplex on the
bipartite min-cost-flow formulation (supplies = first marginal, demands =
second, arc costs = squared L2 distances).  The implementation works in
floating point: no integer rescaling of the weights.  Degeneracy (uniform
weights make the problem maximally degenerate) is handled by the classic
strong-feasibility leaving rule (last blocking arc in cycle orientation);
entering arcs come from a block-Dantzig search with lexicographic
tie-breaking, falling back to Bland's rule after a pivot budget.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from numba import njit

from .dgspace import SPATIAL_QUAD_POINTS
from .ensemble import EmpiricalMeasure, PolyAtom
from .errors import InfeasibleMarginalsError

COST_CLAMP = 1e-15  # quadrature noise below this is treated as exact zero


# ---------------------------------------------------------------------------
# network simplex kernel
# ---------------------------------------------------------------------------

@njit(cache=True)
def _arc_tail(a, e, K, M, tails_art):
    if a < e:
        return a // M
    return tails_art[a - e]


@njit(cache=True)
def _arc_head(a, e, K, M, heads_art):
    if a < e:
        return K + a % M
    return heads_art[a - e]


@njit(cache=True)
def _network_simplex(supply, demand, cost, tol, dantzig_budget):
    """Primal network simplex for the uncapacitated transport problem.

    Spanning-tree basis maintained with parent / thread / size / last
    arrays so every pivot costs O(cycle + subtree).  Returns (flow over
    real arcs, node potentials, status, pivots); status 0 on optimality,
    1 if artificial flow remained (infeasible), 2 on an unbounded cycle
    (impossible for balanced marginals).
    """
    K, M = supply.size, demand.size
    e = K * M
    n = K + M          # real nodes; artificial root has index n
    root = n

    big = 3.0 * (1.0 + np.max(cost)) * (n + 1)

    # artificial arcs e..e+n-1: sources point to root, root points to sinks
    tails_art = np.empty(n, dtype=np.int64)
    heads_art = np.empty(n, dtype=np.int64)
    for i in range(K):
        tails_art[i] = i
        heads_art[i] = root
    for j in range(M):
        tails_art[K + j] = root
        heads_art[K + j] = K + j

    flow = np.zeros(e + n)
    for i in range(K):
        flow[e + i] = supply[i]
    for j in range(M):
        flow[e + K + j] = demand[j]

    # initial tree: star around the root, threaded 0, 1, ..., n-1, root
    parent = np.empty(n + 1, dtype=np.int64)
    pedge = np.empty(n + 1, dtype=np.int64)
    size = np.ones(n + 1, dtype=np.int64)
    thread = np.empty(n + 1, dtype=np.int64)
    rev_thread = np.empty(n + 1, dtype=np.int64)
    last = np.empty(n + 1, dtype=np.int64)
    pi = np.empty(n + 1)
    for v in range(n):
        parent[v] = root
        pedge[v] = e + v
        last[v] = v
        pi[v] = big if v < K else -big
    parent[root] = -1
    pedge[root] = -1
    size[root] = n + 1
    pi[root] = 0.0
    thread[root] = 0
    for v in range(n):
        thread[v] = v + 1
    thread[n - 1] = root
    for v in range(n + 1):
        rev_thread[thread[v]] = v
    last[root] = n - 1

    cyc_edge = np.empty(2 * n + 1, dtype=np.int64)
    cyc_from = np.empty(2 * n + 1, dtype=np.int64)

    block = int(np.ceil(np.sqrt(e)))
    n_blocks = (e + block - 1) // block
    scan_pos = 0
    pivots = 0

    while True:
        # --- entering arc ---
        enter = -1
        if pivots < dantzig_budget:
            # block Dantzig: most negative reduced cost within a block,
            # ties broken by the lower (row, column) index
            for _ in range(n_blocks + 1):
                best = -tol
                stop = min(scan_pos + block, e)
                for a in range(scan_pos, stop):
                    rc = cost[a] - pi[a // M] + pi[K + a % M]
                    if rc < best:
                        best = rc
                        enter = a
                scan_pos = stop % e
                if enter != -1:
                    break
        else:
            # Bland fallback: first negative reduced cost in index order
            for a in range(e):
                rc = cost[a] - pi[a // M] + pi[K + a % M]
                if rc < -tol:
                    enter = a
                    break
        if enter == -1:
            break

        pivots += 1
        p = enter // M
        q = K + enter % M

        # --- cycle: apex -> p, entering arc, q -> apex (size as depth proxy) ---
        a_node, b_node = p, q
        while a_node != b_node:
            if size[a_node] < size[b_node]:
                a_node = parent[a_node]
            elif size[b_node] < size[a_node]:
                b_node = parent[b_node]
            else:
                a_node = parent[a_node]
                b_node = parent[b_node]
        apex = a_node

        np_edges = 0
        v = p
        while v != apex:
            cyc_edge[np_edges] = pedge[v]
            np_edges += 1
            v = parent[v]
        for i in range(np_edges // 2):
            tmp = cyc_edge[i]
            cyc_edge[i] = cyc_edge[np_edges - 1 - i]
            cyc_edge[np_edges - 1 - i] = tmp
        v = apex
        for i in range(np_edges):
            cyc_from[i] = v
            ea = cyc_edge[i]
            t = _arc_tail(ea, e, K, M, tails_art)
            h = _arc_head(ea, e, K, M, heads_art)
            v = h if t == v else t
        cyc_edge[np_edges] = enter
        cyc_from[np_edges] = p
        n_cyc = np_edges + 1
        v = q
        while v != apex:
            cyc_edge[n_cyc] = pedge[v]
            cyc_from[n_cyc] = v
            n_cyc += 1
            v = parent[v]

        # --- leaving arc: min residual, last occurrence in orientation ---
        delta = np.inf
        leave_idx = -1
        for i in range(n_cyc):
            ea = cyc_edge[i]
            t = _arc_tail(ea, e, K, M, tails_art)
            if t != cyc_from[i]:  # backward arcs block with their flow
                if flow[ea] <= delta:
                    delta = flow[ea]
                    leave_idx = i
        if leave_idx == -1:
            return flow[:e], pi, 2, pivots

        # --- augment ---
        if delta > 0.0:
            for i in range(n_cyc):
                ea = cyc_edge[i]
                t = _arc_tail(ea, e, K, M, tails_art)
                if t == cyc_from[i]:
                    flow[ea] += delta
                else:
                    flow[ea] -= delta
        leave_edge = cyc_edge[leave_idx]
        flow[leave_edge] = 0.0  # exact zero, no rounding residue

        if leave_edge == enter:
            continue  # cannot happen (entering is forward), kept for safety

        # --- identify the cut edge (s_out = parent side, c_l = child side) ---
        c_l = _arc_tail(leave_edge, e, K, M, tails_art)
        if pedge[c_l] != leave_edge:
            c_l = _arc_head(leave_edge, e, K, M, heads_art)
        s_out = parent[c_l]

        # which entering endpoint lies in the cut subtree rooted at c_l?
        q_in = q
        p_out = p
        v = p
        while v != -1:
            if v == c_l:
                q_in = p
                p_out = q
                break
            v = parent[v]

        # --- detach the subtree rooted at c_l from the thread ---
        sz = size[c_l]
        first = c_l
        last_c = last[c_l]
        before = rev_thread[first]
        after = thread[last_c]
        thread[before] = after
        rev_thread[after] = before
        thread[last_c] = first
        rev_thread[first] = last_c
        v = s_out
        while v != -1:
            size[v] -= sz
            if last[v] == last_c:
                last[v] = before
            v = parent[v]

        # --- re-root the detached subtree at q_in (reverse parent chain) ---
        v = q_in
        prev_parent = -1
        prev_edge = -1
        while True:
            nxt = parent[v]
            nxt_edge = pedge[v]
            parent[v] = prev_parent
            pedge[v] = prev_edge
            prev_parent = v
            prev_edge = nxt_edge
            if v == c_l:
                break
            v = nxt
        # rebuild thread/size/last of the re-rooted subtree by a local DFS,
        # O(subtree); other branches of the tree are untouched
        sub_nodes = np.empty(sz, dtype=np.int64)
        # collect subtree nodes via old thread ring starting at first
        v = first
        for i in range(sz):
            sub_nodes[i] = v
            v = thread[v]
        # children lists within the subtree
        child_head = np.full(sz, -1, dtype=np.int64)
        child_next = np.full(sz, -1, dtype=np.int64)
        local = np.full(n + 1, -1, dtype=np.int64)
        for i in range(sz):
            local[sub_nodes[i]] = i
        for i in range(sz):
            v = sub_nodes[i]
            pv = parent[v]
            if pv != -1 and local[pv] != -1:
                child_next[i] = child_head[local[pv]]
                child_head[local[pv]] = i
        # iterative DFS from q_in to rebuild thread/size/last
        stack = np.empty(sz, dtype=np.int64)
        order_arr = np.empty(sz, dtype=np.int64)
        top = 0
        stack[top] = local[q_in]
        top += 1
        cnt = 0
        while top > 0:
            top -= 1
            li = stack[top]
            order_arr[cnt] = li
            cnt += 1
            c = child_head[li]
            while c != -1:
                stack[top] = c
                top += 1
                c = child_next[c]
        # thread follows DFS preorder within the subtree
        for i in range(cnt - 1):
            thread[sub_nodes[order_arr[i]]] = sub_nodes[order_arr[i + 1]]
            rev_thread[sub_nodes[order_arr[i + 1]]] = sub_nodes[order_arr[i]]
        sub_last = sub_nodes[order_arr[cnt - 1]]
        # sizes bottom-up (reverse preorder accumulation into parents)
        sz_local = np.ones(sz, dtype=np.int64)
        for i in range(cnt - 1, 0, -1):
            li = order_arr[i]
            pv = parent[sub_nodes[li]]
            if pv != -1 and local[pv] != -1:
                sz_local[local[pv]] += sz_local[li]
        # each node's subtree is the contiguous preorder block of its size
        for i in range(cnt):
            li = order_arr[i]
            v = sub_nodes[li]
            size[v] = sz_local[li]
            last[v] = sub_nodes[order_arr[i + sz_local[li] - 1]]

        # --- attach the re-rooted subtree under p_out via the entering arc ---
        parent[q_in] = p_out
        pedge[q_in] = enter
        after_p = thread[last[p_out]]
        # splice subtree (preorder q_in .. sub_last) after p_out's block end
        lp_last = last[p_out]
        thread[lp_last] = q_in
        rev_thread[q_in] = lp_last
        thread[sub_last] = after_p
        rev_thread[after_p] = sub_last
        v = p_out
        while v != -1:
            size[v] += sz
            if last[v] == lp_last:
                last[v] = sub_last
            v = parent[v]

        # --- update potentials on the moved subtree only ---
        t_e = _arc_tail(enter, e, K, M, tails_art)
        if q_in == _arc_head(enter, e, K, M, heads_art):
            d = pi[t_e] - cost[enter] - pi[q_in]
        else:
            d = pi[_arc_head(enter, e, K, M, heads_art)] + cost[enter] - pi[q_in]
        v = q_in
        for _ in range(sz):
            pi[v] += d
            v = thread[v]

    # feasibility: artificial arcs must carry (numerically) no flow
    art_flow = 0.0
    for i in range(n):
        art_flow += flow[e + i]
    status = 0 if art_flow <= tol * n else 1
    return flow[:e], pi, status, pivots


@dataclass
class TransportPlan:
    """An optimal transport plan with its achieved cost and dual potentials."""

    matrix: np.ndarray
    cost: float
    potentials: np.ndarray
    pivots: int = 0

    def marginals(self):
        return self.matrix.sum(axis=1), self.matrix.sum(axis=0)

    def min_reduced_cost(self, cost_matrix):
        """Most negative reduced cost over all arcs (optimality certificate)."""
        k, m = cost_matrix.shape
        rc = cost_matrix - self.potentials[:k, None] + self.potentials[None, k : k + m]
        return float(rc.min())


def solve_emd(weights_a, weights_b, cost, dantzig_budget=None) -> TransportPlan:
    """Optimal basic solution of the discrete transport linear program.

    min <pi, C> over pi >= 0 with row sums weights_a and column sums
    weights_b.  Both weight vectors must sum to one (within 1e-12).
    """
    wa = np.ascontiguousarray(weights_a, dtype=float)
    wb = np.ascontiguousarray(weights_b, dtype=float)
    C = np.asarray(cost, dtype=float)
    if C.shape != (wa.size, wb.size):
        raise ValueError(f"cost matrix shape {C.shape} does not match weights ({wa.size}, {wb.size})")
    if np.any(wa < 0) or np.any(wb < 0):
        raise InfeasibleMarginalsError("transport weights must be nonnegative")
    if abs(wa.sum() - 1.0) > 1e-12 or abs(wb.sum() - 1.0) > 1e-12:
        raise InfeasibleMarginalsError(
            f"weight sums {wa.sum():.17g}, {wb.sum():.17g} are not both 1 within 1e-12"
        )
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise ValueError("cost matrix must be finite and nonnegative")

    # exact supply/demand balance for the flow solver
    wb = wb * (wa.sum() / wb.sum())
    tol = 1e-13 * (1.0 + float(C.max(initial=0.0)))
    if dantzig_budget is None:
        dantzig_budget = 200 * (wa.size + wb.size) + 10_000
    flow, pi, status, pivots = _network_simplex(
        wa, wb, np.ascontiguousarray(C.reshape(-1)), tol, dantzig_budget
    )
    if status != 0:
        raise InfeasibleMarginalsError("network simplex terminated without a feasible flow")
    plan = flow.reshape(C.shape)
    return TransportPlan(plan, float(np.sum(plan * C)), pi, pivots)


# ---------------------------------------------------------------------------
# cost matrices and distances between measures
# ---------------------------------------------------------------------------

def cost_matrix(atoms_a, atoms_b, mesh, n_quad=SPATIAL_QUAD_POINTS):
    """Pairwise squared L2 distances between two atom lists.

    Entries are integrated with the n_quad-point Gauss rule per cell of
    `mesh`; values below the clamp threshold are set to exactly zero.
    """
    comps = {a.n_components for a in list(atoms_a) + list(atoms_b)}
    if len(comps) != 1:
        raise ValueError(f"atoms have mismatched component counts: {sorted(comps)}")
    if mesh is None:
        raise ValueError("a quadrature mesh is required to integrate atom distances")

    from .quadrature import gauss_legendre

    rule = gauss_legendre(n_quad)
    pts = mesh.points(rule.nodes)
    w = (0.5 * mesh.h[:, None] * rule.weights[None, :]).reshape(-1)
    m = comps.pop()

    def stack(atoms):
        rows = []
        for a in atoms:
            if isinstance(a, PolyAtom) and a.mesh == mesh:
                v = a.values_on_own_quad(n_quad)
            else:
                v = a.values(pts)
            rows.append(v.reshape(-1, m))
        return np.stack(rows)  # (n_atoms, P, m)

    A = stack(atoms_a)
    B = stack(atoms_b)
    Aw = A * w[None, :, None]
    sq_a = np.einsum("kpm,kpm->k", Aw, A)
    sq_b = np.einsum("lpm,lpm->l", B * w[None, :, None], B)
    cross = np.einsum("kpm,lpm->kl", Aw, B)
    C = sq_a[:, None] + sq_b[None, :] - 2.0 * cross
    np.maximum(C, 0.0, out=C)
    C[C < COST_CLAMP] = 0.0
    return C


def wasserstein2(measure_a: EmpiricalMeasure, measure_b: EmpiricalMeasure, mesh=None):
    """2-Wasserstein distance between atomic measures: sqrt of the EMD cost."""
    quad_mesh = mesh or measure_a.mesh or measure_b.mesh
    C = cost_matrix(measure_a.atoms, measure_b.atoms, quad_mesh)
    plan = solve_emd(measure_a.weights, measure_b.weights, C)
    return float(np.sqrt(max(plan.cost, 0.0)))


def assignment_oracle(cost):
    """Exhaustive uniform-weight transport optimum for square instances.

    With equal atom counts and uniform weights the optimal plan is a
    permutation (Birkhoff); enumerates all of them.  Refuses K > 8.
    """
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("assignment oracle needs a square cost matrix")
    k = C.shape[0]
    if k > 8:
        raise ValueError(f"assignment oracle refuses K > 8 (got {k})")
    best = min(sum(C[i, s[i]] for i in range(k)) for s in permutations(range(k)))
    return best / k
