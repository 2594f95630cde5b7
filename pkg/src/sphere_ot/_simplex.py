"""Dense transportation simplex with deterministic pivoting.

Solves min <P, C> over nonnegative P with row sums a and column sums b
by the network simplex on the complete bipartite graph.  Instances are
small (at most a few hundred points per side), so the code keeps the
cost matrix dense and rebuilds the basis tree from scratch after every
pivot.

Pivot selection is deterministic and finite: the entering arc is the
most negative reduced cost with lowest-flat-index ties, and after
_DEGENERATE_RUN consecutive zero-step pivots the rule switches to
Bland's first-negative-index rule (immune to cycling) until a positive
step is made; the leaving arc always breaks ties by lowest flat index.

Both backends follow identical pivot sequences: the compiled path scans
arcs in a loop, the numpy path scans vectorized, and the floating-point
operations match elementwise.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAS_NUMBA, njit

STATUS_OK = 0
STATUS_LIMIT = 1

# Consecutive degenerate pivots tolerated before falling back to Bland.
_DEGENERATE_RUN = 12


@njit(cache=True)
def _simplex_njit(a, b, C, tol, limit):
    m = a.shape[0]
    n = b.shape[0]
    nodes = m + n
    nb = nodes - 1
    flow = np.zeros((m, n))
    in_basis = np.zeros((m, n), dtype=np.uint8)
    barc_r = np.empty(nb, dtype=np.int64)
    barc_c = np.empty(nb, dtype=np.int64)

    # Northwest-corner initial basis: m + n - 1 arcs, degenerate zeros kept.
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    k = 0
    while True:
        t = ra[i] if ra[i] < rb[j] else rb[j]
        flow[i, j] = t
        in_basis[i, j] = 1
        barc_r[k] = i
        barc_c[k] = j
        k += 1
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if ra[i] <= rb[j] and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1

    adj_off = np.empty(nodes + 1, dtype=np.int64)
    adj_node = np.empty(2 * nb, dtype=np.int64)
    adj_arc = np.empty(2 * nb, dtype=np.int64)
    deg = np.empty(nodes, dtype=np.int64)
    pos = np.empty(nodes, dtype=np.int64)
    parent = np.empty(nodes, dtype=np.int64)
    parent_arc = np.empty(nodes, dtype=np.int64)
    depth = np.empty(nodes, dtype=np.int64)
    order = np.empty(nodes, dtype=np.int64)
    u = np.zeros(m)
    v = np.zeros(n)
    cyc_arc = np.empty(nodes, dtype=np.int64)
    cyc_sign = np.empty(nodes, dtype=np.int64)

    pivots = 0
    degen_run = 0
    status = STATUS_LIMIT
    while pivots <= limit:
        # Rebuild the tree: adjacency sorted by arc index, then BFS from
        # node 0 so that dual propagation order is reproducible.
        for w in range(nodes):
            deg[w] = 0
        for t_ in range(nb):
            deg[barc_r[t_]] += 1
            deg[m + barc_c[t_]] += 1
        adj_off[0] = 0
        for w in range(nodes):
            adj_off[w + 1] = adj_off[w] + deg[w]
            pos[w] = adj_off[w]
        for t_ in range(nb):
            r = barc_r[t_]
            c = m + barc_c[t_]
            adj_node[pos[r]] = c
            adj_arc[pos[r]] = t_
            pos[r] += 1
            adj_node[pos[c]] = r
            adj_arc[pos[c]] = t_
            pos[c] += 1
        for w in range(nodes):
            parent[w] = -2
        parent[0] = -1
        parent_arc[0] = -1
        depth[0] = 0
        order[0] = 0
        head = 0
        tail = 1
        while head < tail:
            w = order[head]
            head += 1
            for s_ in range(adj_off[w], adj_off[w + 1]):
                nxt = adj_node[s_]
                if parent[nxt] == -2:
                    parent[nxt] = w
                    parent_arc[nxt] = adj_arc[s_]
                    depth[nxt] = depth[w] + 1
                    order[tail] = nxt
                    tail += 1

        # Duals: u[0] = 0, one tight equation per tree arc in BFS order.
        u[0] = 0.0
        for idx in range(1, nodes):
            w = order[idx]
            t_ = parent_arc[w]
            r = barc_r[t_]
            c = barc_c[t_]
            if w < m:
                u[w] = C[r, c] - v[c]
            else:
                v[w - m] = C[r, c] - u[r]

        # Entering arc: most negative reduced cost (lowest flat index on
        # ties), or Bland's first-negative rule during degenerate runs.
        ei = -1
        ej = -1
        if degen_run < _DEGENERATE_RUN:
            best = -tol
            for r in range(m):
                ur = u[r]
                for c in range(n):
                    if in_basis[r, c] == 0:
                        red = C[r, c] - ur - v[c]
                        if red < best:
                            best = red
                            ei = r
                            ej = c
        else:
            found = False
            for r in range(m):
                ur = u[r]
                for c in range(n):
                    if in_basis[r, c] == 0 and C[r, c] - ur - v[c] < -tol:
                        ei = r
                        ej = c
                        found = True
                        break
                if found:
                    break
        if ei < 0:
            status = STATUS_OK
            break

        # Cycle through the tree between the entering endpoints.  Signs:
        # traversing an arc row-to-col raises its flow, col-to-row lowers
        # it; the s-side is traversed parent-to-node, the t-side
        # node-to-parent.
        cnt = 0
        x_ = ei
        y_ = m + ej
        while depth[x_] > depth[y_]:
            t_ = parent_arc[x_]
            cyc_arc[cnt] = t_
            cyc_sign[cnt] = 1 if x_ >= m else -1
            cnt += 1
            x_ = parent[x_]
        while depth[y_] > depth[x_]:
            t_ = parent_arc[y_]
            cyc_arc[cnt] = t_
            cyc_sign[cnt] = 1 if y_ < m else -1
            cnt += 1
            y_ = parent[y_]
        while x_ != y_:
            t_ = parent_arc[x_]
            cyc_arc[cnt] = t_
            cyc_sign[cnt] = 1 if x_ >= m else -1
            cnt += 1
            x_ = parent[x_]
            t_ = parent_arc[y_]
            cyc_arc[cnt] = t_
            cyc_sign[cnt] = 1 if y_ < m else -1
            cnt += 1
            y_ = parent[y_]

        # Leaving arc: smallest flow among lowering arcs, flat-index ties.
        theta = np.inf
        leave = -1
        leave_flat = -1
        for q in range(cnt):
            if cyc_sign[q] < 0:
                t_ = cyc_arc[q]
                fl = flow[barc_r[t_], barc_c[t_]]
                flat = barc_r[t_] * n + barc_c[t_]
                if fl < theta or (fl == theta and flat < leave_flat):
                    theta = fl
                    leave = t_
                    leave_flat = flat

        if theta <= 0.0:
            degen_run += 1
        else:
            degen_run = 0
        for q in range(cnt):
            t_ = cyc_arc[q]
            flow[barc_r[t_], barc_c[t_]] += cyc_sign[q] * theta
        lr = barc_r[leave]
        lc = barc_c[leave]
        flow[lr, lc] = 0.0
        in_basis[lr, lc] = 0
        flow[ei, ej] = theta
        in_basis[ei, ej] = 1
        barc_r[leave] = ei
        barc_c[leave] = ej
        pivots += 1

    return flow, u, v, pivots, status


def _simplex_numpy(a, b, C, tol, limit):
    m = a.shape[0]
    n = b.shape[0]
    nodes = m + n
    nb = nodes - 1
    flow = np.zeros((m, n))
    in_basis = np.zeros((m, n), dtype=bool)
    barc_r = np.empty(nb, dtype=np.int64)
    barc_c = np.empty(nb, dtype=np.int64)

    ra = a.copy()
    rb = b.copy()
    i = j = k = 0
    while True:
        t = ra[i] if ra[i] < rb[j] else rb[j]
        flow[i, j] = t
        in_basis[i, j] = True
        barc_r[k] = i
        barc_c[k] = j
        k += 1
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if ra[i] <= rb[j] and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1

    parent = np.empty(nodes, dtype=np.int64)
    parent_arc = np.empty(nodes, dtype=np.int64)
    depth = np.empty(nodes, dtype=np.int64)
    order = np.empty(nodes, dtype=np.int64)
    u = np.zeros(m)
    v = np.zeros(n)

    pivots = 0
    degen_run = 0
    status = STATUS_LIMIT
    while pivots <= limit:
        adj = [[] for _ in range(nodes)]
        for t_ in range(nb):
            adj[barc_r[t_]].append((m + barc_c[t_], t_))
            adj[m + barc_c[t_]].append((barc_r[t_], t_))
        parent.fill(-2)
        parent[0] = -1
        parent_arc[0] = -1
        depth[0] = 0
        order[0] = 0
        head, tail = 0, 1
        while head < tail:
            w = int(order[head])
            head += 1
            for nxt, arc in adj[w]:
                if parent[nxt] == -2:
                    parent[nxt] = w
                    parent_arc[nxt] = arc
                    depth[nxt] = depth[w] + 1
                    order[tail] = nxt
                    tail += 1

        u[0] = 0.0
        for idx in range(1, nodes):
            w = int(order[idx])
            t_ = int(parent_arc[w])
            r = barc_r[t_]
            c = barc_c[t_]
            if w < m:
                u[w] = C[r, c] - v[c]
            else:
                v[w - m] = C[r, c] - u[r]

        rc = (C - u[:, None]) - v[None, :]
        masked = np.where(in_basis, np.inf, rc)
        if degen_run < _DEGENERATE_RUN:
            flat = int(np.argmin(masked))
            if not masked.flat[flat] < -tol:
                status = STATUS_OK
                break
        else:
            cand = masked < -tol
            flat = int(np.argmax(cand))
            if not cand.flat[flat]:
                status = STATUS_OK
                break
        ei, ej = divmod(flat, n)

        cyc = []
        x_ = ei
        y_ = m + ej
        while depth[x_] > depth[y_]:
            cyc.append((int(parent_arc[x_]), 1 if x_ >= m else -1))
            x_ = int(parent[x_])
        while depth[y_] > depth[x_]:
            cyc.append((int(parent_arc[y_]), 1 if y_ < m else -1))
            y_ = int(parent[y_])
        while x_ != y_:
            cyc.append((int(parent_arc[x_]), 1 if x_ >= m else -1))
            x_ = int(parent[x_])
            cyc.append((int(parent_arc[y_]), 1 if y_ < m else -1))
            y_ = int(parent[y_])

        theta = np.inf
        leave = -1
        leave_flat = -1
        for t_, sign in cyc:
            if sign < 0:
                fl = flow[barc_r[t_], barc_c[t_]]
                flat_ = barc_r[t_] * n + barc_c[t_]
                if fl < theta or (fl == theta and flat_ < leave_flat):
                    theta = fl
                    leave = t_
                    leave_flat = flat_

        if theta <= 0.0:
            degen_run += 1
        else:
            degen_run = 0
        for t_, sign in cyc:
            flow[barc_r[t_], barc_c[t_]] += sign * theta
        lr, lc = barc_r[leave], barc_c[leave]
        flow[lr, lc] = 0.0
        in_basis[lr, lc] = False
        flow[ei, ej] = theta
        in_basis[ei, ej] = True
        barc_r[leave] = ei
        barc_c[leave] = ej
        pivots += 1

    return flow, u, v, pivots, status


def transport_simplex(a, b, C, tol: float | None = None, limit: int | None = None):
    """Solve the dense balanced transportation problem min <P, C>.

    Args:
        a: (m,) nonnegative row marginals.
        b: (n,) nonnegative column marginals, same total mass as a.
        C: (m, n) finite cost matrix.
        tol: reduced-cost threshold; defaults to 1e-12 * (1 + max |C|).
        limit: pivot budget; defaults to 20 m n + 1000.

    Returns:
        (flow, u, v, pivots, status): optimal coupling, node duals with
        u[0] = 0 and u[i] + v[j] = C[i, j] on basic arcs, pivot count,
        and STATUS_OK or STATUS_LIMIT.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.shape != (a.size, b.size):
        raise ValueError("cost matrix shape does not match the marginals")
    if not np.isfinite(C).all():
        raise ValueError("cost matrix must be finite")
    if tol is None:
        tol = 1e-12 * (1.0 + float(np.abs(C).max(initial=0.0)))
    if limit is None:
        limit = 20 * a.size * b.size + 1000
    core = _simplex_njit if HAS_NUMBA else _simplex_numpy
    return core(a, b, C, float(tol), int(limit))
