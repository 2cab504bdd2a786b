"""Pure-Python solver kernels.

These are the hot routines of the solver: giant-tour splitting, trip
statistics, order crossover, first-improvement local search and batched
recourse execution.  ``scarp._kernels._core`` is a compiled twin of this
module; the two must produce bit-identical results, so every arithmetic
step here is written in the exact order the extension performs it.

Conventions shared by both backends:

* ``tour`` is a sequence of task-arc ids (``2*task + orientation``);
* ``bounds[i]`` is the exclusive end position of trip ``i`` in the tour;
* objective codes: ``base_code`` 0 = deterministic cost, 1 = mean cost;
  ``term_code`` 0 = none, 1 = cost std, 2 = mean trips, 3 = trip std;
  ``cons_code`` 0 = none, 1 = extra-trip tail prob <= eps,
  2 = cost std <= eps, 3 = trip std <= eps, 4 = every failure prob <= eps.
"""

from __future__ import annotations

import math

INF = float("inf")
SQRT2 = 1.4142135623730951


def phi(x: float) -> float:
    """Standard normal cumulative distribution."""
    return 0.5 * math.erfc(-x / SQRT2)


def failure_prob(sum_q: float, sum_q2: float, k_noise: float, q_cap: float) -> float:
    """P{Gaussian trip load > capacity} for load mean sum_q, variance k^2*sum_q2."""
    if k_noise == 0.0:
        if sum_q < q_cap:
            return 0.0
        if sum_q == q_cap:
            return 0.5
        return 1.0
    return 1.0 - phi((q_cap - sum_q) / (k_noise * math.sqrt(sum_q2)))


def seq_stats(seq, tails, heads, tcost, tdem, D, depot, q_cap, k_noise):
    """(det_cost, load, sum_q2, failure_prob, detour_cost) of one task sequence."""
    a = seq[0]
    det = D[depot, tails[a]] + tcost[a >> 1] + D[heads[a], depot]
    load = tdem[a >> 1]
    sq2 = load * load
    for k in range(1, len(seq)):
        b = seq[k]
        prev = seq[k - 1]
        det = det + D[heads[prev], tails[b]] + tcost[b >> 1] \
            + D[heads[b], depot] - D[heads[prev], depot]
        d = tdem[b >> 1]
        load = load + d
        sq2 = sq2 + d * d
    if len(seq) >= 2:
        pl = seq[-2]
        la = seq[-1]
        s = D[heads[pl], depot] + D[depot, tails[la]] - D[heads[pl], tails[la]]
    else:
        s = 0.0
    p = failure_prob(load, sq2, k_noise, q_cap)
    return float(det), float(load), float(sq2), float(p), float(s)


def _segment_weight(det, p, s, base_code, term_code, kw):
    w = det
    if base_code == 1:
        w = w + s * p
    if term_code == 1:
        w = w + kw * (s * math.sqrt(max(p - p * p, 0.0)))
    elif term_code == 2:
        w = w + kw * (1.0 + p)
    elif term_code == 3:
        w = w + kw * math.sqrt(max(p - p * p, 0.0))
    return w


def split(tour, tails, heads, tcost, tdem, D, depot, cap_eff, q_cap, k_noise,
          base_code, term_code, kw):
    """Optimal segmentation of a giant tour into capacity-feasible trips.

    Shortest path on the segment DAG, minimising the sum of per-trip
    surrogate weights; ties prefer fewer trips, then the earliest split
    positions.  Returns ``(bounds, total_weight)``.
    """
    t = len(tour)
    best_cost = [INF] * (t + 1)
    best_trips = [0] * (t + 1)
    nxt = [-1] * (t + 1)
    best_cost[t] = 0.0
    for i in range(t - 1, -1, -1):
        a = tour[i]
        d0 = float(tdem[a >> 1])
        if d0 > cap_eff:
            raise ValueError(
                f"task demand {d0} exceeds effective capacity {cap_eff}")
        load = d0
        sq2 = d0 * d0
        det = float(D[depot, tails[a]] + tcost[a >> 1] + D[heads[a], depot])
        s = 0.0
        bc = INF
        bt = 0
        bn = -1
        e = i + 1
        while True:
            p = failure_prob(load, sq2, k_noise, q_cap)
            w = _segment_weight(det, p, s, base_code, term_code, kw)
            cand_c = w + best_cost[e]
            cand_t = 1 + best_trips[e]
            if cand_c < bc or (cand_c == bc and cand_t < bt):
                bc = cand_c
                bt = cand_t
                bn = e
            if e == t:
                break
            b = tour[e]
            d = float(tdem[b >> 1])
            if load + d > cap_eff:
                break
            prev = tour[e - 1]
            det = det + D[heads[prev], tails[b]] + tcost[b >> 1] \
                + D[heads[b], depot] - D[heads[prev], depot]
            load = load + d
            sq2 = sq2 + d * d
            s = float(D[heads[prev], depot] + D[depot, tails[b]]
                      - D[heads[prev], tails[b]])
            e += 1
        best_cost[i] = bc
        best_trips[i] = bt
        nxt[i] = bn
    bounds = []
    pos = 0
    while pos < t:
        pos = nxt[pos]
        bounds.append(pos)
    return bounds, float(best_cost[0])


def trip_stats(tour, bounds, tails, heads, tcost, tdem, D, depot, q_cap, k_noise):
    """Per-trip (det, load, p, s) lists for a segmented tour."""
    dets, loads, ps, ss = [], [], [], []
    b = 0
    for e in bounds:
        det, load, _sq2, p, s = seq_stats(
            tour[b:e], tails, heads, tcost, tdem, D, depot, q_cap, k_noise)
        dets.append(det)
        loads.append(load)
        ps.append(p)
        ss.append(s)
        b = e
    return dets, loads, ps, ss


def poisson_binomial_tail(p_list, m: int) -> float:
    """P{sum of independent Bernoulli(p_j) > m}, exact dynamic program."""
    if m < 0:
        return 1.0
    dp = [0.0] * (m + 1)
    dp[0] = 1.0
    tail = 0.0
    for p in p_list:
        p = float(p)
        q = 1.0 - p
        tail = tail + dp[m] * p
        for k in range(m, 0, -1):
            dp[k] = dp[k] * q + dp[k - 1] * p
        dp[0] = dp[0] * q
    return tail


def objective_value(dets, ps, ss, ntrips, base_code, term_code, kw,
                    cons_code, eps, m_extra) -> float:
    """Exact objective value of a segmented solution from per-trip stats."""
    h = 0.0
    ssp = 0.0
    svar = 0.0
    sump = 0.0
    svt = 0.0
    maxp = 0.0
    for j in range(ntrips):
        h = h + dets[j]
        pj = ps[j]
        sj = ss[j]
        ssp = ssp + sj * pj
        svar = svar + sj * sj * (pj - pj * pj)
        sump = sump + pj
        svt = svt + (pj - pj * pj)
        if pj > maxp:
            maxp = pj
    base = h if base_code == 0 else h + ssp
    value = base
    if term_code == 1:
        value = base + kw * math.sqrt(max(svar, 0.0))
    elif term_code == 2:
        value = base + kw * (ntrips + sump)
    elif term_code == 3:
        value = base + kw * math.sqrt(max(svt, 0.0))
    if cons_code == 1:
        if poisson_binomial_tail(ps[:ntrips], m_extra) > eps:
            return INF
    elif cons_code == 2:
        if math.sqrt(max(svar, 0.0)) > eps:
            return INF
    elif cons_code == 3:
        if math.sqrt(max(svt, 0.0)) > eps:
            return INF
    elif cons_code == 4:
        if maxp > eps:
            return INF
    return value


def split_value(tour, tails, heads, tcost, tdem, D, depot, cap_eff, q_cap,
                k_noise, base_code, term_code, kw, cons_code, eps, m_extra):
    """Split a tour, then evaluate the exact objective on the resulting trips."""
    bounds, _w = split(tour, tails, heads, tcost, tdem, D, depot, cap_eff,
                       q_cap, k_noise, base_code, term_code, kw)
    dets, _loads, ps, ss = trip_stats(
        tour, bounds, tails, heads, tcost, tdem, D, depot, q_cap, k_noise)
    value = objective_value(dets, ps, ss, len(bounds), base_code, term_code,
                            kw, cons_code, eps, m_extra)
    return value, bounds


def ox_child(p1, p2, lo: int, hi: int, t_tasks: int):
    """Order crossover child: copy p1[lo..hi], fill circularly from p2.

    Positions outside the copied block are filled in circular order
    starting right after ``hi``, scanning ``p2`` circularly from the same
    point and skipping tasks already present in either orientation.
    """
    t = len(p1)
    child = [0] * t
    present = [False] * t_tasks
    for k in range(lo, hi + 1):
        a = p1[k]
        child[k] = a
        present[a >> 1] = True
    fill_positions = []
    k = (hi + 1) % t
    while k != lo:
        fill_positions.append(k)
        k = (k + 1) % t
    idx = 0
    k = (hi + 1) % t
    for _ in range(t):
        a = p2[k]
        if not present[a >> 1]:
            child[fill_positions[idx]] = a
            present[a >> 1] = True
            idx += 1
        k = (k + 1) % t
    return child


def execute_batch(tour, bounds, tails, heads, tcost, tdem, D, depot, q_cap, scen):
    """Run every demand scenario through the planned trips with depot recourse.

    ``scen`` is a (replications, tasks) matrix of realized demands.  Returns
    parallel lists (cost, trips, failures) in replication order.
    """
    ntr = len(bounds)
    planned_h = 0.0
    b = 0
    for e in bounds:
        det, _load, _sq2, _p, _s = seq_stats(
            tour[b:e], tails, heads, tcost, tdem, D, depot, q_cap, 0.0)
        planned_h = planned_h + det
        b = e
    n_rep = len(scen)
    costs = [0.0] * n_rep
    trips_out = [0] * n_rep
    fails_out = [0] * n_rep
    for r in range(n_rep):
        row = scen[r]
        extra = 0.0
        nfail = 0
        b = 0
        for e in bounds:
            load = 0.0
            for pos in range(b, e):
                a = tour[pos]
                td = float(row[a >> 1])
                if load + td > q_cap:
                    prev_node = depot if pos == b else heads[tour[pos - 1]]
                    extra = extra + D[prev_node, depot] + D[depot, tails[a]] \
                        - D[prev_node, tails[a]]
                    nfail += 1
                    load = 0.0
                load = load + td
            b = e
        costs[r] = planned_h + extra
        trips_out[r] = ntr + nfail
        fails_out[r] = nfail
    return costs, trips_out, fails_out


def _cand_value(dets, ps, ss, ntr, repl_idx1, st1, repl_idx2, st2,
                base_code, term_code, kw, cons_code, eps, m_extra):
    """Objective value with up to two trips replaced (stats tuple or None=drop)."""
    nd, np_, ns = [], [], []
    for j in range(ntr):
        if j == repl_idx1:
            st = st1
        elif j == repl_idx2:
            st = st2
        else:
            st = (dets[j], ps[j], ss[j])
        if st is None:
            continue
        nd.append(st[0])
        np_.append(st[1])
        ns.append(st[2])
    return objective_value(nd, np_, ns, len(nd), base_code, term_code, kw,
                           cons_code, eps, m_extra)


def local_search(tour, bounds, tails, heads, tcost, tdem, D, depot, cap_eff,
                 q_cap, k_noise, base_code, term_code, kw, cons_code, eps,
                 m_extra, max_iters):
    """First-improvement local search over a segmented solution.

    Scans, in a fixed order: single-arc relocations (both orientations),
    two-arc swaps (all orientation pairs), intra-trip 2-opt (segment
    reversal with orientation flips) and inter-trip 2-opt (both
    reconnections).  Applies the first move that strictly improves the
    objective while keeping every trip within ``cap_eff``; stops after
    ``max_iters`` applied moves or a scan with no improving move.

    Returns ``(tour, bounds, applied_moves)``.
    """
    trips = []
    b = 0
    for e in bounds:
        trips.append([int(a) for a in tour[b:e]])
        b = e

    def stats_of(seq):
        det, load, _sq2, p, s = seq_stats(
            seq, tails, heads, tcost, tdem, D, depot, q_cap, k_noise)
        return det, load, p, s

    cur = [stats_of(tr) for tr in trips]

    def value_of():
        dets = [c[0] for c in cur]
        ps = [c[2] for c in cur]
        ss = [c[3] for c in cur]
        return objective_value(dets, ps, ss, len(cur), base_code, term_code,
                               kw, cons_code, eps, m_extra)

    def try_candidate(i1, seq1, i2, seq2, cur_value):
        """Evaluate replacing trip i1 by seq1 (and i2 by seq2); None drops it."""
        st1 = None
        if seq1:
            d1, l1, p1, s1 = stats_of(seq1)
            if l1 > cap_eff:
                return None
            st1 = (d1, p1, s1)
        st2 = None
        if i2 >= 0 and seq2:
            d2, l2, p2, s2 = stats_of(seq2)
            if l2 > cap_eff:
                return None
            st2 = (d2, p2, s2)
        dets = [c[0] for c in cur]
        ps = [c[2] for c in cur]
        ss = [c[3] for c in cur]
        value = _cand_value(dets, ps, ss, len(cur), i1, st1,
                            i2 if i2 >= 0 else -1, st2, base_code,
                            term_code, kw, cons_code, eps, m_extra)
        if value < cur_value:
            return value
        return None

    def apply_candidate(i1, seq1, i2, seq2):
        if seq1:
            trips[i1] = seq1
            cur[i1] = stats_of(seq1)
        if i2 >= 0:
            if seq2:
                trips[i2] = seq2
                cur[i2] = stats_of(seq2)
            else:
                del trips[i2]
                del cur[i2]
        if not seq1:
            del trips[i1]
            del cur[i1]

    applied = 0
    for _ in range(max_iters):
        cur_value = value_of()
        move = _find_move(trips, cur, cur_value, try_candidate)
        if move is None:
            break
        i1, seq1, i2, seq2 = move
        apply_candidate(i1, seq1, i2, seq2)
        applied += 1

    new_tour = []
    new_bounds = []
    for tr in trips:
        new_tour.extend(tr)
        new_bounds.append(len(new_tour))
    return new_tour, new_bounds, applied


def _find_move(trips, cur, cur_value, try_candidate):
    ntr = len(trips)
    # (a) relocate one task arc, both orientations
    for ti in range(ntr):
        tri = trips[ti]
        for pi in range(len(tri)):
            arc = tri[pi]
            removed = tri[:pi] + tri[pi + 1:]
            for ori in (0, 1):
                moved = arc ^ ori
                for tj in range(ntr):
                    target = removed if tj == ti else trips[tj]
                    for pj in range(len(target) + 1):
                        if tj == ti and ori == 0 and pj == pi:
                            continue
                        inserted = target[:pj] + [moved] + target[pj:]
                        if tj == ti:
                            if try_candidate(ti, inserted, -1, None, cur_value) is not None:
                                return ti, inserted, -1, None
                        else:
                            if try_candidate(ti, removed, tj, inserted, cur_value) is not None:
                                return ti, removed, tj, inserted
    # (b) swap two task arcs, all orientation pairs
    for ti in range(ntr):
        tri = trips[ti]
        for pi in range(len(tri)):
            for tj in range(ti, ntr):
                trj = trips[tj]
                for pj in range(pi + 1 if tj == ti else 0, len(trj)):
                    ai = tri[pi]
                    aj = trj[pj]
                    for o1 in (0, 1):
                        for o2 in (0, 1):
                            if tj == ti:
                                seq = list(tri)
                                seq[pi] = aj ^ o2
                                seq[pj] = ai ^ o1
                                if try_candidate(ti, seq, -1, None, cur_value) is not None:
                                    return ti, seq, -1, None
                            else:
                                si = list(tri)
                                sj = list(trj)
                                si[pi] = aj ^ o2
                                sj[pj] = ai ^ o1
                                if try_candidate(ti, si, tj, sj, cur_value) is not None:
                                    return ti, si, tj, sj
    # (c) 2-opt inside one trip: reverse a segment, flipping orientations
    for ti in range(ntr):
        tri = trips[ti]
        for p1 in range(len(tri) - 1):
            for p2 in range(p1 + 1, len(tri)):
                mid = [a ^ 1 for a in reversed(tri[p1:p2 + 1])]
                seq = tri[:p1] + mid + tri[p2 + 1:]
                if try_candidate(ti, seq, -1, None, cur_value) is not None:
                    return ti, seq, -1, None
    # (d) 2-opt across two trips: cut both, reconnect both ways
    for ti in range(ntr):
        tri = trips[ti]
        for tj in range(ti + 1, ntr):
            trj = trips[tj]
            for c1 in range(len(tri) + 1):
                for c2 in range(len(trj) + 1):
                    if not ((c1 == len(tri) and c2 == len(trj)) or (c1 == 0 and c2 == 0)):
                        n1 = tri[:c1] + trj[c2:]
                        n2 = trj[:c2] + tri[c1:]
                        if try_candidate(ti, n1, tj, n2, cur_value) is not None:
                            return ti, n1, tj, n2
                    if not (c1 == len(tri) and c2 == 0):
                        n1 = tri[:c1] + [a ^ 1 for a in reversed(trj[:c2])]
                        n2 = [a ^ 1 for a in reversed(tri[c1:])] + trj[c2:]
                        if try_candidate(ti, n1, tj, n2, cur_value) is not None:
                            return ti, n1, tj, n2
    return None
