# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels.

Operation-for-operation twin of ``scarp._kernels.pure``; every arithmetic
step runs in the same order so both backends produce bit-identical
results.  See the pure module for the semantics.
"""

import numpy as np

from libc.math cimport erfc, sqrt, INFINITY


cdef double SQRT2 = 1.4142135623730951


cdef inline double phi_c(double x) noexcept:
    return 0.5 * erfc(-x / SQRT2)


cdef inline double failure_prob_c(double sum_q, double sum_q2,
                                  double k_noise, double q_cap) noexcept:
    if k_noise == 0.0:
        if sum_q < q_cap:
            return 0.0
        if sum_q == q_cap:
            return 0.5
        return 1.0
    return 1.0 - phi_c((q_cap - sum_q) / (k_noise * sqrt(sum_q2)))


def phi(double x):
    """Standard normal cumulative distribution."""
    return phi_c(x)


def failure_prob(double sum_q, double sum_q2, double k_noise, double q_cap):
    """P{Gaussian trip load > capacity}."""
    return failure_prob_c(sum_q, sum_q2, k_noise, q_cap)


cdef void seq_stats_c(const int* seq, int n, const int[::1] tails,
                      const int[::1] heads, const double[::1] tcost,
                      const double[::1] tdem, const double[:, ::1] D,
                      int depot, double q_cap, double k_noise,
                      double* out) noexcept:
    """out = [det, load, sq2, p, s]"""
    cdef int a = seq[0]
    cdef double det = D[depot, tails[a]] + tcost[a >> 1] + D[heads[a], depot]
    cdef double load = tdem[a >> 1]
    cdef double sq2 = load * load
    cdef double s = 0.0
    cdef double d
    cdef int k, b, prev, pl, la
    for k in range(1, n):
        b = seq[k]
        prev = seq[k - 1]
        det = det + D[heads[prev], tails[b]] + tcost[b >> 1] \
            + D[heads[b], depot] - D[heads[prev], depot]
        d = tdem[b >> 1]
        load = load + d
        sq2 = sq2 + d * d
    if n >= 2:
        pl = seq[n - 2]
        la = seq[n - 1]
        s = D[heads[pl], depot] + D[depot, tails[la]] - D[heads[pl], tails[la]]
    out[0] = det
    out[1] = load
    out[2] = sq2
    out[3] = failure_prob_c(load, sq2, k_noise, q_cap)
    out[4] = s


def seq_stats(seq, tails, heads, tcost, tdem, D, depot, q_cap, k_noise):
    """(det_cost, load, sum_q2, failure_prob, detour_cost) of one task sequence."""
    cdef int n = len(seq)
    buf = np.empty(n, dtype=np.int32)
    cdef int[::1] bv = buf
    cdef int k
    for k in range(n):
        bv[k] = seq[k]
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] tcost_v = np.ascontiguousarray(tcost, dtype=np.float64)
    cdef double[::1] tdem_v = np.ascontiguousarray(tdem, dtype=np.float64)
    cdef double[:, ::1] D_v = np.ascontiguousarray(D, dtype=np.float64)
    cdef double out[5]
    seq_stats_c(&bv[0], n, tails_v, heads_v, tcost_v, tdem_v, D_v,
                depot, q_cap, k_noise, out)
    return out[0], out[1], out[2], out[3], out[4]


cdef inline double segment_weight_c(double det, double p, double s,
                                    int base_code, int term_code,
                                    double kw) noexcept:
    cdef double w = det
    cdef double v
    if base_code == 1:
        w = w + s * p
    if term_code == 1:
        v = p - p * p
        if v < 0.0:
            v = 0.0
        w = w + kw * (s * sqrt(v))
    elif term_code == 2:
        w = w + kw * (1.0 + p)
    elif term_code == 3:
        v = p - p * p
        if v < 0.0:
            v = 0.0
        w = w + kw * sqrt(v)
    return w


def split(tour, tails, heads, tcost, tdem, D, depot, double cap_eff,
          double q_cap, double k_noise, int base_code, int term_code,
          double kw):
    """Optimal giant-tour segmentation; returns (bounds, total_weight)."""
    cdef int[::1] tour_v = np.ascontiguousarray(tour, dtype=np.int32)
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] tcost_v = np.ascontiguousarray(tcost, dtype=np.float64)
    cdef double[::1] tdem_v = np.ascontiguousarray(tdem, dtype=np.float64)
    cdef double[:, ::1] D_v = np.ascontiguousarray(D, dtype=np.float64)
    cdef int t = tour_v.shape[0]
    best_cost_a = np.empty(t + 1, dtype=np.float64)
    best_trips_a = np.empty(t + 1, dtype=np.int32)
    nxt_a = np.empty(t + 1, dtype=np.int32)
    cdef double[::1] best_cost = best_cost_a
    cdef int[::1] best_trips = best_trips_a
    cdef int[::1] nxt = nxt_a
    cdef int i, e, a, b, prev, bn, bt, cand_t, pos
    cdef double d0, load, sq2, det, s, p, w, cand_c, bc, d
    cdef int dep = depot

    best_cost[t] = 0.0
    best_trips[t] = 0
    nxt[t] = -1
    for i in range(t - 1, -1, -1):
        a = tour_v[i]
        d0 = tdem_v[a >> 1]
        if d0 > cap_eff:
            raise ValueError(
                f"task demand {d0} exceeds effective capacity {cap_eff}")
        load = d0
        sq2 = d0 * d0
        det = D_v[dep, tails_v[a]] + tcost_v[a >> 1] + D_v[heads_v[a], dep]
        s = 0.0
        bc = INFINITY
        bt = 0
        bn = -1
        e = i + 1
        while True:
            p = failure_prob_c(load, sq2, k_noise, q_cap)
            w = segment_weight_c(det, p, s, base_code, term_code, kw)
            cand_c = w + best_cost[e]
            cand_t = 1 + best_trips[e]
            if cand_c < bc or (cand_c == bc and cand_t < bt):
                bc = cand_c
                bt = cand_t
                bn = e
            if e == t:
                break
            b = tour_v[e]
            d = tdem_v[b >> 1]
            if load + d > cap_eff:
                break
            prev = tour_v[e - 1]
            det = det + D_v[heads_v[prev], tails_v[b]] + tcost_v[b >> 1] \
                + D_v[heads_v[b], dep] - D_v[heads_v[prev], dep]
            load = load + d
            sq2 = sq2 + d * d
            s = D_v[heads_v[prev], dep] + D_v[dep, tails_v[b]] \
                - D_v[heads_v[prev], tails_v[b]]
            e += 1
        best_cost[i] = bc
        best_trips[i] = bt
        nxt[i] = bn
    bounds = []
    pos = 0
    while pos < t:
        pos = nxt[pos]
        bounds.append(pos)
    return bounds, best_cost[0]


def trip_stats(tour, bounds, tails, heads, tcost, tdem, D, depot,
               double q_cap, double k_noise):
    """Per-trip (det, load, p, s) lists for a segmented tour."""
    cdef int[::1] tour_v = np.ascontiguousarray(tour, dtype=np.int32)
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] tcost_v = np.ascontiguousarray(tcost, dtype=np.float64)
    cdef double[::1] tdem_v = np.ascontiguousarray(tdem, dtype=np.float64)
    cdef double[:, ::1] D_v = np.ascontiguousarray(D, dtype=np.float64)
    cdef double out[5]
    cdef int b = 0
    cdef int e
    dets, loads, ps, ss = [], [], [], []
    for e in bounds:
        seq_stats_c(&tour_v[b], e - b, tails_v, heads_v, tcost_v, tdem_v,
                    D_v, depot, q_cap, k_noise, out)
        dets.append(out[0])
        loads.append(out[1])
        ps.append(out[3])
        ss.append(out[4])
        b = e
    return dets, loads, ps, ss


cdef double poisson_binomial_tail_c(const double* ps, int n, int m,
                                    double* dp) noexcept:
    cdef double tail = 0.0
    cdef double p, q
    cdef int j, k
    for k in range(m + 1):
        dp[k] = 0.0
    dp[0] = 1.0
    for j in range(n):
        p = ps[j]
        q = 1.0 - p
        tail = tail + dp[m] * p
        for k in range(m, 0, -1):
            dp[k] = dp[k] * q + dp[k - 1] * p
        dp[0] = dp[0] * q
    return tail


def poisson_binomial_tail(p_list, int m):
    """P{sum of independent Bernoulli(p_j) > m}, exact dynamic program."""
    if m < 0:
        return 1.0
    cdef int n = len(p_list)
    ps_a = np.empty(n if n else 1, dtype=np.float64)
    cdef double[::1] ps = ps_a
    cdef int j
    for j in range(n):
        ps[j] = p_list[j]
    dp_a = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] dp = dp_a
    return poisson_binomial_tail_c(&ps[0], n, m, &dp[0])


cdef double objective_value_c(const double* dets, const double* ps,
                              const double* ss, int ntrips, int base_code,
                              int term_code, double kw, int cons_code,
                              double eps, int m_extra, double* dp) noexcept:
    cdef double h = 0.0
    cdef double ssp = 0.0
    cdef double svar = 0.0
    cdef double sump = 0.0
    cdef double svt = 0.0
    cdef double maxp = 0.0
    cdef double pj, sj, base, value, v
    cdef int j
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
        v = svar
        if v < 0.0:
            v = 0.0
        value = base + kw * sqrt(v)
    elif term_code == 2:
        value = base + kw * (ntrips + sump)
    elif term_code == 3:
        v = svt
        if v < 0.0:
            v = 0.0
        value = base + kw * sqrt(v)
    if cons_code == 1:
        if poisson_binomial_tail_c(ps, ntrips, m_extra, dp) > eps:
            return INFINITY
    elif cons_code == 2:
        v = svar
        if v < 0.0:
            v = 0.0
        if sqrt(v) > eps:
            return INFINITY
    elif cons_code == 3:
        v = svt
        if v < 0.0:
            v = 0.0
        if sqrt(v) > eps:
            return INFINITY
    elif cons_code == 4:
        if maxp > eps:
            return INFINITY
    return value


def objective_value(dets, ps, ss, int ntrips, int base_code, int term_code,
                    double kw, int cons_code, double eps, int m_extra):
    """Exact objective value of a segmented solution from per-trip stats."""
    cdef int n = ntrips
    d_a = np.empty(n if n else 1, dtype=np.float64)
    p_a = np.empty(n if n else 1, dtype=np.float64)
    s_a = np.empty(n if n else 1, dtype=np.float64)
    cdef double[::1] dv = d_a
    cdef double[::1] pv = p_a
    cdef double[::1] sv = s_a
    cdef int j
    for j in range(n):
        dv[j] = dets[j]
        pv[j] = ps[j]
        sv[j] = ss[j]
    dp_a = np.empty(m_extra + 1 if m_extra >= 0 else 1, dtype=np.float64)
    cdef double[::1] dp = dp_a
    return objective_value_c(&dv[0], &pv[0], &sv[0], n, base_code, term_code,
                             kw, cons_code, eps, m_extra, &dp[0])


def split_value(tour, tails, heads, tcost, tdem, D, depot, double cap_eff,
                double q_cap, double k_noise, int base_code, int term_code,
                double kw, int cons_code, double eps, int m_extra):
    """Split a tour, then evaluate the exact objective on the resulting trips."""
    bounds, _w = split(tour, tails, heads, tcost, tdem, D, depot, cap_eff,
                       q_cap, k_noise, base_code, term_code, kw)
    dets, _loads, ps, ss = trip_stats(tour, bounds, tails, heads, tcost,
                                      tdem, D, depot, q_cap, k_noise)
    value = objective_value(dets, ps, ss, len(bounds), base_code, term_code,
                            kw, cons_code, eps, m_extra)
    return value, bounds


def ox_child(p1, p2, int lo, int hi, int t_tasks):
    """Order crossover child: copy p1[lo..hi], fill circularly from p2."""
    cdef int[::1] p1v = np.ascontiguousarray(p1, dtype=np.int32)
    cdef int[::1] p2v = np.ascontiguousarray(p2, dtype=np.int32)
    cdef int t = p1v.shape[0]
    child_a = np.zeros(t, dtype=np.int32)
    present_a = np.zeros(t_tasks, dtype=np.uint8)
    fill_a = np.empty(t, dtype=np.int32)
    cdef int[::1] child = child_a
    cdef unsigned char[::1] present = present_a
    cdef int[::1] fill_positions = fill_a
    cdef int k, a, idx, nfill, step
    for k in range(lo, hi + 1):
        a = p1v[k]
        child[k] = a
        present[a >> 1] = 1
    nfill = 0
    k = (hi + 1) % t
    while k != lo:
        fill_positions[nfill] = k
        nfill += 1
        k = (k + 1) % t
    idx = 0
    k = (hi + 1) % t
    for step in range(t):
        a = p2v[k]
        if not present[a >> 1]:
            child[fill_positions[idx]] = a
            present[a >> 1] = 1
            idx += 1
        k = (k + 1) % t
    return [child[k] for k in range(t)]


def execute_batch(tour, bounds, tails, heads, tcost, tdem, D, depot,
                  double q_cap, scen):
    """Run every demand scenario through the planned trips with depot recourse."""
    cdef int[::1] tour_v = np.ascontiguousarray(tour, dtype=np.int32)
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] tcost_v = np.ascontiguousarray(tcost, dtype=np.float64)
    cdef double[::1] tdem_v = np.ascontiguousarray(tdem, dtype=np.float64)
    cdef double[:, ::1] D_v = np.ascontiguousarray(D, dtype=np.float64)
    cdef double[:, ::1] scen_v = np.ascontiguousarray(scen, dtype=np.float64)
    cdef int ntr = len(bounds)
    bounds_a = np.asarray(bounds, dtype=np.int32)
    cdef int[::1] bounds_v = np.ascontiguousarray(bounds_a)
    cdef double out[5]
    cdef double planned_h = 0.0
    cdef int b = 0
    cdef int e, ti
    for ti in range(ntr):
        e = bounds_v[ti]
        seq_stats_c(&tour_v[b], e - b, tails_v, heads_v, tcost_v, tdem_v,
                    D_v, depot, q_cap, 0.0, out)
        planned_h = planned_h + out[0]
        b = e
    cdef int n_rep = scen_v.shape[0]
    costs_a = np.empty(n_rep, dtype=np.float64)
    trips_a = np.empty(n_rep, dtype=np.int32)
    fails_a = np.empty(n_rep, dtype=np.int32)
    cdef double[::1] costs = costs_a
    cdef int[::1] trips_out = trips_a
    cdef int[::1] fails_out = fails_a
    cdef int r, pos, a, nfail, prev_node, dep
    cdef double extra, load, td
    dep = depot
    for r in range(n_rep):
        extra = 0.0
        nfail = 0
        b = 0
        for ti in range(ntr):
            e = bounds_v[ti]
            load = 0.0
            for pos in range(b, e):
                a = tour_v[pos]
                td = scen_v[r, a >> 1]
                if load + td > q_cap:
                    prev_node = dep if pos == b else heads_v[tour_v[pos - 1]]
                    extra = extra + D_v[prev_node, dep] + D_v[dep, tails_v[a]] \
                        - D_v[prev_node, tails_v[a]]
                    nfail += 1
                    load = 0.0
                load = load + td
            b = e
        costs[r] = planned_h + extra
        trips_out[r] = ntr + nfail
        fails_out[r] = nfail
    return costs_a, trips_a, fails_a


# ---------------------------------------------------------------------------
# local search
# ---------------------------------------------------------------------------

cdef struct LsState:
    int* rows           # ntr_max rows of t ints each
    int* lens
    double* det_a
    double* load_a
    double* p_a
    double* s_a
    int ntr
    int t
    int row_stride


cdef int try_candidate_c(LsState* st, int i1, const int* seq1, int len1,
                         int i2, const int* seq2, int len2,
                         double cur_value,
                         const int[::1] tails, const int[::1] heads,
                         const double[::1] tcost, const double[::1] tdem,
                         const double[:, ::1] D, int depot, double cap_eff,
                         double q_cap, double k_noise, int base_code,
                         int term_code, double kw, int cons_code, double eps,
                         int m_extra, double* cd, double* cp, double* cs,
                         double* dp, double* out1, double* out2) noexcept:
    """1 when replacing trip i1 by seq1 (and i2 by seq2) strictly improves."""
    cdef int k, j
    cdef double value
    if len1 > 0:
        seq_stats_c(seq1, len1, tails, heads, tcost, tdem, D, depot, q_cap,
                    k_noise, out1)
        if out1[1] > cap_eff:
            return 0
    if i2 >= 0 and len2 > 0:
        seq_stats_c(seq2, len2, tails, heads, tcost, tdem, D, depot, q_cap,
                    k_noise, out2)
        if out2[1] > cap_eff:
            return 0
    k = 0
    for j in range(st.ntr):
        if j == i1:
            if len1 == 0:
                continue
            cd[k] = out1[0]
            cp[k] = out1[3]
            cs[k] = out1[4]
        elif j == i2:
            if len2 == 0:
                continue
            cd[k] = out2[0]
            cp[k] = out2[3]
            cs[k] = out2[4]
        else:
            cd[k] = st.det_a[j]
            cp[k] = st.p_a[j]
            cs[k] = st.s_a[j]
        k += 1
    value = objective_value_c(cd, cp, cs, k, base_code, term_code, kw,
                              cons_code, eps, m_extra, dp)
    if value < cur_value:
        return 1
    return 0


cdef void apply_move_c(LsState* st, int i1, const int* seq1, int len1,
                       int i2, const int* seq2, int len2,
                       const int[::1] tails, const int[::1] heads,
                       const double[::1] tcost, const double[::1] tdem,
                       const double[:, ::1] D, int depot, double q_cap,
                       double k_noise, double* out) noexcept:
    cdef int k, j
    if len1 > 0:
        for k in range(len1):
            st.rows[i1 * st.row_stride + k] = seq1[k]
        st.lens[i1] = len1
        seq_stats_c(seq1, len1, tails, heads, tcost, tdem, D, depot, q_cap,
                    k_noise, out)
        st.det_a[i1] = out[0]
        st.load_a[i1] = out[1]
        st.p_a[i1] = out[3]
        st.s_a[i1] = out[4]
    if i2 >= 0:
        if len2 > 0:
            for k in range(len2):
                st.rows[i2 * st.row_stride + k] = seq2[k]
            st.lens[i2] = len2
            seq_stats_c(seq2, len2, tails, heads, tcost, tdem, D, depot,
                        q_cap, k_noise, out)
            st.det_a[i2] = out[0]
            st.load_a[i2] = out[1]
            st.p_a[i2] = out[3]
            st.s_a[i2] = out[4]
        else:
            _delete_trip(st, i2)
            if i1 > i2:
                i1 -= 1
    if len1 == 0:
        _delete_trip(st, i1)


cdef void _delete_trip(LsState* st, int idx) noexcept:
    cdef int j, k
    for j in range(idx, st.ntr - 1):
        st.lens[j] = st.lens[j + 1]
        for k in range(st.lens[j]):
            st.rows[j * st.row_stride + k] = st.rows[(j + 1) * st.row_stride + k]
        st.det_a[j] = st.det_a[j + 1]
        st.load_a[j] = st.load_a[j + 1]
        st.p_a[j] = st.p_a[j + 1]
        st.s_a[j] = st.s_a[j + 1]
    st.ntr -= 1


def local_search(tour, bounds, tails, heads, tcost, tdem, D, depot,
                 double cap_eff, double q_cap, double k_noise, int base_code,
                 int term_code, double kw, int cons_code, double eps,
                 int m_extra, int max_iters):
    """First-improvement local search over a segmented solution.

    Same move families and scan order as the pure backend; returns
    ``(tour, bounds, applied_moves)``.
    """
    cdef int[::1] tour_v = np.ascontiguousarray(tour, dtype=np.int32)
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] tcost_v = np.ascontiguousarray(tcost, dtype=np.float64)
    cdef double[::1] tdem_v = np.ascontiguousarray(tdem, dtype=np.float64)
    cdef double[:, ::1] D_v = np.ascontiguousarray(D, dtype=np.float64)
    cdef int t = tour_v.shape[0]
    cdef int ntr0 = len(bounds)

    rows_a = np.zeros((t, t), dtype=np.int32)
    lens_a = np.zeros(t, dtype=np.int32)
    det_aa = np.zeros(t, dtype=np.float64)
    load_aa = np.zeros(t, dtype=np.float64)
    p_aa = np.zeros(t, dtype=np.float64)
    s_aa = np.zeros(t, dtype=np.float64)
    cdef int[:, ::1] rows_v = rows_a
    cdef int[::1] lens_v = lens_a
    cdef double[::1] det_v = det_aa
    cdef double[::1] load_v = load_aa
    cdef double[::1] p_v = p_aa
    cdef double[::1] s_v = s_aa

    cdef LsState st
    st.rows = &rows_v[0, 0]
    st.lens = &lens_v[0]
    st.det_a = &det_v[0]
    st.load_a = &load_v[0]
    st.p_a = &p_v[0]
    st.s_a = &s_v[0]
    st.ntr = ntr0
    st.t = t
    st.row_stride = t

    cdef double out[5]
    cdef double out2[5]
    cdef int b = 0
    cdef int e, ti, k
    for ti in range(ntr0):
        e = bounds[ti]
        st.lens[ti] = e - b
        for k in range(e - b):
            st.rows[ti * t + k] = tour_v[b + k]
        seq_stats_c(&st.rows[ti * t], e - b, tails_v, heads_v, tcost_v,
                    tdem_v, D_v, depot, q_cap, k_noise, out)
        st.det_a[ti] = out[0]
        st.load_a[ti] = out[1]
        st.p_a[ti] = out[3]
        st.s_a[ti] = out[4]
        b = e

    seq1_a = np.zeros(t + 2, dtype=np.int32)
    seq2_a = np.zeros(t + 2, dtype=np.int32)
    removed_a = np.zeros(t + 2, dtype=np.int32)
    cd_a = np.zeros(t + 1, dtype=np.float64)
    cp_a = np.zeros(t + 1, dtype=np.float64)
    cs_a = np.zeros(t + 1, dtype=np.float64)
    dp_a = np.zeros(m_extra + 2, dtype=np.float64)
    cdef int[::1] seq1 = seq1_a
    cdef int[::1] seq2 = seq2_a
    cdef int[::1] removed = removed_a
    cdef double[::1] cd = cd_a
    cdef double[::1] cp = cp_a
    cdef double[::1] cs = cs_a
    cdef double[::1] dp = dp_a

    cdef int applied = 0
    cdef int it, found
    cdef double cur_value
    for it in range(max_iters):
        cur_value = objective_value_c(st.det_a, st.p_a, st.s_a, st.ntr,
                                      base_code, term_code, kw, cons_code,
                                      eps, m_extra, &dp[0])
        found = _scan_and_apply(&st, cur_value, tails_v, heads_v, tcost_v,
                                tdem_v, D_v, depot, cap_eff, q_cap, k_noise,
                                base_code, term_code, kw, cons_code, eps,
                                m_extra, &seq1[0], &seq2[0], &removed[0],
                                &cd[0], &cp[0], &cs[0], &dp[0], out, out2)
        if not found:
            break
        applied += 1

    new_tour = []
    new_bounds = []
    for ti in range(st.ntr):
        for k in range(st.lens[ti]):
            new_tour.append(st.rows[ti * t + k])
        new_bounds.append(len(new_tour))
    return new_tour, new_bounds, applied


cdef int _scan_and_apply(LsState* st, double cur_value,
                         const int[::1] tails, const int[::1] heads,
                         const double[::1] tcost, const double[::1] tdem,
                         const double[:, ::1] D, int depot, double cap_eff,
                         double q_cap, double k_noise, int base_code,
                         int term_code, double kw, int cons_code, double eps,
                         int m_extra, int* seq1, int* seq2, int* removed,
                         double* cd, double* cp, double* cs, double* dp,
                         double* out1, double* out2) noexcept:
    cdef int ntr = st.ntr
    cdef int stride = st.row_stride
    cdef int ti, pi, tj, pj, ori, o1, o2, p1, p2, c1, c2
    cdef int li, lj, k, arc, moved, ai, aj, n1len, n2len
    cdef int* tri
    cdef int* trj

    # (a) relocate one task arc, both orientations
    for ti in range(ntr):
        tri = &st.rows[ti * stride]
        li = st.lens[ti]
        for pi in range(li):
            arc = tri[pi]
            for k in range(pi):
                removed[k] = tri[k]
            for k in range(pi + 1, li):
                removed[k - 1] = tri[k]
            for ori in range(2):
                moved = arc ^ ori
                for tj in range(ntr):
                    if tj == ti:
                        for pj in range(li):
                            if ori == 0 and pj == pi:
                                continue
                            for k in range(pj):
                                seq1[k] = removed[k]
                            seq1[pj] = moved
                            for k in range(pj, li - 1):
                                seq1[k + 1] = removed[k]
                            if try_candidate_c(st, ti, seq1, li, -1, NULL, 0,
                                               cur_value, tails, heads, tcost,
                                               tdem, D, depot, cap_eff, q_cap,
                                               k_noise, base_code, term_code,
                                               kw, cons_code, eps, m_extra,
                                               cd, cp, cs, dp, out1, out2):
                                apply_move_c(st, ti, seq1, li, -1, NULL, 0,
                                             tails, heads, tcost, tdem, D,
                                             depot, q_cap, k_noise, out1)
                                return 1
                    else:
                        trj = &st.rows[tj * stride]
                        lj = st.lens[tj]
                        for pj in range(lj + 1):
                            for k in range(pj):
                                seq2[k] = trj[k]
                            seq2[pj] = moved
                            for k in range(pj, lj):
                                seq2[k + 1] = trj[k]
                            if try_candidate_c(st, ti, removed, li - 1, tj,
                                               seq2, lj + 1, cur_value, tails,
                                               heads, tcost, tdem, D, depot,
                                               cap_eff, q_cap, k_noise,
                                               base_code, term_code, kw,
                                               cons_code, eps, m_extra, cd,
                                               cp, cs, dp, out1, out2):
                                apply_move_c(st, ti, removed, li - 1, tj,
                                             seq2, lj + 1, tails, heads,
                                             tcost, tdem, D, depot, q_cap,
                                             k_noise, out1)
                                return 1
    # (b) swap two task arcs, all orientation pairs
    for ti in range(ntr):
        tri = &st.rows[ti * stride]
        li = st.lens[ti]
        for pi in range(li):
            for tj in range(ti, ntr):
                trj = &st.rows[tj * stride]
                lj = st.lens[tj]
                for pj in range(pi + 1 if tj == ti else 0, lj):
                    ai = tri[pi]
                    aj = trj[pj]
                    for o1 in range(2):
                        for o2 in range(2):
                            if tj == ti:
                                for k in range(li):
                                    seq1[k] = tri[k]
                                seq1[pi] = aj ^ o2
                                seq1[pj] = ai ^ o1
                                if try_candidate_c(st, ti, seq1, li, -1, NULL,
                                                   0, cur_value, tails, heads,
                                                   tcost, tdem, D, depot,
                                                   cap_eff, q_cap, k_noise,
                                                   base_code, term_code, kw,
                                                   cons_code, eps, m_extra,
                                                   cd, cp, cs, dp, out1, out2):
                                    apply_move_c(st, ti, seq1, li, -1, NULL,
                                                 0, tails, heads, tcost, tdem,
                                                 D, depot, q_cap, k_noise,
                                                 out1)
                                    return 1
                            else:
                                for k in range(li):
                                    seq1[k] = tri[k]
                                for k in range(lj):
                                    seq2[k] = trj[k]
                                seq1[pi] = aj ^ o2
                                seq2[pj] = ai ^ o1
                                if try_candidate_c(st, ti, seq1, li, tj, seq2,
                                                   lj, cur_value, tails,
                                                   heads, tcost, tdem, D,
                                                   depot, cap_eff, q_cap,
                                                   k_noise, base_code,
                                                   term_code, kw, cons_code,
                                                   eps, m_extra, cd, cp, cs,
                                                   dp, out1, out2):
                                    apply_move_c(st, ti, seq1, li, tj, seq2,
                                                 lj, tails, heads, tcost,
                                                 tdem, D, depot, q_cap,
                                                 k_noise, out1)
                                    return 1
    # (c) 2-opt inside one trip: reverse a segment, flipping orientations
    for ti in range(ntr):
        tri = &st.rows[ti * stride]
        li = st.lens[ti]
        for p1 in range(li - 1):
            for p2 in range(p1 + 1, li):
                for k in range(p1):
                    seq1[k] = tri[k]
                for k in range(p1, p2 + 1):
                    seq1[k] = tri[p2 - (k - p1)] ^ 1
                for k in range(p2 + 1, li):
                    seq1[k] = tri[k]
                if try_candidate_c(st, ti, seq1, li, -1, NULL, 0, cur_value,
                                   tails, heads, tcost, tdem, D, depot,
                                   cap_eff, q_cap, k_noise, base_code,
                                   term_code, kw, cons_code, eps, m_extra,
                                   cd, cp, cs, dp, out1, out2):
                    apply_move_c(st, ti, seq1, li, -1, NULL, 0, tails, heads,
                                 tcost, tdem, D, depot, q_cap, k_noise, out1)
                    return 1
    # (d) 2-opt across two trips: cut both, reconnect both ways
    for ti in range(ntr):
        li = st.lens[ti]
        for tj in range(ti + 1, ntr):
            lj = st.lens[tj]
            tri = &st.rows[ti * stride]
            trj = &st.rows[tj * stride]
            for c1 in range(li + 1):
                for c2 in range(lj + 1):
                    if not ((c1 == li and c2 == lj) or (c1 == 0 and c2 == 0)):
                        n1len = c1 + (lj - c2)
                        for k in range(c1):
                            seq1[k] = tri[k]
                        for k in range(c2, lj):
                            seq1[c1 + (k - c2)] = trj[k]
                        n2len = c2 + (li - c1)
                        for k in range(c2):
                            seq2[k] = trj[k]
                        for k in range(c1, li):
                            seq2[c2 + (k - c1)] = tri[k]
                        if try_candidate_c(st, ti, seq1, n1len, tj, seq2,
                                           n2len, cur_value, tails, heads,
                                           tcost, tdem, D, depot, cap_eff,
                                           q_cap, k_noise, base_code,
                                           term_code, kw, cons_code, eps,
                                           m_extra, cd, cp, cs, dp, out1,
                                           out2):
                            apply_move_c(st, ti, seq1, n1len, tj, seq2,
                                         n2len, tails, heads, tcost, tdem, D,
                                         depot, q_cap, k_noise, out1)
                            return 1
                    if not (c1 == li and c2 == 0):
                        n1len = c1 + c2
                        for k in range(c1):
                            seq1[k] = tri[k]
                        for k in range(c2):
                            seq1[c1 + k] = trj[c2 - 1 - k] ^ 1
                        n2len = (li - c1) + (lj - c2)
                        for k in range(li - c1):
                            seq2[k] = tri[li - 1 - k] ^ 1
                        for k in range(c2, lj):
                            seq2[(li - c1) + (k - c2)] = trj[k]
                        if try_candidate_c(st, ti, seq1, n1len, tj, seq2,
                                           n2len, cur_value, tails, heads,
                                           tcost, tdem, D, depot, cap_eff,
                                           q_cap, k_noise, base_code,
                                           term_code, kw, cons_code, eps,
                                           m_extra, cd, cp, cs, dp, out1,
                                           out2):
                            apply_move_c(st, ti, seq1, n1len, tj, seq2,
                                         n2len, tails, heads, tcost, tdem, D,
                                         depot, q_cap, k_noise, out1)
                            return 1
    return 0
