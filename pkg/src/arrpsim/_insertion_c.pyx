# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled insertion kernel; faithful twin of _insertion_py.

Same position semantics and the same arithmetic, operation for operation, so
both kernels return bit-identical verdicts and costs. See _insertion_py for
the commented reference implementation.
"""

import numpy as np

cimport numpy as cnp

COMPILED = True

cdef extern from "math.h":
    double INFINITY

cdef double _MARGIN = 1e-6
cdef double _P_DUST = 1e-9
cdef int _MAXS = 64

cdef int PICKUP = 0
cdef int DROPOFF = 1


cdef inline void _best_core(double[:, ::1] tau, double[:, ::1] dist,
                            int[:, ::1] s_node, signed char[:, ::1] s_kind,
                            double[:, ::1] s_e, double[:, ::1] s_l,
                            double[:, ::1] s_a, double[:, ::1] s_t,
                            int[:, ::1] s_pair, double[:, ::1] s_alpha,
                            double[:, ::1] s_tdir, double[:, ::1] s_D,
                            short[:, ::1] s_q, short[:, ::1] s_occ_after,
                            int v, int L, int occ0, int eff_node, double eff_time,
                            int o, int dnode, double e, double l, int q,
                            double tdir, double D, double w_m, int cap,
                            int p_fix, int d_fix,
                            double *best_cost, int *best_p, int *best_d) noexcept nogil:
    cdef double theta[65]
    cdef double new_t[64]
    cdef int p, d, j, p_start, p_end, d_start, d_end, prev_node, occ_before
    cdef int nd, nd0, pr, bn, nxt, dn_prev, nxt2, chain_node, tail_node, j0
    cdef double prev_t, a_o, s_o, delta_p, chain_t, a_j, t_j, ej, alpha
    cdef double a_do, delta_d, tail_t, cost, wait, slack, rest
    cdef bint chain_broken, ok

    best_cost[0] = INFINITY
    best_p[0] = -1
    best_d[0] = -1
    if q > cap or L > _MAXS:
        return
    if eff_time + tau[eff_node, o] > l + _P_DUST:
        return
    if p_fix >= 0 and not (0 <= p_fix <= L):
        return
    if d_fix >= 0 and not ((p_fix if p_fix > 0 else 0) <= d_fix <= L):
        return

    theta[L] = INFINITY
    for j in range(L - 1, -1, -1):
        wait = s_t[v, j] - s_a[v, j]
        slack = s_l[v, j] - s_t[v, j]
        rest = theta[j + 1]
        theta[j] = wait + (slack if slack < rest else rest)

    p_start = L if p_fix < 0 else p_fix
    p_end = -1 if p_fix < 0 else p_fix - 1
    for p in range(p_start, p_end, -1):
        if p == 0:
            prev_node = eff_node
            prev_t = eff_time
        else:
            prev_node = s_node[v, p - 1]
            prev_t = s_t[v, p - 1]
        a_o = prev_t + tau[prev_node, o]
        if e - a_o > w_m:
            if p_fix < 0:
                break
            continue
        if a_o > l:
            continue
        s_o = a_o if a_o > e else e
        occ_before = occ0 if p == 0 else s_occ_after[v, p - 1]
        if occ_before + q > cap:
            continue
        if p < L:
            delta_p = (s_o + tau[o, s_node[v, p]]) - s_a[v, p]
            if delta_p > theta[p] + _MARGIN:
                continue

        chain_node = o
        chain_t = s_o
        chain_broken = False
        d_start = p if d_fix < 0 else d_fix
        d_end = (L if d_fix < 0 else d_fix) + 1
        for d in range(d_start, d_end):
            j0 = p if d == d_start else d - 1
            for j in range(j0, d):
                nd = s_node[v, j]
                a_j = chain_t + tau[chain_node, nd]
                if s_kind[v, j] == PICKUP:
                    if a_j > s_l[v, j]:
                        chain_broken = True
                        break
                    ej = s_e[v, j]
                    t_j = a_j if a_j > ej else ej
                else:
                    t_j = a_j
                    if t_j > s_l[v, j]:
                        chain_broken = True
                        break
                    pr = s_pair[v, j]
                    alpha = new_t[pr] if pr >= p else s_alpha[v, j]
                    if (t_j - alpha) - s_tdir[v, j] > s_D[v, j]:
                        chain_broken = True
                        break
                if s_occ_after[v, j] + q > cap:
                    chain_broken = True
                    break
                new_t[j] = t_j
                chain_node = nd
                chain_t = t_j
            if chain_broken:
                break

            a_do = chain_t + tau[chain_node, dnode]
            if (a_do - s_o) - tdir > D:
                break
            ok = True
            if d < L:
                nd0 = s_node[v, d]
                delta_d = (a_do + tau[dnode, nd0]) - s_a[v, d]
                if delta_d > theta[d] + _MARGIN:
                    continue
                tail_node = dnode
                tail_t = a_do
                for j in range(d, L):
                    nd = s_node[v, j]
                    a_j = tail_t + tau[tail_node, nd]
                    if s_kind[v, j] == PICKUP:
                        if a_j > s_l[v, j]:
                            ok = False
                            break
                        ej = s_e[v, j]
                        t_j = a_j if a_j > ej else ej
                    else:
                        t_j = a_j
                        if t_j > s_l[v, j]:
                            ok = False
                            break
                        pr = s_pair[v, j]
                        alpha = new_t[pr] if pr >= p else s_alpha[v, j]
                        if (t_j - alpha) - s_tdir[v, j] > s_D[v, j]:
                            ok = False
                            break
                    new_t[j] = t_j
                    tail_node = nd
                    tail_t = t_j
            if not ok:
                continue

            if p == 0:
                bn = eff_node
            else:
                bn = s_node[v, p - 1]
            if d == p:
                cost = dist[bn, o] + dist[o, dnode]
                if p < L:
                    nxt = s_node[v, p]
                    cost += dist[dnode, nxt] - dist[bn, nxt]
            else:
                nxt = s_node[v, p]
                cost = dist[bn, o] + dist[o, nxt] - dist[bn, nxt]
                dn_prev = s_node[v, d - 1]
                cost += dist[dn_prev, dnode]
                if d < L:
                    nxt2 = s_node[v, d]
                    cost += dist[dnode, nxt2] - dist[dn_prev, nxt2]
            if cost < best_cost[0] or (cost == best_cost[0]
                                       and (p < best_p[0]
                                            or (p == best_p[0] and d < best_d[0]))):
                best_cost[0] = cost
                best_p[0] = p
                best_d[0] = d


def best_insertions(double[:, ::1] tau, double[:, ::1] dist,
                    int[:, ::1] s_node, signed char[:, ::1] s_kind,
                    double[:, ::1] s_e, double[:, ::1] s_l,
                    double[:, ::1] s_a, double[:, ::1] s_t,
                    int[:, ::1] s_pair, double[:, ::1] s_alpha,
                    double[:, ::1] s_tdir, double[:, ::1] s_D,
                    short[:, ::1] s_q, short[:, ::1] s_occ_after,
                    int[::1] sched_len, short[::1] onboard_q,
                    int[::1] cand, int[::1] eff_node, double[::1] eff_time,
                    int o, int dnode, double e, double l, int q,
                    double tdir, double D, double w_m, int cap,
                    double[::1] out_cost, int[::1] out_p, int[::1] out_d):
    cdef Py_ssize_t i
    cdef int v, bp, bd
    cdef double bc
    with nogil:
        for i in range(cand.shape[0]):
            v = cand[i]
            _best_core(tau, dist, s_node, s_kind, s_e, s_l, s_a, s_t, s_pair,
                       s_alpha, s_tdir, s_D, s_q, s_occ_after,
                       v, sched_len[v], onboard_q[v], eff_node[i], eff_time[i],
                       o, dnode, e, l, q, tdir, D, w_m, cap, -1, -1,
                       &bc, &bp, &bd)
            out_cost[i] = bc
            out_p[i] = bp
            out_d[i] = bd


def evaluate_insertion(double[:, ::1] tau, double[:, ::1] dist,
                       int[:, ::1] s_node, signed char[:, ::1] s_kind,
                       double[:, ::1] s_e, double[:, ::1] s_l,
                       double[:, ::1] s_a, double[:, ::1] s_t,
                       int[:, ::1] s_pair, double[:, ::1] s_alpha,
                       double[:, ::1] s_tdir, double[:, ::1] s_D,
                       short[:, ::1] s_q, short[:, ::1] s_occ_after,
                       int[::1] sched_len, short[::1] onboard_q,
                       int v, int eff_node, double eff_time,
                       int o, int dnode, double e, double l, int q,
                       double tdir, double D, double w_m, int cap, int p, int d):
    cdef int bp, bd
    cdef double bc
    _best_core(tau, dist, s_node, s_kind, s_e, s_l, s_a, s_t, s_pair,
               s_alpha, s_tdir, s_D, s_q, s_occ_after,
               v, sched_len[v], onboard_q[v], eff_node, eff_time,
               o, dnode, e, l, q, tdir, D, w_m, cap, p, d,
               &bc, &bp, &bd)
    return (bp == p and bd == d), bc
