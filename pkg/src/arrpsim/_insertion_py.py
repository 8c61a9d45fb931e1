"""Pure-Python insertion kernel; reference twin of the compiled extension.

Evaluates candidate pickup/dropoff insertion positions for one request against
one vehicle schedule. Position pairs (p, d) mean: pickup before current stop p,
dropoff before current stop d (immediately after the pickup when d == p).

Every accept/reject decision comes from explicitly computed serving times --
the same chain the commit path recomputes -- so the screen agrees with a
from-scratch re-verification. The suffix screening bound is only used to skip
positions that are infeasible by a margin no rounding noise can bridge.
"""

from __future__ import annotations

import math

COMPILED = False

_INF = math.inf
_MARGIN = 1e-6   # screening margin: reject only when past the bound by more than this
_P_DUST = 1e-9   # vehicle-level reach prune slack

PICKUP = 0
DROPOFF = 1


def _wait_aware_theta(L, s_kind, s_e, s_l, s_a, s_t, v, theta):
    """Suffix bound on tolerable arrival delay before some serving window breaks.

    Early-arrival wait at a committed pickup absorbs upstream delay before it
    reaches the serving time, so each stop contributes its wait plus the
    window slack of everything downstream.
    """
    theta[L] = _INF
    for j in range(L - 1, -1, -1):
        wait = float(s_t[v, j]) - float(s_a[v, j])
        slack = float(s_l[v, j]) - float(s_t[v, j])
        rest = theta[j + 1]
        theta[j] = wait + (slack if slack < rest else rest)


def _best_for_vehicle(tau, dist,
                      s_node, s_kind, s_e, s_l, s_a, s_t, s_pair, s_alpha,
                      s_tdir, s_D, s_q, s_occ_after,
                      v, L, occ0, eff_node, eff_time,
                      o, dnode, e, l, q, tdir, D, w_m, cap,
                      p_fix=-1, d_fix=-1):
    """Best feasible insertion (cost, p, d) for one vehicle; cost=inf if none."""
    best_cost = _INF
    best_p = -1
    best_d = -1
    if q > cap:
        return best_cost, best_p, best_d
    if eff_time + float(tau[eff_node, o]) > l + _P_DUST:
        return best_cost, best_p, best_d
    if p_fix >= 0 and not 0 <= p_fix <= L:
        return best_cost, best_p, best_d
    if d_fix >= 0 and not max(p_fix, 0) <= d_fix <= L:
        return best_cost, best_p, best_d

    theta = [0.0] * (L + 1)
    _wait_aware_theta(L, s_kind, s_e, s_l, s_a, s_t, v, theta)
    new_t = [0.0] * L   # serving times of committed stops under the virtual insertion

    p_start = L if p_fix < 0 else p_fix
    p_end = -1 if p_fix < 0 else p_fix - 1
    for p in range(p_start, p_end, -1):
        if p == 0:
            prev_node = eff_node
            prev_t = eff_time
        else:
            prev_node = int(s_node[v, p - 1])
            prev_t = float(s_t[v, p - 1])
        a_o = prev_t + float(tau[prev_node, o])
        if e - a_o > w_m:
            # arrival at the new pickup only gets earlier at smaller p,
            # so the vehicle-wait bound fails for every remaining position
            if p_fix < 0:
                break
            continue
        if a_o > l:
            continue
        s_o = a_o if a_o > e else e
        occ_before = occ0 if p == 0 else int(s_occ_after[v, p - 1])
        if occ_before + q > cap:
            continue
        if p < L:
            delta_p = (s_o + float(tau[o, int(s_node[v, p])])) - float(s_a[v, p])
            if delta_p > theta[p] + _MARGIN:
                continue

        # extend the pickup-only chain lazily while the dropoff slides right
        chain_node = o
        chain_t = s_o
        chain_broken = False
        d_start = p if d_fix < 0 else d_fix
        d_end = (L if d_fix < 0 else d_fix) + 1
        for d in range(d_start, d_end):
            for j in range(p if d == d_start else d - 1, d):
                # bring committed stops (p..d-1) into the chain, one per step
                nd = int(s_node[v, j])
                a_j = chain_t + float(tau[chain_node, nd])
                if s_kind[v, j] == PICKUP:
                    if a_j > float(s_l[v, j]):
                        chain_broken = True
                        break
                    # vehicle wait can only shrink when arrivals move later
                    ej = float(s_e[v, j])
                    t_j = a_j if a_j > ej else ej
                else:
                    t_j = a_j
                    if t_j > float(s_l[v, j]):
                        chain_broken = True
                        break
                    pr = int(s_pair[v, j])
                    alpha = new_t[pr] if pr >= p else float(s_alpha[v, j])
                    if (t_j - alpha) - float(s_tdir[v, j]) > float(s_D[v, j]):
                        chain_broken = True
                        break
                if int(s_occ_after[v, j]) + q > cap:
                    chain_broken = True
                    break
                new_t[j] = t_j
                chain_node = nd
                chain_t = t_j
            if chain_broken:
                break

            a_do = chain_t + float(tau[chain_node, dnode])
            if (a_do - s_o) - tdir > D:
                break   # dropoff arrival is nondecreasing in d
            ok = True
            if d < L:
                nd0 = int(s_node[v, d])
                delta_d = (a_do + float(tau[dnode, nd0])) - float(s_a[v, d])
                if delta_d > theta[d] + _MARGIN:
                    continue
                tail_node = dnode
                tail_t = a_do
                for j in range(d, L):
                    nd = int(s_node[v, j])
                    a_j = tail_t + float(tau[tail_node, nd])
                    if s_kind[v, j] == PICKUP:
                        if a_j > float(s_l[v, j]):
                            ok = False
                            break
                        ej = float(s_e[v, j])
                        t_j = a_j if a_j > ej else ej
                    else:
                        t_j = a_j
                        if t_j > float(s_l[v, j]):
                            ok = False
                            break
                        pr = int(s_pair[v, j])
                        alpha = new_t[pr] if pr >= p else float(s_alpha[v, j])
                        if (t_j - alpha) - float(s_tdir[v, j]) > float(s_D[v, j]):
                            ok = False
                            break
                    new_t[j] = t_j
                    tail_node = nd
                    tail_t = t_j
            if not ok:
                continue

            # added route length (legs elsewhere are untouched)
            if p == 0:
                bn = eff_node
            else:
                bn = int(s_node[v, p - 1])
            if d == p:
                cost = float(dist[bn, o]) + float(dist[o, dnode])
                if p < L:
                    nxt = int(s_node[v, p])
                    cost += float(dist[dnode, nxt]) - float(dist[bn, nxt])
            else:
                nxt = int(s_node[v, p])
                cost = float(dist[bn, o]) + float(dist[o, nxt]) - float(dist[bn, nxt])
                dn_prev = int(s_node[v, d - 1])
                cost += float(dist[dn_prev, dnode])
                if d < L:
                    nxt2 = int(s_node[v, d])
                    cost += float(dist[dnode, nxt2]) - float(dist[dn_prev, nxt2])
            if cost < best_cost or (cost == best_cost
                                    and (p, d) < (best_p, best_d)):
                best_cost = cost
                best_p = p
                best_d = d
    return best_cost, best_p, best_d


def best_insertions(tau, dist,
                    s_node, s_kind, s_e, s_l, s_a, s_t, s_pair, s_alpha,
                    s_tdir, s_D, s_q, s_occ_after, sched_len, onboard_q,
                    cand, eff_node, eff_time,
                    o, dnode, e, l, q, tdir, D, w_m, cap,
                    out_cost, out_p, out_d):
    """Best feasible plan per candidate vehicle; out_cost[i]=inf when none."""
    for i in range(len(cand)):
        v = int(cand[i])
        c, p, d = _best_for_vehicle(
            tau, dist, s_node, s_kind, s_e, s_l, s_a, s_t, s_pair, s_alpha,
            s_tdir, s_D, s_q, s_occ_after,
            v, int(sched_len[v]), int(onboard_q[v]),
            int(eff_node[i]), float(eff_time[i]),
            o, dnode, e, l, q, tdir, D, w_m, cap)
        out_cost[i] = c
        out_p[i] = p
        out_d[i] = d


def evaluate_insertion(tau, dist,
                       s_node, s_kind, s_e, s_l, s_a, s_t, s_pair, s_alpha,
                       s_tdir, s_D, s_q, s_occ_after, sched_len, onboard_q,
                       v, eff_node, eff_time,
                       o, dnode, e, l, q, tdir, D, w_m, cap, p, d):
    """Verdict and cost for one specific insertion position pair."""
    c, bp, bd = _best_for_vehicle(
        tau, dist, s_node, s_kind, s_e, s_l, s_a, s_t, s_pair, s_alpha,
        s_tdir, s_D, s_q, s_occ_after,
        v, int(sched_len[v]), int(onboard_q[v]), int(eff_node), float(eff_time),
        o, dnode, e, l, q, tdir, D, w_m, cap, p_fix=p, d_fix=d)
    return (bp == p and bd == d), c
