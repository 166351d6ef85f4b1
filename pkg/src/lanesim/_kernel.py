"""Compiled simulation step.

State lives in flat arrays so the loop runs under numba:

* ``vf`` / ``vi``: per-vehicle float / int columns (see the column constants)
* ``lane_veh[li, :lane_cnt[li]]``: vehicle ids on lane ``li = edge * ML + lane``
  ordered front to back; a vehicle changing lanes is listed on both lanes
* ``cnt`` / ``fcnt``: run counters

Phase order of one step: signals, lane-change decisions (with courtesy
flags and arbitration), speed update, position update with edge
transitions and arrivals, lane-change progress, stuck removal, insertion,
measurement and invariant checks.
"""

import numpy as np
from numba import njit

from .dynamics import _desire, _gap_ok, _safe_speed, _secure_gap, _update_speed

# vehicle float columns
POS, SPD, LCREM, COOL, STUCK, DEP, INS, ARR, LCS, LCG, LCK, LCA = range(12)
NVF = 12
# vehicle int columns
STATE, EDGE, LANE, TGT, RIDX, RSTART, RLEN, YEL, COOP, CLS, STYLE, DENIED, COURT, LCREASON = range(14)
NVI = 14
PENDING, ACTIVE, ARRIVED, REMOVED = 0, 1, 2, 3
YIELD_DIST = 20.0  # m before the stop line where a blocked changer is yielded to

# parameters
(P_DT, P_TAU, P_ACC, P_DEC, P_MINGAP, P_SIGMA, P_LCDUR, P_COOLDOWN, P_TIMEOUT, P_GAINTHR,
 P_KEEPTHR, P_STRATT, P_STRATD, P_LOOK, P_COURT, P_VLEN, P_INSF, P_STUCKV) = range(18)
NP = 18

# integer counters
(C_INSERTED, C_ARRIVED, C_REMOVED, C_DENIED, C_ORDER, C_RED, C_CONS, C_LC, C_ACTIVE, C_STEPS,
 C_RAND, C_NREC, C_LO, C_HI, C_OVERFLOW, C_MSTEPS, C_RSTEPS, C_SWAP) = range(18)
NC = 18
# float counters
F_MINGAP = 0
NFC = 1

GREEN, YELLOW, RED = 0, 1, 2
REASON_STRATEGIC, REASON_COOPERATIVE = 1, 2

_INF = np.inf


@njit(cache=True)
def _lane_remove(lane_veh, lane_cnt, li, v):
    n = lane_cnt[li]
    j = 0
    while j < n and lane_veh[li, j] != v:
        j += 1
    if j == n:
        return
    for k in range(j, n - 1):
        lane_veh[li, k] = lane_veh[li, k + 1]
    lane_cnt[li] = n - 1


@njit(cache=True)
def _lane_insert(lane_veh, lane_cnt, li, v, vf, cnt):
    n = lane_cnt[li]
    if n >= lane_veh.shape[1]:
        cnt[C_OVERFLOW] += 1
        return
    pos = vf[v, POS]
    j = 0
    while j < n and vf[lane_veh[li, j], POS] >= pos:
        j += 1
    for k in range(n, j, -1):
        lane_veh[li, k] = lane_veh[li, k - 1]
    lane_veh[li, j] = v
    lane_cnt[li] = n + 1


@njit(cache=True)
def _next_edge(vi, route, i):
    r = vi[i, RIDX] + 1
    if r < vi[i, RLEN]:
        return route[vi[i, RSTART] + r]
    return -1


@njit(cache=True)
def _dead_end(vi, route, i, e, lane, dist, e_len, perm, entry, horizon):
    """Route distance until staying on ``lane`` stops leading onward.

    Follows the lane's continuation through the entry lanes of later edges;
    inf when the destination is reached or the horizon is passed first.
    """
    r = vi[i, RIDX]
    rs = vi[i, RSTART]
    rl = vi[i, RLEN]
    cur = e
    while True:
        if r + 1 >= rl:
            return _INF
        nxt = route[rs + r + 1]
        if perm[cur, lane, nxt] == 0:
            return dist
        if dist >= horizon:
            return _INF
        lane = entry[cur, lane, nxt]
        cur = nxt
        r += 1
        dist += e_len[cur]


@njit(cache=True)
def _constrain(vf, tmp_vs, tmp_cap, v, gap, leader_speed, p):
    # gap is net of min_gap (or to a stop line)
    if gap > 0.0:
        vs = _safe_speed(gap, leader_speed, vf[v, SPD], p[P_DEC], p[P_TAU])
        cap = gap / p[P_DT]
    else:
        vs = 0.0
        cap = 0.0
    if vs < tmp_vs[v]:
        tmp_vs[v] = vs
    if cap < tmp_cap[v]:
        tmp_cap[v] = cap


@njit(cache=True)
def _signal_states(t, sig_cycle, sig_win, sig_nwin, sig):
    for e in range(sig.shape[0]):
        c = sig_cycle[e]
        if c <= 0.0:
            sig[e] = GREEN
            continue
        tc = t % c
        st = RED
        for w in range(sig_nwin[e]):
            if sig_win[e, w, 0] <= tc < sig_win[e, w, 1]:
                st = GREEN
                break
            if sig_win[e, w, 1] <= tc < sig_win[e, w, 2]:
                st = YELLOW
        sig[e] = st


@njit(cache=True)
def _remove_from_lanes(vi, lane_veh, lane_cnt, ml, i):
    e = vi[i, EDGE]
    _lane_remove(lane_veh, lane_cnt, e * ml + vi[i, LANE], i)
    if vi[i, TGT] >= 0:
        _lane_remove(lane_veh, lane_cnt, e * ml + vi[i, TGT], i)


@njit(cache=True)
def step(k, vf, vi, route,
         e_len, e_vmax, e_nl, perm, entry, sig_cycle, sig_win, sig_nwin,
         in_ptr, in_list, origins, q_ptr, q_list, q_head,
         lane_veh, lane_cnt, p, cnt, fcnt, rand, rec_t, rec_i,
         m_cnt, m_spd, r_cnt, r_spd,
         tmp_vs, tmp_cap, tmp_new, sig, prop, appr_key, appr_d, appr_v, trans_v, trans_x, blk, blk_tgt):
    n_edges = e_len.shape[0]
    ml = perm.shape[1]
    n_lanes = n_edges * ml
    dt = p[P_DT]
    vlen = p[P_VLEN]
    min_gap = p[P_MINGAP]
    dec = p[P_DEC]
    tau = p[P_TAU]
    t = k * dt
    t_end = (k + 1) * dt
    lo = cnt[C_LO]
    hi = cnt[C_HI]

    # (1) signals
    _signal_states(t, sig_cycle, sig_win, sig_nwin, sig)

    # (2) lane-change decisions against the pre-step state
    dead = np.zeros(ml)
    ant = np.zeros(ml)
    lead = np.full(ml, -1, dtype=np.int64)
    foll = np.full(ml, -1, dtype=np.int64)
    for i in range(lo, hi):
        vi[i, COURT] = 0
    n_prop = 0
    n_blk = 0
    for i in range(lo, hi):
        blk[i] = -1
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE:
            continue
        coop_prev = vi[i, COOP]
        vi[i, COOP] = -1
        e = vi[i, EDGE]
        nl = e_nl[e]
        if nl < 2 or vi[i, TGT] >= 0 or t < vf[i, COOL] - 1e-9:
            continue
        pos = vf[i, POS]
        vmax = e_vmax[e]
        horizon = vf[i, LCS] * (vf[i, SPD] * p[P_STRATT] + p[P_STRATD])
        for l in range(nl):
            dead[l] = _dead_end(vi, route, i, e, l, e_len[e] - pos, e_len, perm, entry, horizon)
            li = e * ml + l
            ld = -1
            fl = -1
            for j in range(lane_cnt[li]):
                v = lane_veh[li, j]
                if v == i:
                    continue
                if vf[v, POS] >= pos:
                    ld = v
                else:
                    fl = v
                    break
            lead[l] = ld
            foll[l] = fl
            a = vmax
            if ld >= 0 and vf[ld, POS] - vlen - pos <= p[P_LOOK] and vf[ld, SPD] < a:
                a = vf[ld, SPD]
            ant[l] = a
        target, reason = _desire(vi[i, LANE], nl, vf[i, SPD], dead[:nl], ant[:nl],
                                 vf[i, LCS], vf[i, LCG], vf[i, LCK],
                                 p[P_GAINTHR], p[P_KEEPTHR], p[P_STRATT], p[P_STRATD])
        if target < 0:
            continue
        ld = lead[target]
        fl = foll[target]
        ok = _gap_ok(pos, vf[i, SPD],
                     ld >= 0, vf[ld, POS] if ld >= 0 else 0.0, vf[ld, SPD] if ld >= 0 else 0.0,
                     fl >= 0, vf[fl, POS] if fl >= 0 else 0.0, vf[fl, SPD] if fl >= 0 else 0.0,
                     vlen, dec, tau, min_gap, vf[i, LCA])
        if ok:
            blk[i] = -1
            if reason == REASON_STRATEGIC and fl >= 0 and fl == coop_prev:
                reason = REASON_COOPERATIVE
            prop[n_prop, 0] = i
            prop[n_prop, 1] = target
            prop[n_prop, 2] = reason
            prop[n_prop, 3] = ld
            prop[n_prop, 4] = fl
            n_prop += 1
        elif reason == REASON_STRATEGIC:
            # remember who blocks the leader-side check, else the follower
            lead_ok = _gap_ok(pos, vf[i, SPD],
                              ld >= 0, vf[ld, POS] if ld >= 0 else 0.0, vf[ld, SPD] if ld >= 0 else 0.0,
                              False, 0.0, 0.0, vlen, dec, tau, min_gap, vf[i, LCA])
            blk[i] = fl if lead_ok else ld
            blk_tgt[n_blk] = i
            n_blk += 1
            if fl >= 0:
                # a shared follower yields to the most downstream changer
                c = vi[fl, COURT] - 1
                if c < 0 or vf[c, POS] < pos:
                    vi[fl, COURT] = i + 1
                vi[i, COOP] = fl
    # one change per target gap: the most upstream vehicle wins
    for a in range(n_prop):
        i = prop[a, 0]
        win = True
        for b in range(n_prop):
            if b == a:
                continue
            j = prop[b, 0]
            if (vi[j, EDGE] == vi[i, EDGE] and prop[b, 1] == prop[a, 1]
                    and prop[b, 3] == prop[a, 3] and prop[b, 4] == prop[a, 4]):
                if vf[j, POS] < vf[i, POS] or (vf[j, POS] == vf[i, POS] and j < i):
                    win = False
                    break
        if not win:
            continue
        e = vi[i, EDGE]
        target = prop[a, 1]
        _lane_insert(lane_veh, lane_cnt, e * ml + target, i, vf, cnt)
        vi[i, TGT] = target
        vi[i, LCREASON] = prop[a, 2]
        vf[i, LCREM] = p[P_LCDUR]
        r = cnt[C_NREC]
        if r < rec_t.shape[0]:
            rec_t[r] = t
            rec_i[r, 0] = i
            rec_i[r, 1] = e
            rec_i[r, 2] = vi[i, LANE]
            rec_i[r, 3] = target
            rec_i[r, 4] = prop[a, 2]
            cnt[C_NREC] = r + 1
        else:
            cnt[C_OVERFLOW] += 1
        cnt[C_LC] += 1

    # two stopped vehicles blocking each other's strategic change trade places
    for a in range(n_blk):
        i = blk_tgt[a]
        j = blk[i]
        if j < 0 or j < i or blk[j] != i or vi[i, TGT] >= 0 or vi[j, TGT] >= 0:
            continue
        if vi[j, EDGE] != vi[i, EDGE] or vf[i, SPD] >= p[P_STUCKV] or vf[j, SPD] >= p[P_STUCKV]:
            continue
        e = vi[i, EDGE]
        li = vi[i, LANE]
        lj = vi[j, LANE]
        for x in range(lane_cnt[e * ml + li]):
            if lane_veh[e * ml + li, x] == i:
                lane_veh[e * ml + li, x] = j
        for x in range(lane_cnt[e * ml + lj]):
            if lane_veh[e * ml + lj, x] == j:
                lane_veh[e * ml + lj, x] = i
        pi, si = vf[i, POS], vf[i, SPD]
        vf[i, POS] = vf[j, POS]
        vf[i, SPD] = vf[j, SPD]
        vf[j, POS] = pi
        vf[j, SPD] = si
        vi[i, LANE] = lj
        vi[j, LANE] = li
        for v, fr, to in ((i, li, lj), (j, lj, li)):
            vf[v, COOL] = t + p[P_COOLDOWN]
            vf[v, STUCK] = 0.0
            r = cnt[C_NREC]
            if r < rec_t.shape[0]:
                rec_t[r] = t
                rec_i[r, 0] = v
                rec_i[r, 1] = e
                rec_i[r, 2] = fr
                rec_i[r, 3] = to
                rec_i[r, 4] = REASON_STRATEGIC
                cnt[C_NREC] = r + 1
            else:
                cnt[C_OVERFLOW] += 1
            cnt[C_LC] += 1
        cnt[C_SWAP] += 1

    # (4) speeds; leaders on every occupied lane, then junction approaches
    for i in range(lo, hi):
        tmp_vs[i] = _INF
        tmp_cap[i] = _INF
    for li in range(n_lanes):
        n = lane_cnt[li]
        for j in range(1, n):
            v = lane_veh[li, j]
            ld = lane_veh[li, j - 1]
            _constrain(vf, tmp_vs, tmp_cap, v, vf[ld, POS] - vlen - vf[v, POS] - min_gap, vf[ld, SPD], p)
    n_appr = 0
    for li in range(n_lanes):
        if lane_cnt[li] == 0:
            continue
        f = lane_veh[li, 0]
        e = li // ml
        exit_lane = vi[f, TGT] if vi[f, TGT] >= 0 else vi[f, LANE]
        if exit_lane != li - e * ml:
            continue
        nxt = _next_edge(vi, route, f)
        if nxt < 0:
            continue
        d = e_len[e] - vf[f, POS]
        stop = perm[e, exit_lane, nxt] == 0
        st = sig[e]
        if st == GREEN:
            vi[f, YEL] = 0
        elif st == YELLOW:
            if vi[f, YEL] == 0:
                v = vf[f, SPD]
                vi[f, YEL] = 1 if v * v / (2.0 * dec) > d else 2
            if vi[f, YEL] == 2:
                stop = True
        else:
            stop = True
        if stop:
            _constrain(vf, tmp_vs, tmp_cap, f, d, 0.0, p)
        else:
            appr_key[n_appr] = nxt * ml + entry[e, exit_lane, nxt]
            appr_d[n_appr] = d
            appr_v[n_appr] = f
            n_appr += 1
    if n_appr > 0:
        # zipper: approaches to one entry lane queue up by distance to the line
        order = np.argsort(appr_key[:n_appr] * 1e7 + appr_d[:n_appr], kind="mergesort")
        prev_key = -1
        prev_d = 0.0
        prev_v = -1
        for a in range(n_appr):
            o = order[a]
            key = appr_key[o]
            d = appr_d[o]
            f = appr_v[o]
            if key != prev_key:
                nt = lane_cnt[key]
                if nt > 0:
                    last = lane_veh[key, nt - 1]
                    _constrain(vf, tmp_vs, tmp_cap, f, d + vf[last, POS] - vlen - min_gap, vf[last, SPD], p)
            else:
                _constrain(vf, tmp_vs, tmp_cap, f, d - prev_d - vlen - min_gap, vf[prev_v, SPD], p)
            prev_key = key
            prev_d = d
            prev_v = f
    # a follower asked to yield stops behind a changer standing at the
    # stop line of a lane that does not lead on
    for i in range(lo, hi):
        j = vi[i, COURT] - 1
        if vi[i, STATE] != ACTIVE or j < 0 or vf[j, SPD] >= p[P_STUCKV]:
            continue
        ej = vi[j, EDGE]
        lj = ej * ml + vi[j, LANE]
        if lane_veh[lj, 0] != j or e_len[ej] - vf[j, POS] > YIELD_DIST:
            continue
        if vi[j, RIDX] + 1 >= vi[j, RLEN] or perm[ej, vi[j, LANE], route[vi[j, RSTART] + vi[j, RIDX] + 1]] != 0:
            continue
        room = vf[j, POS] - vlen - vf[i, POS]
        need = max(min_gap / vf[j, LCA], min_gap) + 0.5
        if room < need:
            continue  # too close to leave the gap: drive on and clear it instead
        _constrain(vf, tmp_vs, tmp_cap, i, room - need, vf[j, SPD], p)
    rp = cnt[C_RAND]
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE:
            continue
        vmax = e_vmax[vi[i, EDGE]]
        vs = tmp_vs[i]
        vn = _update_speed(vf[i, SPD], vs, vmax, p[P_ACC], p[P_SIGMA], dt, rand[rp])
        rp += 1
        if vi[i, COURT] != 0:
            c = p[P_COURT] * min(vs, vmax)
            if vn > c:
                vn = c
        if vn > tmp_cap[i]:
            vn = tmp_cap[i]
        tmp_new[i] = vn
    cnt[C_RAND] = rp

    # (5) positions, transitions, arrivals
    n_tr = 0
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE:
            continue
        vf[i, SPD] = tmp_new[i]
        vf[i, POS] += tmp_new[i] * dt
        e = vi[i, EDGE]
        if vf[i, POS] > e_len[e]:
            if vi[i, RIDX] + 1 >= vi[i, RLEN]:
                _remove_from_lanes(vi, lane_veh, lane_cnt, ml, i)
                vi[i, STATE] = ARRIVED
                vf[i, ARR] = t_end
                cnt[C_ARRIVED] += 1
            else:
                trans_v[n_tr] = i
                trans_x[n_tr] = vf[i, POS] - e_len[e]
                n_tr += 1
    if n_tr > 0:
        order = np.argsort(-trans_x[:n_tr], kind="mergesort")
        for a in range(n_tr):
            i = trans_v[order[a]]
            e = vi[i, EDGE]
            if sig[e] == RED:
                cnt[C_RED] += 1
            _remove_from_lanes(vi, lane_veh, lane_cnt, ml, i)
            if vi[i, TGT] >= 0:
                vi[i, LANE] = vi[i, TGT]
                vi[i, TGT] = -1
                vf[i, COOL] = t_end + p[P_COOLDOWN]
            nxt = _next_edge(vi, route, i)
            el = entry[e, vi[i, LANE], nxt]
            if el < 0:
                # cannot happen while stop lines hold; keep the vehicle at the line
                vf[i, POS] = e_len[e]
                vf[i, SPD] = 0.0
                _lane_insert(lane_veh, lane_cnt, e * ml + vi[i, LANE], i, vf, cnt)
                continue
            x = vf[i, POS] - e_len[e]
            if x > e_len[nxt]:
                x = e_len[nxt]
            vf[i, POS] = x
            vi[i, EDGE] = nxt
            vi[i, LANE] = el
            vi[i, RIDX] += 1
            vi[i, YEL] = 0
            if vf[i, SPD] > e_vmax[nxt]:
                vf[i, SPD] = e_vmax[nxt]
            li = nxt * ml + el
            nt = lane_cnt[li]
            if nt < lane_veh.shape[1]:
                lane_veh[li, nt] = i
                lane_cnt[li] = nt + 1
            else:
                cnt[C_OVERFLOW] += 1

    # (6) lane-change progress
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE or vi[i, TGT] < 0:
            continue
        vf[i, LCREM] -= dt
        if vf[i, LCREM] <= 1e-9:
            e = vi[i, EDGE]
            _lane_remove(lane_veh, lane_cnt, e * ml + vi[i, LANE], i)
            vi[i, LANE] = vi[i, TGT]
            vi[i, TGT] = -1
            vf[i, COOL] = t_end + p[P_COOLDOWN]

    # (7) stuck vehicles
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE:
            continue
        if vf[i, SPD] < p[P_STUCKV]:
            vf[i, STUCK] += dt
            if vf[i, STUCK] >= p[P_TIMEOUT] - 1e-9:
                _remove_from_lanes(vi, lane_veh, lane_cnt, ml, i)
                vi[i, STATE] = REMOVED
                vf[i, ARR] = t_end
                cnt[C_REMOVED] += 1
        else:
            vf[i, STUCK] = 0.0

    # (8) insertion, FIFO per origin edge
    for oi in range(origins.shape[0]):
        o = origins[oi]
        qh = q_head[oi]
        qe = q_ptr[oi + 1]
        while qh < qe:
            i = q_list[qh]
            if vi[i, STATE] != PENDING:
                qh += 1
                continue
            if vf[i, DEP] > t_end + 1e-9:
                break
            nl = e_nl[o]
            vmax = e_vmax[o]
            nxt = _next_edge(vi, route, i)
            best = -1
            for l in range(nl):
                if nxt >= 0 and perm[o, l, nxt] == 0:
                    continue
                if best < 0 or lane_cnt[o * ml + l] < lane_cnt[o * ml + best]:
                    best = l
            if best < 0:
                best = 0
            li = o * ml + best
            ok = True
            speed = vmax
            nt = lane_cnt[li]
            if nt > 0:
                last = lane_veh[li, nt - 1]
                gap = vf[last, POS] - vlen
                if gap < _secure_gap(p[P_INSF] * vmax, vf[last, SPD], dec, tau, min_gap):
                    ok = False
                else:
                    s = _safe_speed(gap - min_gap, vf[last, SPD], vmax, dec, tau)
                    if s < speed:
                        speed = s
            if ok:
                # keep clear of vehicles about to turn into this lane
                for ui in range(in_ptr[o], in_ptr[o + 1]):
                    u = in_list[ui]
                    for lu in range(e_nl[u]):
                        lu_i = u * ml + lu
                        if lane_cnt[lu_i] == 0:
                            continue
                        f = lane_veh[lu_i, 0]
                        if _next_edge(vi, route, f) != o:
                            continue
                        ex = vi[f, TGT] if vi[f, TGT] >= 0 else vi[f, LANE]
                        if entry[u, ex, o] != best:
                            continue
                        d = e_len[u] - vf[f, POS]
                        if d - vlen < _secure_gap(vf[f, SPD], 0.0, dec, tau, min_gap):
                            ok = False
            if not ok:
                if vi[i, DENIED] == 0:
                    vi[i, DENIED] = 1
                    cnt[C_DENIED] += 1
                break
            vi[i, STATE] = ACTIVE
            vi[i, EDGE] = o
            vi[i, LANE] = best
            vi[i, TGT] = -1
            vi[i, RIDX] = 0
            vi[i, YEL] = 0
            vi[i, COOP] = -1
            vf[i, POS] = 0.0
            vf[i, SPD] = speed
            vf[i, STUCK] = 0.0
            vf[i, COOL] = 0.0
            vf[i, INS] = t_end
            if nt < lane_veh.shape[1]:
                lane_veh[li, nt] = i
                lane_cnt[li] = nt + 1
            else:
                cnt[C_OVERFLOW] += 1
            cnt[C_INSERTED] += 1
            if i + 1 > hi:
                hi = i + 1
            if i < lo:
                lo = i
            qh += 1
        q_head[oi] = qh

    # (9) measures and invariants
    active = 0
    for i in range(lo, hi):
        if vi[i, STATE] != ACTIVE:
            continue
        e = vi[i, EDGE]
        m_cnt[e] += 1.0
        m_spd[e] += vf[i, SPD]
        r_cnt[e] += 1.0
        r_spd[e] += vf[i, SPD]
        active += 1
    cnt[C_ACTIVE] = active
    cnt[C_MSTEPS] += 1
    cnt[C_RSTEPS] += 1
    cnt[C_STEPS] += 1
    if cnt[C_INSERTED] != cnt[C_ARRIVED] + cnt[C_REMOVED] + active:
        cnt[C_CONS] += 1
    for li in range(n_lanes):
        for j in range(1, lane_cnt[li]):
            a = lane_veh[li, j - 1]
            b = lane_veh[li, j]
            g = vf[a, POS] - vlen - vf[b, POS]
            if g < -1e-6:
                cnt[C_ORDER] += 1
            if g < fcnt[F_MINGAP]:
                fcnt[F_MINGAP] = g
    while lo < hi and (vi[lo, STATE] == ARRIVED or vi[lo, STATE] == REMOVED):
        lo += 1
    cnt[C_LO] = lo
    cnt[C_HI] = hi


@njit(cache=True)
def simulate(k0, n_steps, vf, vi, route,
             e_len, e_vmax, e_nl, perm, entry, sig_cycle, sig_win, sig_nwin,
             in_ptr, in_list, origins, q_ptr, q_list, q_head,
             lane_veh, lane_cnt, p, cnt, fcnt, rand, rec_t, rec_i,
             m_cnt, m_spd, r_cnt, r_spd,
             tmp_vs, tmp_cap, tmp_new, sig, prop, appr_key, appr_d, appr_v, trans_v, trans_x, blk, blk_tgt):
    for k in range(k0, k0 + n_steps):
        step(k, vf, vi, route,
             e_len, e_vmax, e_nl, perm, entry, sig_cycle, sig_win, sig_nwin,
             in_ptr, in_list, origins, q_ptr, q_list, q_head,
             lane_veh, lane_cnt, p, cnt, fcnt, rand, rec_t, rec_i,
             m_cnt, m_spd, r_cnt, r_spd,
             tmp_vs, tmp_cap, tmp_new, sig, prop, appr_key, appr_d, appr_v, trans_v, trans_x, blk, blk_tgt)
