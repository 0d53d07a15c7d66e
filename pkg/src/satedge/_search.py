"""Compiled depth-first search core for the exact solver.

Mirrors the reference search in :mod:`satedge.solver` over flattened
arrays: per-terminal candidate placements (cost-sorted), CPU/cache
footprints, price/scan/slot bounds, node-state candidate filters, and
the lexicographic tie-break on served (terminal, NF, satellite) triples
encoded as int64 codes. Bitwise-identical objective arithmetic with the
reference: leaf objectives accumulate candidate costs in terminal
order.

The kernel is deterministic and bounded by a node budget; wall-clock
limits stay in the reference implementation.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _feasible(
    g,
    cpu_sat,
    cpu_dem,
    cache_k,
    cache_s,
    used_cpu,
    used_sto,
    cache_ref,
    cpu_cap,
    cpu_tol,
    sto_cap,
    sto_tol,
    nf_size,
    S,
):
    width = cpu_sat.shape[1]
    for t in range(width):
        s = cpu_sat[g, t]
        if s < 0:
            break
        if used_cpu[s] + cpu_dem[g, t] > cpu_cap[s] + cpu_tol[s]:
            return False
    for t1 in range(width):
        s = cache_s[g, t1]
        if s < 0:
            break
        seen = False
        for t0 in range(t1):
            if cache_s[g, t0] == s:
                seen = True
                break
        if seen:
            continue
        extra = 0.0
        for t2 in range(t1, width):
            s2 = cache_s[g, t2]
            if s2 < 0:
                break
            if s2 == s and cache_ref[cache_k[g, t2] * S + s2] == 0:
                extra += nf_size[cache_k[g, t2]]
        if extra > 0.0 and used_sto[s] + extra > sto_cap[s] + sto_tol[s]:
            return False
    return True


@njit(cache=True)
def _search(
    U,
    S,
    K,
    off,
    count,
    cost,
    lam,
    nslots,
    cpu_sat,
    cpu_dem,
    cache_k,
    cache_s,
    keycode,
    cpu_cap,
    cpu_tol,
    sto_cap,
    sto_tol,
    nf_size,
    suffix_min,
    suffix_rmin,
    suffix_dc,
    lag_cap_total,
    slot_mode,
    f_unit,
    unit_slope,
    unit_owner,
    best_obj_in,
    best_key_in,
    best_key_len_in,
    max_nodes,
    prune_eps,
    tie_eps,
    out_choice,
    out_key,
):
    used_cpu = np.zeros(S, dtype=np.float64)
    used_sto = np.zeros(S, dtype=np.float64)
    cache_ref = np.zeros(K * S, dtype=np.int32)
    ptr = np.zeros(U, dtype=np.int64)
    chosen = np.full(U, -1, dtype=np.int64)
    applied = np.full(U, -1, dtype=np.int64)
    ci = np.zeros(U, dtype=np.int64)
    partial = np.zeros(U + 1, dtype=np.float64)
    scan_base = np.zeros(U, dtype=np.float64)
    pstack = np.zeros((U, U), dtype=np.int64)
    lag_used_stack = np.zeros(U + 1, dtype=np.float64)

    best_obj = best_obj_in
    best_key = best_key_in.copy()
    best_key_len = best_key_len_in
    improved = False
    nodes = 0
    hit_limit = False
    width = cpu_sat.shape[1]

    # remaining-bound scan over terminals dd..U-1 under the current state
    def _remaining(dd_start):
        total = 0.0
        for dd in range(dd_start, U):
            i = ptr[dd]
            n = count[dd]
            base = off[dd]
            while i < n and not _feasible(
                base + i,
                cpu_sat,
                cpu_dem,
                cache_k,
                cache_s,
                used_cpu,
                used_sto,
                cache_ref,
                cpu_cap,
                cpu_tol,
                sto_cap,
                sto_tol,
                nf_size,
                S,
            ):
                i += 1
            ptr[dd] = i
            if i >= n:
                return np.inf
            total += cost[base + i]
        return total

    def _apply(g):
        for t in range(width):
            s = cpu_sat[g, t]
            if s < 0:
                break
            used_cpu[s] += cpu_dem[g, t]
        for t in range(width):
            s = cache_s[g, t]
            if s < 0:
                break
            idx = cache_k[g, t] * S + s
            if cache_ref[idx] == 0:
                used_sto[s] += nf_size[cache_k[g, t]]
            cache_ref[idx] += 1

    def _undo(g):
        for t in range(width):
            s = cpu_sat[g, t]
            if s < 0:
                break
            used_cpu[s] -= cpu_dem[g, t]
        for t in range(width):
            s = cache_s[g, t]
            if s < 0:
                break
            idx = cache_k[g, t] * S + s
            cache_ref[idx] -= 1
            if cache_ref[idx] == 0:
                used_sto[s] -= nf_size[cache_k[g, t]]

    def _slot_bound(dd_start, lag_used):
        budget = 0
        for s in range(S):
            rem = cpu_cap[s] + cpu_tol[s] - used_cpu[s]
            if rem > 0.0:
                budget += int(rem / f_unit + 1e-12)
        savings = 0.0
        if budget > 0:
            for t in range(unit_slope.shape[0]):
                if chosen[unit_owner[t]] < 0:
                    savings += unit_slope[t]
                    budget -= 1
                    if budget == 0:
                        break
        return suffix_dc[dd_start] - savings

    def _tie_can_win():
        pos = 0
        for u in range(U):
            g = chosen[u]
            if g < 0:
                break
            for t in range(nslots[g]):
                code = keycode[g, t]
                if pos >= best_key_len:
                    return False
                b = best_key[pos]
                if code < b:
                    return True
                if code > b:
                    return False
                pos += 1
        return pos < best_key_len

    d = 0
    if U == 0:
        return best_obj, improved, nodes, hit_limit, best_key_len
    scan_base[0] = _remaining(1)
    for uu in range(U):
        pstack[0, uu] = ptr[uu]
    lag_used_stack[0] = 0.0

    while d >= 0:
        if d == U:
            # leaf: evaluate the complete assignment
            obj = 0.0
            for u in range(U):
                obj += cost[chosen[u]]
            if obj < best_obj - 1e-12:
                take = True
            elif obj <= best_obj + 1e-12:
                # lexicographic comparison against the incumbent key
                take = False
                pos = 0
                decided = False
                for u in range(U):
                    g = chosen[u]
                    for t in range(nslots[g]):
                        code = keycode[g, t]
                        if pos >= best_key_len:
                            decided = True
                            take = False
                            break
                        b = best_key[pos]
                        if code != b:
                            decided = True
                            take = code < b
                            break
                        pos += 1
                    if decided:
                        break
                if not decided:
                    take = pos < best_key_len
            else:
                take = False
            if take:
                best_obj = obj
                improved = True
                pos = 0
                for u in range(U):
                    g = chosen[u]
                    out_choice[u] = g
                    for t in range(nslots[g]):
                        out_key[pos] = keycode[g, t]
                        pos += 1
                best_key_len = pos
                for t in range(pos):
                    best_key[t] = out_key[t]
            d -= 1
            continue

        if applied[d] >= 0:
            _undo(applied[d])
            applied[d] = -1
            chosen[d] = -1
            for uu in range(U):
                ptr[uu] = pstack[d, uu]

        descended = False
        base = off[d]
        n = count[d]
        lag_used = lag_used_stack[d]
        while ci[d] < n:
            g = base + ci[d]
            ci[d] += 1
            lb0 = partial[d] + cost[g]
            if lb0 + suffix_min[d + 1] > best_obj + prune_eps:
                ci[d] = n
                break
            if lb0 + suffix_rmin[d + 1] - (lag_cap_total - lag_used) + lam[g] > best_obj + prune_eps:
                continue
            if lb0 + scan_base[d] > best_obj + prune_eps:
                continue
            if not _feasible(
                g,
                cpu_sat,
                cpu_dem,
                cache_k,
                cache_s,
                used_cpu,
                used_sto,
                cache_ref,
                cpu_cap,
                cpu_tol,
                sto_cap,
                sto_tol,
                nf_size,
                S,
            ):
                continue
            nodes += 1
            if nodes > max_nodes:
                hit_limit = True
                break
            _apply(g)
            chosen[d] = g
            lb = lb0 + _remaining(d + 1)
            price = lb0 + suffix_rmin[d + 1] - (lag_cap_total - lag_used) + lam[g]
            if price > lb:
                lb = price
            if slot_mode and lb <= best_obj + prune_eps:
                sb = lb0 + _slot_bound(d + 1, lag_used + lam[g])
                if sb > lb:
                    lb = sb
            ok = lb <= best_obj + prune_eps
            if ok and lb >= best_obj - tie_eps:
                ok = _tie_can_win()
            if ok:
                applied[d] = g
                d += 1
                if d < U:
                    scan_base[d] = _remaining(d + 1)
                    for uu in range(U):
                        pstack[d, uu] = ptr[uu]
                    ci[d] = 0
                    applied[d] = -1
                    partial[d] = lb0
                    lag_used_stack[d] = lag_used + lam[g]
                descended = True
                break
            _undo(g)
            chosen[d] = -1
            for uu in range(U):
                ptr[uu] = pstack[d, uu]
        if hit_limit:
            break
        if descended:
            continue
        chosen[d] = -1
        ci[d] = 0
        d -= 1

    return best_obj, improved, nodes, hit_limit, best_key_len
