"""Exact solving: depth-first branch-and-bound plus a brute-force oracle.

The objective is separable per terminal (each terminal's cost depends
only on its own chain placement); terminals are coupled solely through
satellite CPU and cache capacity. The solver therefore branches on whole
per-terminal placements - the chain's host tuple, restricted to the
satellite-prefix rule - instead of individual binary variables, and
propagates the derived product/xor/indicator variables implicitly. The
caching matrix is induced as the union of (NF, satellite) pairs the
placements use, checked against storage capacity.

Bounding: a node's lower bound is the cost of the placed terminals plus,
for every unplaced terminal, the cost of its cheapest placement that is
individually feasible against the node's *remaining* capacity. This is
admissible: remaining CPU only shrinks and the cached-NF union only
grows along a path, so any placement used by a completion is
individually feasible earlier too.

Per-terminal candidates whose cost is not below the all-data-center
placement are discarded: the data-center placement consumes nothing and
wins cost and tie-breaking, so a swap argument preserves at least one
optimum. Ties between equal-cost optima go to the lexicographically
smallest set of served (terminal, NF, satellite) triples, which makes
results reproducible and lets the solver and the oracle agree exactly.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _search as _search_mod
from . import heuristics
from .costs import CAPACITY_RTOL, ScenarioEvaluator, dco_normalizers, hosts_for
from .ilp import IlpModel
from .model import Decision, Scenario

_VECTOR_FILTER_MARGIN = 1e-6


class OracleSizeError(ValueError):
    """The instance exceeds the brute-force enumeration cap."""


@dataclass(frozen=True)
class SolveLimits:
    max_nodes: int = 2_000_000
    time_limit_s: Optional[float] = None


@dataclass
class SolveResult:
    status: str  # optimal | node-limit | infeasible
    decision: Decision
    objective: float
    node_count: int
    wall_time_s: float
    root_bound: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "node_count": self.node_count,
            "wall_time_s": self.wall_time_s,
            "root_bound": self.root_bound,
            "decision": {
                "cached": [[int(k), int(s)] for k, s in np.argwhere(self.decision.cached)],
                "served": [[int(u), int(k), int(s)] for u, k, s in np.argwhere(self.decision.served)],
            },
        }


class Placement:
    """One terminal's chain placement with its cost and resource footprint."""

    __slots__ = ("hosts", "cost", "cpu_items", "cache_items", "cache_by_sat", "key", "lam")

    def __init__(self, ev: ScenarioEvaluator, u: int, hosts: tuple, cost: float):
        self.hosts = hosts
        self.cost = cost
        chain = ev.chain[u]
        cpu: Dict[int, float] = {}
        pairs = []
        for i, s in enumerate(hosts):
            if s is not None:
                k = chain[i]
                cpu[s] = cpu.get(s, 0.0) + ev.f[k][s]
                pairs.append((k, s))
        self.cpu_items = tuple(cpu.items())
        self.cache_items = tuple(sorted(pairs))
        by_sat: Dict[int, list] = {}
        nf_size = ev.scenario.catalog.nf_size_bits
        for k, s in self.cache_items:
            by_sat.setdefault(s, []).append((k, float(nf_size[k])))
        self.cache_by_sat = tuple((s, tuple(items)) for s, items in by_sat.items())
        self.key = self.cache_items  # lexicographic tie-break fragment
        self.lam = 0.0  # CPU price of this placement under the root multipliers


def _host_tuples(n_sats: int, length: int):
    """All prefix placements: m satellite hosts then data center, m = 0..length."""
    for m in range(length + 1):
        for combo in itertools.product(range(n_sats), repeat=m):
            yield combo + (None,) * (length - m)


def _vector_costs(ev: ScenarioEvaluator, u: int, t_norm_u: float, e_norm_u: float) -> List[Tuple[tuple, float]]:
    """(hosts, approximate cost) for every prefix placement, vectorized.

    Used only to pre-filter clearly dominated placements; survivors are
    re-costed through the scalar evaluator, which stays the single
    source of truth.
    """
    chain = ev.chain[u]
    sizes = np.array(ev.sizes[u])
    cycles = np.array(ev.comp_cycles[u])
    n = len(chain)
    a = ev.assoc[u]
    hops = np.asarray(ev.scenario.topology.hops, dtype=np.float64)
    f = np.asarray(ev.scenario.catalog.nf_allocation, dtype=np.float64)
    S = ev.scenario.n_satellites
    up_tx = sizes[0] / ev.r_u
    base_t = up_tx + ev.two_du_c
    base_e = ev.p_u * up_tx
    out: List[Tuple[tuple, float]] = []
    for m in range(n + 1):
        combos = list(itertools.product(range(S), repeat=m))
        H = np.array(combos, dtype=np.int64).reshape(len(combos), m)
        T = np.full(len(combos), base_t)
        E = np.full(len(combos), base_e)
        if m > 0:
            isl_tx = sizes[0] / ev.r_s * hops[a, H[:, 0]]
            isl_hops = hops[a, H[:, 0]].copy()
            for i in range(m - 1):
                h = hops[H[:, i], H[:, i + 1]]
                isl_tx += sizes[i + 1] / ev.r_s * h
                isl_hops += h
            if m == n:
                isl_hops += hops[a, H[:, -1]]
            T += isl_tx + isl_hops * ev.ds_c
            E += ev.p_s * isl_tx
            fk = np.stack([f[chain[i], H[:, i]] for i in range(m)], axis=1)
            T += (cycles[:m][None, :] / fk).sum(axis=1)
            E += ev.kappa * (cycles[:m][None, :] * fk * fk).sum(axis=1)
        if m < n:
            g_tx = sizes[0] / ev.r_g if m == 0 else sizes[m] / ev.r_g
            T += g_tx + cycles[m:].sum() / ev.f_g + ev.two_dg_c
            E += ev.p_g * g_tx
        cost = ev.alpha * (T / t_norm_u) + ev.one_minus_alpha * (E / e_norm_u)
        out.extend((combos[i] + (None,) * (n - m), float(cost[i])) for i in range(len(combos)))
    return out


def enumerate_placements(
    ev: ScenarioEvaluator,
    u: int,
    t_norm_u: float,
    e_norm_u: float,
    prune_dominated: bool = True,
) -> List[Placement]:
    """Sorted candidate placements for a terminal (cheapest first).

    With pruning on, a placement is dropped when one of its own prefix
    shortenings is strictly cheaper: the shortening uses a strict subset
    of CPU and cache (chain NFs are distinct, so subset relations
    between placements are exactly prefix relations), so any solution
    using the longer placement improves by swapping. The all-data-center
    placement is the empty prefix and always survives.
    """
    dc_hosts = ev.dc_hosts(u)
    dc_cost = ev.weighted_cost(u, dc_hosts, t_norm_u, e_norm_u)
    n = len(ev.chain[u])
    if prune_dominated:
        rough = _vector_costs(ev, u, t_norm_u, e_norm_u)
        candidates = [hosts for hosts, c in rough if c < dc_cost + _VECTOR_FILTER_MARGIN and any(h is not None for h in hosts)]
    else:
        candidates = [hosts for hosts in _host_tuples(ev.scenario.n_satellites, n) if any(h is not None for h in hosts)]
    cost_of = {dc_hosts: dc_cost}
    for hosts in candidates:
        cost_of[hosts] = ev.weighted_cost(u, hosts, t_norm_u, e_norm_u)
    result = [Placement(ev, u, dc_hosts, dc_cost)]
    for hosts in candidates:
        cost = cost_of[hosts]
        if prune_dominated:
            if cost > dc_cost:
                continue
            m = sum(1 for h in hosts if h is not None)
            dominated = False
            for j in range(1, m):
                shorter = cost_of.get(hosts[:j] + (None,) * (n - j))
                if shorter is not None and shorter < cost:
                    dominated = True
                    break
            if dominated:
                continue
        result.append(Placement(ev, u, hosts, cost))
    result.sort(key=lambda p: (p.cost, p.key))
    return result


def _decision_from_hosts(scenario: Scenario, hosts_by_terminal: Sequence[tuple]) -> Decision:
    K = scenario.catalog.n_nf_types
    S = scenario.n_satellites
    U = scenario.n_terminals
    cached = np.zeros((K, S), dtype=np.int8)
    served = np.zeros((U, K, S), dtype=np.int8)
    for u, hosts in enumerate(hosts_by_terminal):
        chain = scenario.chain_of(u).nfs
        for i, s in enumerate(hosts):
            if s is not None:
                served[u, chain[i], s] = 1
                cached[chain[i], s] = 1
    return Decision(cached=cached, served=served)


def _full_key(hosts_by_terminal: Sequence[tuple], fragments: Sequence[tuple]) -> tuple:
    out = []
    for u, frag in enumerate(fragments):
        out.extend((u, k, s) for k, s in frag)
    return tuple(out)


def _fragment(chain: tuple, hosts: tuple) -> tuple:
    return tuple(sorted((chain[i], s) for i, s in enumerate(hosts) if s is not None))


def _solve(
    scenario: Scenario,
    ev: ScenarioEvaluator,
    t_norm: np.ndarray,
    e_norm: np.ndarray,
    limits: SolveLimits,
) -> SolveResult:
    start = time.perf_counter()
    U = scenario.n_terminals
    S = scenario.n_satellites
    cpu_cap = [float(x) for x in scenario.catalog.cpu_capacity]
    sto_cap = [float(x) for x in scenario.catalog.storage_capacity]
    nf_size = [float(x) for x in scenario.catalog.nf_size_bits]
    cpu_tol = [c * CAPACITY_RTOL for c in cpu_cap]
    sto_tol = [c * CAPACITY_RTOL for c in sto_cap]
    if any(c < 0 for c in cpu_cap) or any(c < 0 for c in sto_cap):
        return SolveResult(
            status="infeasible",
            decision=_decision_from_hosts(scenario, [ev.dc_hosts(u) for u in range(U)]),
            objective=float("nan"),
            node_count=0,
            wall_time_s=time.perf_counter() - start,
        )

    placements = [enumerate_placements(ev, u, float(t_norm[u]), float(e_norm[u])) for u in range(U)]
    chains = [ev.chain[u] for u in range(U)]
    placement_by_hosts = [{p.hosts: p for p in placements[u]} for u in range(U)]

    def score_hosts(hosts_list: List[tuple]) -> float:
        return sum(
            ev.weighted_cost(u, hosts_list[u], float(t_norm[u]), float(e_norm[u])) for u in range(U)
        )

    def one_opt(hosts_list: List[tuple]) -> List[tuple]:
        """Replace each terminal's placement by its best feasible alternative
        given the others; repeat until stable. Incumbent quality drives the
        pruning power of the search, the result stays a mere bound."""
        current = [placement_by_hosts[u].get(hosts_list[u]) or Placement(
            ev, u, hosts_list[u], ev.weighted_cost(u, hosts_list[u], float(t_norm[u]), float(e_norm[u]))
        ) for u in range(U)]
        for _ in range(4):
            improved = False
            for u in range(U):
                cpu: Dict[int, float] = {}
                ref: Dict[tuple, int] = {}
                sto: Dict[int, float] = {}
                for v in range(U):
                    if v == u:
                        continue
                    for s, dem in current[v].cpu_items:
                        cpu[s] = cpu.get(s, 0.0) + dem
                    for pair in current[v].cache_items:
                        if not ref.get(pair):
                            sto[pair[1]] = sto.get(pair[1], 0.0) + nf_size[pair[0]]
                        ref[pair] = ref.get(pair, 0) + 1
                for cand in placements[u]:
                    if cand.cost >= current[u].cost - 1e-15:
                        break
                    ok = all(cpu.get(s, 0.0) + dem <= cpu_cap[s] + cpu_tol[s] for s, dem in cand.cpu_items)
                    if ok:
                        add: Dict[int, float] = {}
                        for k, s in cand.cache_items:
                            if not ref.get((k, s)):
                                add[s] = add.get(s, 0.0) + nf_size[k]
                        ok = all(sto.get(s, 0.0) + extra <= sto_cap[s] + sto_tol[s] for s, extra in add.items())
                    if ok:
                        current[u] = cand
                        improved = True
                        break
            if not improved:
                break
        return [p.hosts for p in current]

    def sequential_greedy() -> List[tuple]:
        """Terminals take their cheapest placement feasible so far."""
        cpu: Dict[int, float] = {}
        ref: Dict[tuple, int] = {}
        sto: Dict[int, float] = {}
        picked = []
        for u in range(U):
            for cand in placements[u]:
                ok = all(cpu.get(s, 0.0) + dem <= cpu_cap[s] + cpu_tol[s] for s, dem in cand.cpu_items)
                if ok:
                    add: Dict[int, float] = {}
                    for k, s in cand.cache_items:
                        if not ref.get((k, s)):
                            add[s] = add.get(s, 0.0) + nf_size[k]
                    ok = all(sto.get(s, 0.0) + extra <= sto_cap[s] + sto_tol[s] for s, extra in add.items())
                if ok:
                    picked.append(cand.hosts)
                    for s, dem in cand.cpu_items:
                        cpu[s] = cpu.get(s, 0.0) + dem
                    for pair in cand.cache_items:
                        if not ref.get(pair):
                            sto[pair[1]] = sto.get(pair[1], 0.0) + nf_size[pair[0]]
                        ref[pair] = ref.get(pair, 0) + 1
                    break
            else:
                picked.append(ev.dc_hosts(u))
        return picked

    # seed the incumbent with the greedy family (locally improved) so the
    # exact answer never loses to them and pruning starts tight
    best_hosts = [ev.dc_hosts(u) for u in range(U)]
    best_obj = score_hosts(best_hosts)
    best_key = _full_key(best_hosts, [_fragment(chains[u], best_hosts[u]) for u in range(U)])

    def offer(hosts_list: List[tuple]) -> None:
        nonlocal best_obj, best_hosts, best_key
        obj = score_hosts(hosts_list)
        key = _full_key(hosts_list, [_fragment(chains[u], hosts_list[u]) for u in range(U)])
        if obj < best_obj - 1e-12 or (obj <= best_obj + 1e-12 and key < best_key):
            best_obj, best_hosts, best_key = obj, hosts_list, key

    seeds = [list(best_hosts)]
    for heuristic in (heuristics.gco, heuristics.nfco):
        decision = heuristic(scenario)
        seeds.append([hosts_for(scenario, decision, u) for u in range(U)])
    if U:
        seeds.append(sequential_greedy())
    for seed_hosts in seeds:
        offer(seed_hosts)
        improved = one_opt(seed_hosts)
        offer(improved)
    # deterministic perturbation: evict one terminal at a time and re-improve
    if U:
        base_hosts = list(best_hosts)
        for u in range(U):
            trial = list(base_hosts)
            trial[u] = ev.dc_hosts(u)
            offer(one_opt(trial))

    # candidates whose cost exceeds the incumbent minus the other terminals'
    # unconstrained minima cannot appear in any optimal or tie solution
    prune_eps = 1e-9 * max(1.0, float(U))
    if U:
        total_min = sum(placements[u][0].cost for u in range(U))
        for u in range(U):
            slack = best_obj + prune_eps - (total_min - placements[u][0].cost)
            placements[u] = [p for p in placements[u] if p.cost <= slack]

    # CPU-price penalty bound: for any multipliers lam(s) >= 0, every
    # completion of a node costs at least
    #   sum_u min_p [cost_p + lam . cpu_p]  -  lam . (remaining CPU capacity),
    # because completions respect the capacity rows. A few subgradient
    # steps at the root pick multipliers that make this bite; lam = 0
    # recovers the plain sum-of-minima bound.
    lam = [0.0] * S
    best_lam = list(lam)
    best_lagr = sum(placements[u][0].cost for u in range(U)) if U else 0.0
    if U:
        cap_total = sum(cpu_cap)
        for _ in range(30):
            value = 0.0
            demand = [0.0] * S
            for u in range(U):
                best_p, best_rc = None, float("inf")
                for p in placements[u]:
                    rc = p.cost + sum(lam[s] * d for s, d in p.cpu_items)
                    if rc < best_rc:
                        best_rc, best_p = rc, p
                value += best_rc
                for s, d in best_p.cpu_items:
                    demand[s] += d
            value -= sum(lam[s] * cpu_cap[s] for s in range(S))
            if value > best_lagr:
                best_lagr = value
                best_lam = list(lam)
            grad = [demand[s] - cpu_cap[s] for s in range(S)]
            norm = sum(g * g for g in grad)
            if norm <= 0.0:
                break
            step = 0.7 * max(best_obj - value, 1e-6) / norm
            lam = [max(0.0, lam[s] + step * grad[s]) for s in range(S)]
    lam = best_lam
    lag_cap_total = sum(lam[s] * cpu_cap[s] for s in range(S))
    rmin = [0.0] * U
    for u in range(U):
        for p in placements[u]:
            p.lam = sum(lam[s] * d for s, d in p.cpu_items)
        rmin[u] = min(p.cost + p.lam for p in placements[u])
    if U:
        # price-aware second trim: using p for u costs at least
        # (cost_p + lam.cpu_p) + sum of other reduced minima - lam.capacity
        rmin_total = sum(rmin)
        for u in range(U):
            cutoff = best_obj + prune_eps - (rmin_total - rmin[u]) + lag_cap_total
            placements[u] = [p for p in placements[u] if p.cost + p.lam <= cutoff]

    # slot relaxation: with one uniform per-request CPU grant, the capacity
    # rows cap the total number of satellite-served positions. Each
    # placement's saving below its terminal's all-data-center cost, hulled
    # to a concave per-slot curve, turns the node bound into a greedy
    # fractional multiple-choice knapsack over that global slot budget.
    f_values = {float(x) for row in ev.f for x in row}
    slot_mode = len(f_values) == 1 and U > 0
    f_unit = f_values.pop() if slot_mode else 0.0
    unit_slopes: List[tuple] = []  # (slope, u), globally sorted descending
    dc_cost_of = [0.0] * U
    if slot_mode:
        for u in range(U):
            dc_cost_of[u] = ev.weighted_cost(u, ev.dc_hosts(u), float(t_norm[u]), float(e_norm[u]))
        for u in range(U):
            I_u = len(chains[u])
            best_by_slots = [float("-inf")] * (I_u + 1)
            for p in placements[u]:
                j = len(p.cache_items)
                saving = dc_cost_of[u] - p.cost
                if saving > best_by_slots[j]:
                    best_by_slots[j] = saving
            gain = [0.0] * (I_u + 1)
            for j in range(1, I_u + 1):
                gain[j] = max(gain[j - 1], best_by_slots[j])
            # smallest concave majorant of (slots, gain), as per-slot slopes
            stack: List[tuple] = []
            for x in range(I_u + 1):
                y = gain[x]
                while len(stack) >= 2:
                    (x1, y1), (x2, y2) = stack[-2], stack[-1]
                    if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1):
                        stack.pop()
                    else:
                        break
                stack.append((x, y))
            for (xa, ya), (xb, yb) in zip(stack, stack[1:]):
                slope = (yb - ya) / (xb - xa)
                if slope > 0.0:
                    unit_slopes.extend([(slope, u)] * (xb - xa))
        unit_slopes.sort(key=lambda t: -t[0])

    # natural terminal order: the incumbent key then grows as a prefix of the
    # final decision key, enabling exact pruning of equal-cost subtrees
    order = list(range(U))
    suffix_min = [0.0] * (U + 1)
    suffix_rmin = [0.0] * (U + 1)
    suffix_dc = [0.0] * (U + 1)
    for d in range(U - 1, -1, -1):
        suffix_min[d] = suffix_min[d + 1] + placements[order[d]][0].cost
        suffix_rmin[d] = suffix_rmin[d + 1] + rmin[order[d]]
        suffix_dc[d] = suffix_dc[d + 1] + dc_cost_of[order[d]]

    used_cpu = [0.0] * S
    used_sto = [0.0] * S
    cache_ref: Dict[tuple, int] = {}
    chosen: List[Optional[Placement]] = [None] * U
    ptr = [0] * U  # per-terminal resume index for the cheapest-feasible scan
    nodes = 0
    hit_limit = False
    tie_eps = 5e-13  # below the 1e-12 leaf tie tolerance minus float-sum noise
    time_limit = limits.time_limit_s

    def feasible(p: Placement) -> bool:
        for s, dem in p.cpu_items:
            if used_cpu[s] + dem > cpu_cap[s] + cpu_tol[s]:
                return False
        for s, items in p.cache_by_sat:
            extra = 0.0
            for k, lk in items:
                if not cache_ref.get((k, s)):
                    extra += lk
            if extra and used_sto[s] + extra > sto_cap[s] + sto_tol[s]:
                return False
        return True

    lag_used = 0.0

    def apply(p: Placement) -> None:
        nonlocal lag_used
        lag_used += p.lam
        for s, dem in p.cpu_items:
            used_cpu[s] += dem
        for k, s in p.cache_items:
            prev = cache_ref.get((k, s), 0)
            cache_ref[(k, s)] = prev + 1
            if prev == 0:
                used_sto[s] += nf_size[k]

    def undo(p: Placement) -> None:
        nonlocal lag_used
        lag_used -= p.lam
        for s, dem in p.cpu_items:
            used_cpu[s] -= dem
        for k, s in p.cache_items:
            left = cache_ref[(k, s)] - 1
            cache_ref[(k, s)] = left
            if left == 0:
                used_sto[s] -= nf_size[k]

    def remaining_bound(d: int) -> float:
        """Sum of each unplaced terminal's cheapest placement that is
        individually feasible against the node's remaining capacity."""
        total = 0.0
        for dd in range(d, U):
            uu = order[dd]
            cands = placements[uu]
            i = ptr[uu]
            n = len(cands)
            while i < n and not feasible(cands[i]):
                i += 1
            ptr[uu] = i
            if i == n:
                return float("inf")
            total += cands[i].cost
        return total

    def slot_bound(d: int) -> float:
        """Unplaced terminals' data-center total minus the best savings a
        global satellite-slot budget admits (concave hull greedy)."""
        budget = 0
        for s in range(S):
            rem = cpu_cap[s] + cpu_tol[s] - used_cpu[s]
            if rem > 0.0:
                budget += int(rem / f_unit + 1e-12)
        savings = 0.0
        if budget:
            for slope, uu in unit_slopes:
                if chosen[uu] is None:
                    savings += slope
                    budget -= 1
                    if not budget:
                        break
        return suffix_dc[d] - savings

    root_bound = max(remaining_bound(0), suffix_rmin[0] - lag_cap_total) if U else 0.0

    def leaf() -> None:
        nonlocal best_obj, best_hosts, best_key
        obj = sum(chosen[u].cost for u in range(U))
        if obj > best_obj + 1e-12:
            return
        hosts_list = [chosen[u].hosts for u in range(U)]
        key = _full_key(hosts_list, [chosen[u].key for u in range(U)])
        if obj < best_obj - 1e-12 or key < best_key:
            best_obj, best_hosts, best_key = obj, hosts_list, key

    def tie_prefix_can_win() -> bool:
        """Whether the current partial key can still beat the incumbent key.

        Only consulted when a subtree can at best tie the incumbent cost.
        The decision key lists served triples by terminal index, so the
        fragments of the leading placed terminals are a settled prefix;
        once that prefix is lexicographically >= the incumbent key, no
        completion produces a smaller key.
        """
        flat: List[tuple] = []
        for u in range(U):
            p = chosen[u]
            if p is None:
                break
            flat.extend((u, k, s) for k, s in p.key)
        head = tuple(best_key[: len(flat)])
        me = tuple(flat)
        if me < head:
            return True
        return me == head and len(flat) < len(best_key)

    def rec(d: int, partial: float) -> None:
        nonlocal nodes, hit_limit
        if hit_limit:
            return
        if d == U:
            leaf()
            return
        u = order[d]
        # node-state scan bound: applying a candidate only shrinks
        # feasibility, so this also lower-bounds every candidate's subtree
        # and spares rescanning the other terminals once per candidate
        scan_base = remaining_bound(d + 1)
        saved_ptr = list(ptr)
        base_remcap = lag_cap_total - lag_used
        srmin = suffix_rmin[d + 1]
        smin = suffix_min[d + 1]
        for p in placements[u]:
            lb0 = partial + p.cost
            if lb0 + smin > best_obj + prune_eps:
                break  # placements are cost-sorted: nothing cheaper follows
            lb_price = lb0 + srmin - base_remcap + p.lam
            if lb_price > best_obj + prune_eps:
                continue
            if lb0 + scan_base > best_obj + prune_eps:
                continue
            if not feasible(p):
                continue
            nodes += 1
            if nodes > limits.max_nodes or (
                time_limit is not None and nodes % 1024 == 0 and time.perf_counter() - start > time_limit
            ):
                hit_limit = True
                return
            apply(p)
            chosen[u] = p
            lb = max(lb_price, lb0 + remaining_bound(d + 1))
            if slot_mode and lb <= best_obj + prune_eps:
                lb = max(lb, lb0 + slot_bound(d + 1))
            if lb <= best_obj + prune_eps and (lb < best_obj - tie_eps or tie_prefix_can_win()):
                rec(d + 1, lb0)
            chosen[u] = None
            undo(p)
            ptr[:] = saved_ptr
            if hit_limit:
                return

    use_compiled = _search_mod.HAVE_NUMBA and time_limit is None and U > 0
    if use_compiled:
        K = scenario.catalog.n_nf_types
        width = max(len(chains[u]) for u in range(U))
        total = sum(len(placements[u]) for u in range(U))
        off = np.zeros(U, dtype=np.int64)
        count = np.zeros(U, dtype=np.int64)
        cost_a = np.zeros(total, dtype=np.float64)
        lam_a = np.zeros(total, dtype=np.float64)
        nslots_a = np.zeros(total, dtype=np.int64)
        cpu_sat_a = np.full((total, width), -1, dtype=np.int64)
        cpu_dem_a = np.zeros((total, width), dtype=np.float64)
        cache_k_a = np.full((total, width), -1, dtype=np.int64)
        cache_s_a = np.full((total, width), -1, dtype=np.int64)
        keycode_a = np.zeros((total, width), dtype=np.int64)
        g = 0
        for u in range(U):
            off[u] = g
            count[u] = len(placements[u])
            for p in placements[u]:
                cost_a[g] = p.cost
                lam_a[g] = p.lam
                nslots_a[g] = len(p.cache_items)
                for t, (s, dem) in enumerate(p.cpu_items):
                    cpu_sat_a[g, t] = s
                    cpu_dem_a[g, t] = dem
                for t, (k, s) in enumerate(p.cache_items):
                    cache_k_a[g, t] = k
                    cache_s_a[g, t] = s
                    keycode_a[g, t] = (u * K + k) * S + s
                g += 1
        key_capacity = max(1, sum(len(chains[u]) for u in range(U)))
        best_key_arr = np.array([(u * K + k) * S + s for (u, k, s) in best_key], dtype=np.int64)
        key_in = np.zeros(key_capacity, dtype=np.int64)
        key_in[: best_key_arr.shape[0]] = best_key_arr
        key_buf = np.zeros(key_capacity, dtype=np.int64)
        out_choice = np.full(U, -1, dtype=np.int64)
        if slot_mode:
            unit_slope_a = np.asarray([sl for sl, _ in unit_slopes], dtype=np.float64)
            unit_owner_a = np.asarray([uu for _, uu in unit_slopes], dtype=np.int64)
        else:
            unit_slope_a = np.zeros(0, dtype=np.float64)
            unit_owner_a = np.zeros(0, dtype=np.int64)
        _, improved, nodes, hit_limit, _ = _search_mod._search(
            U,
            S,
            K,
            off,
            count,
            cost_a,
            lam_a,
            nslots_a,
            cpu_sat_a,
            cpu_dem_a,
            cache_k_a,
            cache_s_a,
            keycode_a,
            np.asarray(cpu_cap, dtype=np.float64),
            np.asarray(cpu_tol, dtype=np.float64),
            np.asarray(sto_cap, dtype=np.float64),
            np.asarray(sto_tol, dtype=np.float64),
            np.asarray(nf_size, dtype=np.float64),
            np.asarray(suffix_min, dtype=np.float64),
            np.asarray(suffix_rmin, dtype=np.float64),
            np.asarray(suffix_dc, dtype=np.float64),
            lag_cap_total,
            slot_mode,
            f_unit if slot_mode else 1.0,
            unit_slope_a,
            unit_owner_a,
            best_obj,
            key_in,
            best_key_arr.shape[0],
            limits.max_nodes,
            prune_eps,
            tie_eps,
            out_choice,
            key_buf,
        )
        if improved:
            best_hosts = [placements[u][int(out_choice[u]) - int(off[u])].hosts for u in range(U)]
    else:
        rec(0, 0.0)
    final_obj = score_hosts(list(best_hosts))
    return SolveResult(
        status="node-limit" if hit_limit else "optimal",
        decision=_decision_from_hosts(scenario, list(best_hosts)),
        objective=final_obj,
        node_count=nodes,
        wall_time_s=time.perf_counter() - start,
        root_bound=root_bound,
    )


def solve_exact(model: IlpModel, limits: Optional[SolveLimits] = None) -> SolveResult:
    """Solve a model from :func:`satedge.ilp.build_model` to optimality."""
    if model.scenario is None or model.evaluator is None:
        raise ValueError("solve_exact needs a model built from a scenario")
    return _solve(model.scenario, model.evaluator, model.t_norm, model.e_norm, limits or SolveLimits())


def solve_scenario(scenario: Scenario, limits: Optional[SolveLimits] = None) -> SolveResult:
    """Branch-and-bound directly on a scenario (skips building the row table)."""
    ev = ScenarioEvaluator(scenario)
    t_norm, e_norm = dco_normalizers(scenario, ev)
    return _solve(scenario, ev, t_norm, e_norm, limits or SolveLimits())


def brute_force_oracle(scenario: Scenario, max_candidates: int = 10_000_000) -> SolveResult:
    """Exhaustively enumerate every prefix placement combination.

    Independent verification path for tiny instances: it enumerates the
    full cross product of per-terminal placements (no dominance, no
    bounding), filters by capacity directly, and keeps the best
    objective under the same deterministic tie-breaking as the solver.
    """
    start = time.perf_counter()
    ev = ScenarioEvaluator(scenario)
    t_norm, e_norm = dco_normalizers(scenario, ev)
    U = scenario.n_terminals
    S = scenario.n_satellites
    option_lists: List[List[Tuple[tuple, float, tuple]]] = []
    total = 1
    for u in range(U):
        opts = []
        for hosts in _host_tuples(S, len(ev.chain[u])):
            cost = ev.weighted_cost(u, hosts, float(t_norm[u]), float(e_norm[u]))
            opts.append((hosts, cost, _fragment(ev.chain[u], hosts)))
        option_lists.append(opts)
        total *= len(opts)
        if total > max_candidates:
            raise OracleSizeError(f"search space exceeds {max_candidates} candidate assignments")

    cpu_cap = [float(x) for x in scenario.catalog.cpu_capacity]
    sto_cap = [float(x) for x in scenario.catalog.storage_capacity]
    nf_size = [float(x) for x in scenario.catalog.nf_size_bits]
    f = ev.f
    best_obj = None
    best_hosts: List[tuple] = []
    best_key: tuple = ()
    count = 0
    for combo in itertools.product(*option_lists):
        count += 1
        cpu = [0.0] * S
        pairs = set()
        for u, (hosts, _, _) in enumerate(combo):
            chain = ev.chain[u]
            for i, s in enumerate(hosts):
                if s is not None:
                    cpu[s] += f[chain[i]][s]
                    pairs.add((chain[i], s))
        if any(cpu[s] > cpu_cap[s] * (1.0 + CAPACITY_RTOL) for s in range(S)):
            continue
        sto = [0.0] * S
        for k, s in pairs:
            sto[s] += nf_size[k]
        if any(sto[s] > sto_cap[s] * (1.0 + CAPACITY_RTOL) for s in range(S)):
            continue
        obj = sum(item[1] for item in combo)
        if best_obj is None or obj < best_obj - 1e-12:
            best_obj = obj
            best_hosts = [item[0] for item in combo]
            best_key = _full_key(best_hosts, [item[2] for item in combo])
        elif obj <= best_obj + 1e-12:
            key = _full_key([item[0] for item in combo], [item[2] for item in combo])
            if key < best_key:
                best_obj = obj
                best_hosts = [item[0] for item in combo]
                best_key = key
    return SolveResult(
        status="optimal",
        decision=_decision_from_hosts(scenario, best_hosts),
        objective=float(best_obj) if best_obj is not None else 0.0,
        node_count=count,
        wall_time_s=time.perf_counter() - start,
    )
