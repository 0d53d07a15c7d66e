"""Greedy baselines: GCO, NFCO, and the all-data-center decision (DCO).

GCO walks chain positions in execution order and satellites, visiting
NFs by descending per-position request popularity at each satellite.
For every requesting terminal it caches the NF locally when space
remains, then serves the request on the nearest (fewest hops) satellite
that caches the NF and still has CPU headroom; requests that find no
host fall through to the data center.

NFCO is the order-oblivious variant: popularity is aggregated over
chain positions and there is no position-ordered outer loop, so caching
ignores where in a chain an NF sits.

Both finish with a demotion pass that zeroes any satellite-served
position following a data-center-served one, because the cost model
only prices prefix-shaped placements. The pass can be disabled to study
what the raw greedy would have produced.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Decision, Scenario


@dataclass
class GreedyStats:
    """Basic-operation counters for complexity measurements."""

    membership_checks: int = 0
    candidate_scans: int = 0

    @property
    def basic_ops(self) -> int:
        return self.membership_checks + self.candidate_scans


def popularity(scenario: Scenario) -> np.ndarray:
    """Request count of NF k at chain position i via satellite s (I, K, S)."""
    I = scenario.chain_length
    K = scenario.catalog.n_nf_types
    S = scenario.n_satellites
    table = np.zeros((I, K, S), dtype=np.int64)
    for u in range(scenario.n_terminals):
        s = scenario.assoc_satellite(u)
        for i, k in enumerate(scenario.chain_of(u).nfs):
            table[i, k, s] += 1
    return table


def dco(scenario: Scenario) -> Decision:
    """Serve everything at the data center: all-zero caching and offloading."""
    K = scenario.catalog.n_nf_types
    S = scenario.n_satellites
    U = scenario.n_terminals
    return Decision(cached=np.zeros((K, S), dtype=np.int8), served=np.zeros((U, K, S), dtype=np.int8))


def _demote_after_dc(scenario: Scenario, served: np.ndarray) -> np.ndarray:
    for u in range(scenario.n_terminals):
        chain = scenario.chain_of(u).nfs
        fell = False
        for k in chain:
            if fell:
                served[u, k, :] = 0
            elif not served[u, k].any():
                fell = True
    return served


def _greedy(scenario: Scenario, position_aware: bool, enforce_dc_prefix: bool) -> tuple:
    K = scenario.catalog.n_nf_types
    S = scenario.n_satellites
    U = scenario.n_terminals
    I = scenario.chain_length
    nf_size = scenario.catalog.nf_size_bits
    f = scenario.catalog.nf_allocation
    stats = GreedyStats()

    cached = np.zeros((K, S), dtype=np.int8)
    served = np.zeros((U, K, S), dtype=np.int8)
    storage_left = scenario.catalog.storage_capacity.astype(np.float64).copy()
    cpu_left = scenario.catalog.cpu_capacity.astype(np.float64).copy()

    chains = [scenario.chain_of(u).nfs for u in range(U)]
    assoc = [scenario.assoc_satellite(u) for u in range(U)]
    pop = popularity(scenario)

    if position_aware:
        rounds = [(i, pop[i]) for i in range(I)]
    else:
        rounds = [(None, pop.sum(axis=0))]

    for position, table in rounds:
        for s in range(S):
            nf_order = sorted(range(K), key=lambda k: (-int(table[k, s]), k))
            # nearest candidate hosts, rebuilt per the published loop structure
            for k in nf_order:
                for u in range(U):
                    stats.membership_checks += 1
                    if assoc[u] != s:
                        continue
                    if position_aware:
                        if chains[u][position] != k:
                            continue
                    elif k not in chains[u]:
                        continue
                    if storage_left[s] >= nf_size[k] and not cached[k, s]:
                        cached[k, s] = 1
                        storage_left[s] -= nf_size[k]
                    host_order = sorted(range(S), key=lambda t: (int(scenario.topology.hops[s, t]), t))
                    for s2 in host_order:
                        stats.candidate_scans += 1
                        if cached[k, s2] and cpu_left[s2] >= f[k, s2] and not served[u, k].any():
                            served[u, k, s2] = 1
                            cpu_left[s2] -= f[k, s2]
                            break

    if enforce_dc_prefix:
        served = _demote_after_dc(scenario, served)
    return Decision(cached=cached, served=served), stats


def gco(scenario: Scenario, enforce_dc_prefix: bool = True) -> Decision:
    """Position-aware greedy caching and offloading."""
    return _greedy(scenario, position_aware=True, enforce_dc_prefix=enforce_dc_prefix)[0]


def gco_with_stats(scenario: Scenario, enforce_dc_prefix: bool = True) -> tuple:
    return _greedy(scenario, position_aware=True, enforce_dc_prefix=enforce_dc_prefix)


def nfco(scenario: Scenario, enforce_dc_prefix: bool = True) -> Decision:
    """Order-oblivious greedy: popularity aggregated over chain positions."""
    return _greedy(scenario, position_aware=False, enforce_dc_prefix=enforce_dc_prefix)[0]
