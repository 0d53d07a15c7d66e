"""Domain types, constellation topology, and randomized scenario generation.

Units are SI base units throughout the in-memory model: bits, bits/s,
cycles/s, meters, seconds, watts. Transmit powers are *configured* in dBW
(the conventional tabulation) and converted to watts when the scenario is
built; see :class:`GenerationConfig`.

All types are plain frozen dataclasses whose numpy arrays are marked
read-only after construction, so instances are safe to share across
threads. Construction is permissive (invalid states are representable);
:func:`validate_scenario` reports every broken invariant.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class TopologyError(ValueError):
    """Raised when topology construction yields an unusable graph."""


class GenerationError(ValueError):
    """Raised for invalid scenario generation parameters."""


def dbw_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Topology:
    """Satellite constellation graph plus per-link-class constants.

    ``hops[s, s']`` is the minimal ISL hop count between satellites.
    Distances are per link class: one terminal-satellite distance, one
    per-hop ISL distance, and one satellite-ground distance, matching a
    model in which link geometry is abstracted to scalar constants.
    """

    n_satellites: int
    adjacency: frozenset  # frozenset[tuple[int, int]], pairs with a < b
    hops: np.ndarray  # (S, S) int
    uplink_distance_m: float
    isl_hop_distance_m: float
    ground_distance_m: float
    uplink_rate_bps: float
    isl_rate_bps: float
    downlink_rate_bps: float
    uplink_power_w: float
    isl_power_w: float
    downlink_power_w: float
    light_speed_mps: float = 3.0e8

    def __post_init__(self) -> None:
        object.__setattr__(self, "hops", _freeze(np.asarray(self.hops, dtype=np.int64)))

    def degree(self, s: int) -> int:
        return sum(1 for a, b in self.adjacency if a == s or b == s)


@dataclass(frozen=True)
class NfCatalog:
    """Network-function resource demands and per-satellite server capacities."""

    cycles_per_bit: np.ndarray  # (K,) CPU cycles needed per input bit
    nf_size_bits: np.ndarray  # (K,) image size when cached
    cpu_capacity: np.ndarray  # (S,) cycles/s available on each satellite
    storage_capacity: np.ndarray  # (S,) bits of cache on each satellite
    nf_allocation: np.ndarray  # (K, S) cycles/s granted to one served request
    dc_allocation: float  # cycles/s granted per request at the data center
    kappa: float  # chip coefficient of the f^3 compute-power law

    def __post_init__(self) -> None:
        for name in ("cycles_per_bit", "nf_size_bits", "cpu_capacity", "storage_capacity", "nf_allocation"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name), dtype=np.float64)))

    @property
    def n_nf_types(self) -> int:
        return int(self.cycles_per_bit.shape[0])


@dataclass(frozen=True)
class ServiceChain:
    """Ordered network functions a request must traverse."""

    nfs: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "nfs", tuple(int(k) for k in self.nfs))

    def __len__(self) -> int:
        return len(self.nfs)


@dataclass(frozen=True)
class Scenario:
    """One time slot: topology, catalog, services, and terminal demands.

    ``association[u, s]`` and ``requests[u, j]`` are 0/1 indicator
    matrices (exactly one satellite / one service per terminal when the
    scenario is valid). ``input_sizes[u, i]`` is the input payload in
    bits feeding chain position ``i`` of terminal ``u``'s requested
    service. ``alpha`` weights latency against energy in the total cost.
    """

    topology: Topology
    catalog: NfCatalog
    chains: tuple  # tuple[ServiceChain, ...]
    association: np.ndarray  # (U, S) 0/1
    requests: np.ndarray  # (U, J) 0/1
    input_sizes: np.ndarray  # (U, I) bits
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "chains", tuple(self.chains))
        object.__setattr__(self, "association", _freeze(np.asarray(self.association, dtype=np.int8)))
        object.__setattr__(self, "requests", _freeze(np.asarray(self.requests, dtype=np.int8)))
        object.__setattr__(self, "input_sizes", _freeze(np.asarray(self.input_sizes, dtype=np.float64)))

    @property
    def n_terminals(self) -> int:
        return int(self.association.shape[0])

    @property
    def n_satellites(self) -> int:
        return self.topology.n_satellites

    @property
    def n_services(self) -> int:
        return len(self.chains)

    @property
    def chain_length(self) -> int:
        return len(self.chains[0]) if self.chains else 0

    def assoc_satellite(self, u: int) -> int:
        """Associated satellite of terminal ``u`` (assumes a valid scenario)."""
        return int(np.argmax(self.association[u]))

    def service_of(self, u: int) -> int:
        return int(np.argmax(self.requests[u]))

    def chain_of(self, u: int) -> ServiceChain:
        return self.chains[self.service_of(u)]


@dataclass(frozen=True, eq=False)
class Decision:
    """Caching matrix and offloading tensor produced by a solver.

    ``cached[k, s] = 1`` caches NF ``k`` on satellite ``s``;
    ``served[u, k, s] = 1`` serves terminal ``u``'s request for NF ``k``
    on satellite ``s``. Positions with no serving satellite fall through
    to the data center. Entries must be 0/1; feasibility against a
    scenario is checked separately.
    """

    cached: np.ndarray  # (K, S) int8
    served: np.ndarray  # (U, K, S) int8

    def __post_init__(self) -> None:
        cached = np.asarray(self.cached, dtype=np.int8)
        served = np.asarray(self.served, dtype=np.int8)
        if cached.ndim != 2 or served.ndim != 3 or served.shape[1:] != cached.shape:
            raise ValueError(f"inconsistent decision shapes {cached.shape} vs {served.shape}")
        for arr in (cached, served):
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise ValueError("decision entries must be 0 or 1")
        object.__setattr__(self, "cached", _freeze(cached))
        object.__setattr__(self, "served", _freeze(served))

    def same_as(self, other: "Decision") -> bool:
        return np.array_equal(self.cached, other.cached) and np.array_equal(self.served, other.served)


def _circulant_edges(n: int, offsets: Sequence[int]) -> set:
    edges = set()
    for off in offsets:
        for i in range(n):
            j = (i + off) % n
            if i != j:
                edges.add((min(i, j), max(i, j)))
    return edges


def _bfs_hops(n: int, neighbors: list) -> np.ndarray:
    hops = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        hops[src, src] = 0
        queue = deque([src])
        while queue:
            node = queue.popleft()
            for nxt in neighbors[node]:
                if hops[src, nxt] < 0:
                    hops[src, nxt] = hops[src, node] + 1
                    queue.append(nxt)
    return hops


def topology_from_links(
    n_satellites: int,
    links: Sequence,
    *,
    uplink_distance_m: float = 1.0e6,
    isl_hop_distance_m: float = 8.0e5,
    ground_distance_m: float = 2.0e6,
    uplink_rate_bps: float = 2.0e8,
    isl_rate_bps: float = 1.0e10,
    downlink_rate_bps: float = 3.0e8,
    uplink_power_w: float = dbw_to_watts(3.0),
    isl_power_w: float = dbw_to_watts(30.0),
    downlink_power_w: float = dbw_to_watts(20.0),
    light_speed_mps: float = 3.0e8,
) -> Topology:
    """Build a topology from an explicit undirected link list.

    Hop counts come from a breadth-first search rooted at every
    satellite; a disconnected graph raises :class:`TopologyError`.
    """
    if n_satellites < 1:
        raise TopologyError("need at least one satellite")
    edges = set()
    for a, b in links:
        a, b = int(a), int(b)
        if a == b or not (0 <= a < n_satellites and 0 <= b < n_satellites):
            raise TopologyError(f"bad link ({a}, {b})")
        edges.add((min(a, b), max(a, b)))
    neighbors = [[] for _ in range(n_satellites)]
    for a, b in sorted(edges):
        neighbors[a].append(b)
        neighbors[b].append(a)
    hops = _bfs_hops(n_satellites, neighbors)
    if (hops < 0).any():
        raise TopologyError("satellite graph is disconnected")
    return Topology(
        n_satellites=n_satellites,
        adjacency=frozenset(edges),
        hops=hops,
        uplink_distance_m=uplink_distance_m,
        isl_hop_distance_m=isl_hop_distance_m,
        ground_distance_m=ground_distance_m,
        uplink_rate_bps=uplink_rate_bps,
        isl_rate_bps=isl_rate_bps,
        downlink_rate_bps=downlink_rate_bps,
        uplink_power_w=uplink_power_w,
        isl_power_w=isl_power_w,
        downlink_power_w=downlink_power_w,
        light_speed_mps=light_speed_mps,
    )


def build_topology(n_satellites: int, link_offsets: Sequence[int], **link_params) -> Topology:
    """Build a circulant ring constellation C_n(offsets).

    Each satellite links to the satellites ``offset`` positions away in
    both ring directions, for every offset. ``C_8(1, 2)`` is the
    canonical 8-node, degree-4 layout. Keyword arguments override the
    per-link-class constants (see :func:`topology_from_links`).
    """
    if n_satellites < 2:
        raise TopologyError("a ring needs at least two satellites")
    offsets = sorted({int(o) for o in link_offsets})
    if not offsets:
        raise TopologyError("at least one ring offset is required")
    for off in offsets:
        if not 1 <= off <= n_satellites // 2:
            raise TopologyError(f"offset {off} outside [1, {n_satellites // 2}]")
    edges = _circulant_edges(n_satellites, offsets)
    return topology_from_links(n_satellites, edges, **link_params)


@dataclass(frozen=True)
class GenerationConfig:
    """Parameters for randomized scenario generation.

    Defaults follow the standard simulation table for this setting:
    8 satellites with 4 ISLs each, chains of 4 NFs, input payloads of
    1-100 Mb, 200 Mbps uplink, 10 Gcycles/s satellites granting
    2 Gcycles/s per served NF, and {3, 30, 20} dBW transmit powers.
    Quantities the table leaves open (catalog size, NF image sizes,
    cache size, chip coefficient, latency weight) get engineering
    defaults sized to create real cache/CPU contention; all are
    overridable.
    """

    n_satellites: int = 8
    link_offsets: tuple = (1, 2)
    n_terminals: int = 10
    n_nf_types: int = 8
    n_services: int = 4
    chain_length: int = 4
    input_size_range_bits: tuple = (1.0e6, 1.0e8)
    nf_size_range_bits: tuple = (5.0e7, 2.0e8)
    storage_capacity_bits: float = 5.0e8
    cpu_capacity_cps: float = 1.0e10
    nf_allocation_cps: float = 2.0e9
    dc_allocation_cps: float = 2.0e9
    cycles_per_bit: float = 100.0
    kappa: float = 1.0e-28
    alpha: float = 0.5
    uplink_rate_bps: float = 2.0e8
    isl_rate_bps: float = 1.0e10
    downlink_rate_bps: float = 3.0e8
    uplink_power_dbw: float = 3.0
    isl_power_dbw: float = 30.0
    downlink_power_dbw: float = 20.0
    uplink_distance_m: float = 1.0e6
    isl_hop_distance_m: float = 8.0e5
    ground_distance_m: float = 2.0e6
    light_speed_mps: float = 3.0e8
    association: str = "uniform"  # or "round_robin"
    seed: int = 0  # default seed consumed by the CLI when none is given


def _check_config(config: GenerationConfig) -> None:
    if config.n_terminals < 1:
        raise GenerationError("zero terminals")
    if config.n_nf_types < 1:
        raise GenerationError("empty NF catalog")
    if config.n_services < 1:
        raise GenerationError("no services")
    if config.chain_length < 1:
        raise GenerationError("empty service chains")
    if config.chain_length > config.n_nf_types:
        raise GenerationError("chain longer than the NF catalog (chains hold distinct NFs)")
    for name in ("input_size_range_bits", "nf_size_range_bits"):
        lo, hi = getattr(config, name)
        if not (0 < lo <= hi):
            raise GenerationError(f"bad range {name}={lo, hi}")
    if config.nf_allocation_cps > config.cpu_capacity_cps:
        raise GenerationError("per-NF allocation exceeds satellite CPU capacity")
    if not 0.0 <= config.alpha <= 1.0:
        raise GenerationError("alpha must lie in [0, 1]")
    if config.association not in ("uniform", "round_robin"):
        raise GenerationError(f"unknown association mode {config.association!r}")


def generate_scenario(config: GenerationConfig, seed: int) -> Scenario:
    """Generate one randomized time slot, deterministically for a seed.

    Chains are uniform draws of distinct NFs, terminals associate with a
    uniform random satellite (or round-robin), request a uniform random
    service, and draw per-position input sizes uniformly from the
    configured range.
    """
    _check_config(config)
    rng = np.random.default_rng(seed)
    topology = build_topology(
        config.n_satellites,
        config.link_offsets,
        uplink_distance_m=config.uplink_distance_m,
        isl_hop_distance_m=config.isl_hop_distance_m,
        ground_distance_m=config.ground_distance_m,
        uplink_rate_bps=config.uplink_rate_bps,
        isl_rate_bps=config.isl_rate_bps,
        downlink_rate_bps=config.downlink_rate_bps,
        uplink_power_w=dbw_to_watts(config.uplink_power_dbw),
        isl_power_w=dbw_to_watts(config.isl_power_dbw),
        downlink_power_w=dbw_to_watts(config.downlink_power_dbw),
        light_speed_mps=config.light_speed_mps,
    )
    K, S, U, J, I = (
        config.n_nf_types,
        config.n_satellites,
        config.n_terminals,
        config.n_services,
        config.chain_length,
    )
    catalog = NfCatalog(
        cycles_per_bit=np.full(K, config.cycles_per_bit),
        nf_size_bits=rng.uniform(*config.nf_size_range_bits, size=K),
        cpu_capacity=np.full(S, config.cpu_capacity_cps),
        storage_capacity=np.full(S, config.storage_capacity_bits),
        nf_allocation=np.full((K, S), config.nf_allocation_cps),
        dc_allocation=config.dc_allocation_cps,
        kappa=config.kappa,
    )
    chains = tuple(ServiceChain(tuple(rng.choice(K, size=I, replace=False))) for _ in range(J))
    if config.association == "round_robin":
        assoc_idx = np.arange(U) % S
    else:
        assoc_idx = rng.integers(0, S, size=U)
    service_idx = rng.integers(0, J, size=U)
    association = np.zeros((U, S), dtype=np.int8)
    association[np.arange(U), assoc_idx] = 1
    requests = np.zeros((U, J), dtype=np.int8)
    requests[np.arange(U), service_idx] = 1
    input_sizes = rng.uniform(*config.input_size_range_bits, size=(U, I))
    return Scenario(
        topology=topology,
        catalog=catalog,
        chains=chains,
        association=association,
        requests=requests,
        input_sizes=input_sizes,
        alpha=config.alpha,
    )


def _validate_topology(topo: Topology, out: list) -> None:
    n = topo.n_satellites
    hops = topo.hops
    if hops.shape != (n, n):
        out.append(f"topology: hops matrix shape {hops.shape} does not match {n} satellites")
        return
    if not np.array_equal(hops, hops.T):
        out.append("topology: hop matrix is not symmetric")
    if (np.diag(hops) != 0).any():
        out.append("topology: nonzero hop count on the diagonal")
    off = hops[~np.eye(n, dtype=bool)]
    if off.size and (off < 1).any():
        out.append("topology: off-diagonal hop count below 1 (or disconnected pair)")
    # triangle inequality over all satellite triples
    tri = hops[:, :, None] + hops[None, :, :]  # tri[a, b, c] = h(a,b) + h(b,c)
    if (hops[:, None, :] > tri).any():
        out.append("topology: hop counts violate the triangle inequality")
    for name in (
        "uplink_distance_m",
        "isl_hop_distance_m",
        "ground_distance_m",
        "uplink_rate_bps",
        "isl_rate_bps",
        "downlink_rate_bps",
        "uplink_power_w",
        "isl_power_w",
        "downlink_power_w",
        "light_speed_mps",
    ):
        if getattr(topo, name) <= 0:
            out.append(f"topology: {name} must be strictly positive")


def _validate_catalog(cat: NfCatalog, n_satellites: int, out: list) -> None:
    K = cat.n_nf_types
    if K < 1:
        out.append("catalog: empty NF catalog")
        return
    shapes = {
        "cycles_per_bit": (K,),
        "nf_size_bits": (K,),
        "cpu_capacity": (n_satellites,),
        "storage_capacity": (n_satellites,),
        "nf_allocation": (K, n_satellites),
    }
    for name, shape in shapes.items():
        arr = getattr(cat, name)
        if arr.shape != shape:
            out.append(f"catalog: {name} has shape {arr.shape}, expected {shape}")
            return
        if (arr <= 0).any():
            out.append(f"catalog: {name} must be strictly positive everywhere")
    if cat.dc_allocation <= 0:
        out.append("catalog: dc_allocation must be strictly positive")
    if cat.kappa <= 0:
        out.append("catalog: kappa must be strictly positive")
    if (cat.nf_allocation > cat.cpu_capacity[None, :]).any():
        out.append("catalog: nf_allocation exceeds cpu_capacity for some (NF, satellite)")


def validate_scenario(scenario: Scenario) -> list:
    """Return a list of human-readable invariant violations (empty if valid)."""
    out: list = []
    _validate_topology(scenario.topology, out)
    _validate_catalog(scenario.catalog, scenario.n_satellites, out)
    if not scenario.chains:
        out.append("scenario: no service chains")
        return out
    I = scenario.chain_length
    K = scenario.catalog.n_nf_types
    for j, chain in enumerate(scenario.chains):
        if len(chain) != I:
            out.append(f"chain {j}: length {len(chain)} differs from {I}")
        if len(set(chain.nfs)) != len(chain.nfs):
            out.append(f"chain {j}: duplicate NF in chain")
        for k in chain.nfs:
            if not 0 <= k < K:
                out.append(f"chain {j}: NF id {k} outside the catalog")
    U = scenario.n_terminals
    if scenario.association.shape != (U, scenario.n_satellites):
        out.append("scenario: association matrix shape mismatch")
        return out
    if scenario.requests.shape != (U, scenario.n_services):
        out.append("scenario: request matrix shape mismatch")
        return out
    if scenario.input_sizes.shape != (U, I):
        out.append("scenario: input_sizes shape mismatch")
        return out
    for u in range(U):
        n_assoc = int(scenario.association[u].sum())
        if n_assoc > 1:
            out.append(f"terminal {u}: multiple associations")
        elif n_assoc < 1:
            out.append(f"terminal {u}: no associated satellite")
        n_req = int(scenario.requests[u].sum())
        if n_req > 1:
            out.append(f"terminal {u}: multiple requested services")
        elif n_req < 1:
            out.append(f"terminal {u}: no requested service")
    if scenario.input_sizes.size and (scenario.input_sizes <= 0).any():
        out.append("scenario: input sizes must be strictly positive")
    if not 0.0 <= scenario.alpha <= 1.0:
        out.append("scenario: alpha outside [0, 1]")
    return out
