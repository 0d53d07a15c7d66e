"""JSON persistence for configs, scenarios, decisions, and results.

Scenario files store powers in watts (already converted); generation
config files carry powers in dBW as usually tabulated. Hop counts are
not stored: they are recomputed from the link list on load.
"""
from __future__ import annotations

import dataclasses
import json
from typing import Any

import numpy as np

from .model import Decision, GenerationConfig, NfCatalog, Scenario, ServiceChain, Topology, topology_from_links

SCENARIO_FORMAT = "satedge-scenario-v1"
CONFIG_FORMAT = "satedge-config-v1"
DECISION_FORMAT = "satedge-decision-v1"


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def scenario_to_dict(scenario: Scenario) -> dict:
    topo = scenario.topology
    cat = scenario.catalog
    return {
        "format": SCENARIO_FORMAT,
        "alpha": scenario.alpha,
        "topology": {
            "n_satellites": topo.n_satellites,
            "links": sorted([int(a), int(b)] for a, b in topo.adjacency),
            "uplink_distance_m": topo.uplink_distance_m,
            "isl_hop_distance_m": topo.isl_hop_distance_m,
            "ground_distance_m": topo.ground_distance_m,
            "uplink_rate_bps": topo.uplink_rate_bps,
            "isl_rate_bps": topo.isl_rate_bps,
            "downlink_rate_bps": topo.downlink_rate_bps,
            "uplink_power_w": topo.uplink_power_w,
            "isl_power_w": topo.isl_power_w,
            "downlink_power_w": topo.downlink_power_w,
            "light_speed_mps": topo.light_speed_mps,
        },
        "catalog": {
            "cycles_per_bit": cat.cycles_per_bit.tolist(),
            "nf_size_bits": cat.nf_size_bits.tolist(),
            "cpu_capacity": cat.cpu_capacity.tolist(),
            "storage_capacity": cat.storage_capacity.tolist(),
            "nf_allocation": cat.nf_allocation.tolist(),
            "dc_allocation": cat.dc_allocation,
            "kappa": cat.kappa,
        },
        "chains": [list(chain.nfs) for chain in scenario.chains],
        "terminals": [
            {
                "satellite": scenario.assoc_satellite(u),
                "service": scenario.service_of(u),
                "input_sizes_bits": scenario.input_sizes[u].tolist(),
            }
            for u in range(scenario.n_terminals)
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    if data.get("format") != SCENARIO_FORMAT:
        raise ValueError(f"not a {SCENARIO_FORMAT} document")
    t = data["topology"]
    topology = topology_from_links(
        int(t["n_satellites"]),
        t["links"],
        uplink_distance_m=float(t["uplink_distance_m"]),
        isl_hop_distance_m=float(t["isl_hop_distance_m"]),
        ground_distance_m=float(t["ground_distance_m"]),
        uplink_rate_bps=float(t["uplink_rate_bps"]),
        isl_rate_bps=float(t["isl_rate_bps"]),
        downlink_rate_bps=float(t["downlink_rate_bps"]),
        uplink_power_w=float(t["uplink_power_w"]),
        isl_power_w=float(t["isl_power_w"]),
        downlink_power_w=float(t["downlink_power_w"]),
        light_speed_mps=float(t["light_speed_mps"]),
    )
    c = data["catalog"]
    catalog = NfCatalog(
        cycles_per_bit=np.asarray(c["cycles_per_bit"], dtype=np.float64),
        nf_size_bits=np.asarray(c["nf_size_bits"], dtype=np.float64),
        cpu_capacity=np.asarray(c["cpu_capacity"], dtype=np.float64),
        storage_capacity=np.asarray(c["storage_capacity"], dtype=np.float64),
        nf_allocation=np.asarray(c["nf_allocation"], dtype=np.float64),
        dc_allocation=float(c["dc_allocation"]),
        kappa=float(c["kappa"]),
    )
    chains = tuple(ServiceChain(tuple(ch)) for ch in data["chains"])
    terminals = data["terminals"]
    U = len(terminals)
    S = topology.n_satellites
    J = len(chains)
    I = len(chains[0]) if chains else 0
    association = np.zeros((U, S), dtype=np.int8)
    requests = np.zeros((U, J), dtype=np.int8)
    input_sizes = np.zeros((U, I), dtype=np.float64)
    for u, term in enumerate(terminals):
        association[u, int(term["satellite"])] = 1
        requests[u, int(term["service"])] = 1
        input_sizes[u, :] = term["input_sizes_bits"]
    return Scenario(
        topology=topology,
        catalog=catalog,
        chains=chains,
        association=association,
        requests=requests,
        input_sizes=input_sizes,
        alpha=float(data["alpha"]),
    )


def scenario_to_json(scenario: Scenario) -> str:
    return _dump(scenario_to_dict(scenario))


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))


def config_to_dict(config: GenerationConfig) -> dict:
    payload: dict = {"format": CONFIG_FORMAT}
    for f in dataclasses.fields(config):
        value: Any = getattr(config, f.name)
        if isinstance(value, tuple):
            value = list(value)
        payload[f.name] = value
    return payload


def config_from_dict(data: dict) -> GenerationConfig:
    if data.get("format") not in (None, CONFIG_FORMAT):
        raise ValueError(f"not a {CONFIG_FORMAT} document")
    known = {f.name for f in dataclasses.fields(GenerationConfig)}
    kwargs = {}
    for key, value in data.items():
        if key == "format":
            continue
        if key not in known:
            raise ValueError(f"unknown config field {key!r}")
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return GenerationConfig(**kwargs)


def config_to_json(config: GenerationConfig) -> str:
    return _dump(config_to_dict(config))


def config_from_json(text: str) -> GenerationConfig:
    return config_from_dict(json.loads(text))


def decision_to_dict(decision: Decision) -> dict:
    U, K, S = decision.served.shape
    return {
        "format": DECISION_FORMAT,
        "n_terminals": U,
        "n_nf_types": K,
        "n_satellites": S,
        "cached": sorted([int(k), int(s)] for k, s in np.argwhere(decision.cached)),
        "served": sorted([int(u), int(k), int(s)] for u, k, s in np.argwhere(decision.served)),
    }


def decision_from_dict(data: dict) -> Decision:
    if data.get("format") != DECISION_FORMAT:
        raise ValueError(f"not a {DECISION_FORMAT} document")
    U, K, S = int(data["n_terminals"]), int(data["n_nf_types"]), int(data["n_satellites"])
    cached = np.zeros((K, S), dtype=np.int8)
    served = np.zeros((U, K, S), dtype=np.int8)
    for k, s in data["cached"]:
        cached[k, s] = 1
    for u, k, s in data["served"]:
        served[u, k, s] = 1
    return Decision(cached=cached, served=served)


def decision_to_json(decision: Decision) -> str:
    return _dump(decision_to_dict(decision))


def decision_from_json(text: str) -> Decision:
    return decision_from_dict(json.loads(text))
