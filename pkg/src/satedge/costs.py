"""Latency, energy, total-cost, and feasibility evaluation.

Every quantity is derived from a scenario plus a decision. The latency
of a terminal's request decomposes into: uplink round trip (payload
transmission plus two-way propagation to the associated satellite),
inter-satellite transfer (transmission and propagation along hop paths
between consecutive hosting satellites, including reaching the first
host and returning from the last), on-satellite compute time, and the
data-center leg (downlink transmission of the payload crossing over to
the ground, ground compute, and two-way ground propagation charged once
if any position runs at the data center).

Energy charges each transmission term at its link's transmit power and
each satellite-hosted computation at ``kappa * cycles * f^2`` (the
dynamic-voltage-frequency-scaling power law ``kappa * f^3`` times the
compute time). Data-center compute energy is out of scope by model
assumption.

A decision must serve a *prefix* of each chain on satellites: once a
position falls to the data center, all later positions do too. The
downlink accounting is only meaningful under that rule, so evaluation
of a decision violating it raises :class:`DcPrefixError` instead of
returning a mispriced total.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import Decision, Scenario

CAPACITY_RTOL = 1e-9

# positions of the fields in the tuple returned by ScenarioEvaluator._eval
_F_UP_TX, _F_UP_RT, _F_ISL_TX, _F_ISL_PROP, _F_SAT_COMP = range(5)
_F_G_TX, _F_G_COMP, _F_G_PROP, _F_T = range(5, 9)
_F_UP_E, _F_ISL_E, _F_COMP_E, _F_DOWN_E, _F_E = range(9, 14)


class DcPrefixError(ValueError):
    """A satellite-served chain position follows a data-center-served one."""

    def __init__(self, terminal: int, position: int):
        self.terminal = terminal
        self.position = position
        super().__init__(
            f"terminal {terminal}: position {position} is satellite-served "
            f"after an earlier position fell to the data center"
        )


@dataclass(frozen=True)
class TerminalCost:
    """Per-terminal latency/energy components (seconds / joules)."""

    uplink_transmission: float
    uplink_rt: float
    isl_transmission: float
    isl_propagation: float
    sat_compute: float
    ground_transmission: float
    ground_compute: float
    ground_propagation: float
    total_latency: float
    uplink_energy: float
    isl_energy: float
    compute_energy: float
    downlink_energy: float
    total_energy: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class CostBreakdown:
    """All terminals' components plus scenario aggregates.

    ``normalized_total`` is the weighted sum over terminals of latency
    and energy ratios against the supplied normalizers; with per-terminal
    normalization and the all-data-center decision it equals the number
    of terminals exactly (1.0 per terminal).
    """

    terminals: tuple
    total_latency: float
    total_energy: float
    normalized_total: float
    normalized_per_terminal: float

    def to_dict(self) -> dict:
        return {
            "terminals": [t.to_dict() for t in self.terminals],
            "total_latency": self.total_latency,
            "total_energy": self.total_energy,
            "normalized_total": self.normalized_total,
            "normalized_per_terminal": self.normalized_per_terminal,
        }


@dataclass(frozen=True)
class Violation:
    constraint: str  # C1 .. C5
    indices: tuple
    detail: str

    def to_dict(self) -> dict:
        return {"constraint": self.constraint, "indices": list(self.indices), "detail": self.detail}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def constraints(self) -> set:
        return {v.constraint for v in self.violations}

    def to_dict(self) -> dict:
        return {"feasible": self.ok, "violations": [v.to_dict() for v in self.violations]}

    def __str__(self) -> str:
        if self.ok:
            return "feasible (no constraint violations)"
        lines = [f"{len(self.violations)} constraint violation(s):"]
        lines += [f"  {v.constraint}{v.indices}: {v.detail}" for v in self.violations]
        return "\n".join(lines)


class ScenarioEvaluator:
    """Precomputed per-terminal views for fast repeated cost evaluation.

    The public cost functions build one of these per call; solvers keep
    one around and evaluate thousands of host tuples through it. A host
    tuple assigns each chain position a satellite index or ``None`` for
    the data center.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        topo = scenario.topology
        cat = scenario.catalog
        self.alpha = float(scenario.alpha)
        self.one_minus_alpha = 1.0 - self.alpha
        self.hops = [[int(h) for h in row] for row in topo.hops]
        self.f = [[float(x) for x in row] for row in cat.nf_allocation]
        self.f_g = float(cat.dc_allocation)
        self.kappa = float(cat.kappa)
        self.r_u = float(topo.uplink_rate_bps)
        self.r_s = float(topo.isl_rate_bps)
        self.r_g = float(topo.downlink_rate_bps)
        self.p_u = float(topo.uplink_power_w)
        self.p_s = float(topo.isl_power_w)
        self.p_g = float(topo.downlink_power_w)
        c = float(topo.light_speed_mps)
        self.two_du_c = 2.0 * float(topo.uplink_distance_m) / c
        self.ds_c = float(topo.isl_hop_distance_m) / c
        self.two_dg_c = 2.0 * float(topo.ground_distance_m) / c
        self.assoc = [scenario.assoc_satellite(u) for u in range(scenario.n_terminals)]
        self.chain = [scenario.chain_of(u).nfs for u in range(scenario.n_terminals)]
        self.sizes = [tuple(float(x) for x in scenario.input_sizes[u]) for u in range(scenario.n_terminals)]
        # cycles demanded by position i of terminal u's chain
        cyc = [float(x) for x in cat.cycles_per_bit]
        self.comp_cycles = [
            tuple(cyc[k] * l for k, l in zip(self.chain[u], self.sizes[u]))
            for u in range(scenario.n_terminals)
        ]

    def check_dc_prefix(self, u: int, hosts: Sequence[Optional[int]]) -> None:
        seen_dc = False
        for i, h in enumerate(hosts):
            if h is None:
                seen_dc = True
            elif seen_dc:
                raise DcPrefixError(u, i)

    def _eval(self, u: int, hosts: Sequence[Optional[int]]) -> tuple:
        chain = self.chain[u]
        sizes = self.sizes[u]
        cycles = self.comp_cycles[u]
        n = len(chain)
        a = self.assoc[u]
        hrow_a = self.hops[a]

        up_tx = sizes[0] / self.r_u
        up_rt = up_tx + self.two_du_c

        isl_tx = 0.0
        isl_prop = 0.0
        h0 = hosts[0]
        if h0 is not None:
            h = hrow_a[h0]
            if h:
                isl_tx += sizes[0] * h / self.r_s
                isl_prop += h * self.ds_c
        for i in range(n - 1):
            hi = hosts[i]
            hj = hosts[i + 1]
            if hi is not None and hj is not None:
                h = self.hops[hi][hj]
                if h:
                    isl_tx += sizes[i + 1] * h / self.r_s
                    isl_prop += h * self.ds_c
        hl = hosts[n - 1]
        if hl is not None:
            h = hrow_a[hl]
            if h:
                isl_prop += h * self.ds_c

        sat_comp = 0.0
        comp_e = 0.0
        g_comp = 0.0
        any_dc = False
        for i in range(n):
            hi = hosts[i]
            cyc = cycles[i]
            if hi is None:
                any_dc = True
                g_comp += cyc / self.f_g
            else:
                fks = self.f[chain[i]][hi]
                sat_comp += cyc / fks
                comp_e += self.kappa * cyc * fks * fks

        g_tx = 0.0
        if hosts[0] is None:
            g_tx += sizes[0] / self.r_g
        for i in range(n - 1):
            if (hosts[i] is None) != (hosts[i + 1] is None):
                g_tx += sizes[i + 1] / self.r_g
        g_prop = self.two_dg_c if any_dc else 0.0

        total_latency = up_rt + isl_tx + isl_prop + sat_comp + g_tx + g_comp + g_prop
        up_e = self.p_u * up_tx
        isl_e = self.p_s * isl_tx
        down_e = self.p_g * g_tx
        total_energy = up_e + isl_e + down_e + comp_e
        return (
            up_tx,
            up_rt,
            isl_tx,
            isl_prop,
            sat_comp,
            g_tx,
            g_comp,
            g_prop,
            total_latency,
            up_e,
            isl_e,
            comp_e,
            down_e,
            total_energy,
        )

    def components(self, u: int, hosts: Sequence[Optional[int]], require_prefix: bool = True) -> TerminalCost:
        if require_prefix:
            self.check_dc_prefix(u, hosts)
        return TerminalCost(*self._eval(u, hosts))

    def latency_energy(self, u: int, hosts: Sequence[Optional[int]]) -> tuple:
        self.check_dc_prefix(u, hosts)
        vals = self._eval(u, hosts)
        return vals[_F_T], vals[_F_E]

    def weighted_cost(self, u: int, hosts: Sequence[Optional[int]], t_norm: float, e_norm: float) -> float:
        t, e = self.latency_energy(u, hosts)
        return self.alpha * (t / t_norm) + self.one_minus_alpha * (e / e_norm)

    def dc_hosts(self, u: int) -> tuple:
        return (None,) * len(self.chain[u])


def hosts_for(scenario: Scenario, decision: Decision, u: int) -> tuple:
    """Chain-position host tuple of terminal ``u`` under a decision.

    Raises ``ValueError`` when a position is served by more than one
    satellite (such decisions are malformed for cost evaluation; use
    :func:`check_feasibility` to diagnose them).
    """
    chain = scenario.chain_of(u).nfs
    hosts = []
    for i, k in enumerate(chain):
        row = decision.served[u, k]
        picked = np.flatnonzero(row)
        if picked.size > 1:
            raise ValueError(f"terminal {u}, NF {k}: served by {picked.size} satellites")
        hosts.append(int(picked[0]) if picked.size else None)
    return tuple(hosts)


def uplink_roundtrip(scenario: Scenario, u: int) -> float:
    """Uplink transmission plus two-way terminal-satellite propagation."""
    ev = ScenarioEvaluator(scenario)
    vals = ev._eval(u, ev.dc_hosts(u))
    return vals[_F_UP_RT]


def isl_costs(scenario: Scenario, decision: Decision, u: int) -> tuple:
    """(transmission, propagation) seconds on inter-satellite links."""
    ev = ScenarioEvaluator(scenario)
    vals = ev._eval(u, hosts_for(scenario, decision, u))
    return vals[_F_ISL_TX], vals[_F_ISL_PROP]


def satellite_compute_delay(scenario: Scenario, decision: Decision, u: int) -> float:
    ev = ScenarioEvaluator(scenario)
    return ev._eval(u, hosts_for(scenario, decision, u))[_F_SAT_COMP]


def ground_costs(scenario: Scenario, decision: Decision, u: int) -> tuple:
    """(transmission, compute, propagation) seconds on the data-center leg."""
    ev = ScenarioEvaluator(scenario)
    hosts = hosts_for(scenario, decision, u)
    ev.check_dc_prefix(u, hosts)
    vals = ev._eval(u, hosts)
    return vals[_F_G_TX], vals[_F_G_COMP], vals[_F_G_PROP]


def total_latency(scenario: Scenario, decision: Decision, u: int) -> float:
    ev = ScenarioEvaluator(scenario)
    hosts = hosts_for(scenario, decision, u)
    ev.check_dc_prefix(u, hosts)
    return ev._eval(u, hosts)[_F_T]


def total_energy(scenario: Scenario, decision: Decision, u: int) -> float:
    ev = ScenarioEvaluator(scenario)
    hosts = hosts_for(scenario, decision, u)
    ev.check_dc_prefix(u, hosts)
    return ev._eval(u, hosts)[_F_E]


def dco_normalizers(scenario: Scenario, evaluator: Optional[ScenarioEvaluator] = None) -> tuple:
    """Per-terminal (latency, energy) of the all-data-center decision.

    These are the canonical normalization factors: any decision's cost is
    reported relative to serving every request at the data center.
    """
    ev = evaluator or ScenarioEvaluator(scenario)
    t_norm = np.empty(scenario.n_terminals)
    e_norm = np.empty(scenario.n_terminals)
    for u in range(scenario.n_terminals):
        vals = ev._eval(u, ev.dc_hosts(u))
        t_norm[u] = vals[_F_T]
        e_norm[u] = vals[_F_E]
    return t_norm, e_norm


def total_cost(
    scenario: Scenario,
    decision: Decision,
    normalizers: Optional[tuple] = None,
    granularity: str = "per-terminal",
) -> float:
    """Weighted normalized total cost of a decision.

    ``normalizers`` is the (latency, energy) pair of per-terminal arrays
    from :func:`dco_normalizers`; omitted, they are computed on the fly.
    ``granularity`` selects per-terminal ratios (default) or a single
    aggregate ratio over summed latency/energy; both yield exactly the
    number of terminals for the all-data-center decision.
    """
    return evaluate(scenario, decision, normalizers, granularity).normalized_total


def evaluate(
    scenario: Scenario,
    decision: Decision,
    normalizers: Optional[tuple] = None,
    granularity: str = "per-terminal",
) -> CostBreakdown:
    """Full cost breakdown of a decision against a scenario."""
    if granularity not in ("per-terminal", "aggregate"):
        raise ValueError(f"unknown normalization granularity {granularity!r}")
    ev = ScenarioEvaluator(scenario)
    if normalizers is None:
        normalizers = dco_normalizers(scenario, ev)
    t_norm, e_norm = normalizers
    t_norm = np.asarray(t_norm, dtype=np.float64)
    e_norm = np.asarray(e_norm, dtype=np.float64)
    U = scenario.n_terminals
    if U and ((t_norm <= 0).any() or (e_norm <= 0).any()):
        raise ValueError("normalizers must be strictly positive (degenerate scenario)")
    terminals = []
    for u in range(U):
        hosts = hosts_for(scenario, decision, u)
        ev.check_dc_prefix(u, hosts)
        terminals.append(TerminalCost(*ev._eval(u, hosts)))
    total_lat = float(sum(t.total_latency for t in terminals))
    total_en = float(sum(t.total_energy for t in terminals))
    alpha = ev.alpha
    if granularity == "per-terminal":
        delta = 0.0
        for u, t in enumerate(terminals):
            delta += alpha * (t.total_latency / float(t_norm[u])) + ev.one_minus_alpha * (
                t.total_energy / float(e_norm[u])
            )
    else:
        if U:
            delta = U * (
                alpha * (total_lat / float(t_norm.sum())) + ev.one_minus_alpha * (total_en / float(e_norm.sum()))
            )
        else:
            delta = 0.0
    return CostBreakdown(
        terminals=tuple(terminals),
        total_latency=total_lat,
        total_energy=total_en,
        normalized_total=delta,
        normalized_per_terminal=(delta / U) if U else 0.0,
    )


def check_feasibility(scenario: Scenario, decision: Decision) -> FeasibilityReport:
    """Report every violated placement constraint.

    C1: per-satellite CPU allocation within capacity.
    C2: per-satellite cached NF sizes within storage capacity.
    C3: a request may only be served where its NF is cached.
    C4: at most one serving satellite per (terminal, NF).
    C5: satellite-served chain positions form a prefix (no satellite
        service after a data-center-served position).
    """
    cat = scenario.catalog
    out = []
    served = decision.served.astype(np.float64)
    cached = decision.cached.astype(np.float64)
    U, K, S = served.shape

    cpu_load = (cat.nf_allocation[None, :, :] * served).sum(axis=(0, 1)) if U else np.zeros(S)
    for s in range(S):
        cap = float(cat.cpu_capacity[s])
        if cpu_load[s] > cap * (1.0 + CAPACITY_RTOL):
            out.append(
                Violation("C1", (s,), f"CPU allocation {cpu_load[s]:.6g} cycles/s exceeds capacity {cap:.6g}")
            )

    storage = (cat.nf_size_bits[:, None] * cached).sum(axis=0)
    for s in range(S):
        cap = float(cat.storage_capacity[s])
        if storage[s] > cap * (1.0 + CAPACITY_RTOL):
            out.append(Violation("C2", (s,), f"cached {storage[s]:.6g} bits exceed storage {cap:.6g}"))

    bad = np.argwhere(decision.served > decision.cached[None, :, :])
    for u, k, s in bad:
        out.append(Violation("C3", (int(u), int(k), int(s)), "served on a satellite that does not cache the NF"))

    multi = np.argwhere(decision.served.sum(axis=2) > 1)
    for u, k in multi:
        out.append(Violation("C4", (int(u), int(k)), "served by more than one satellite"))

    for u in range(U):
        chain = scenario.chain_of(u).nfs
        on_sat = [bool(decision.served[u, k].any()) for k in chain]
        for i in range(len(chain) - 1):
            if not on_sat[i] and on_sat[i + 1]:
                out.append(
                    Violation(
                        "C5",
                        (u, i + 1),
                        "satellite-served position follows a data-center-served one",
                    )
                )
    return FeasibilityReport(tuple(out))
