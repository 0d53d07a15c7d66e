"""Binary linear model of the joint caching/offloading problem.

The nonlinear terms of the cost model are linearized with three
auxiliary variable families:

* ``z_u_k_s_k'_s'`` stands for the product ``y_u_k_s * y_u_k'_s'`` of two
  offloading variables (consecutive chain positions); rows C6-C8 pin it
  to that product for every binary combination.
* ``theta_u_i`` stands for the data-center handover indicator between
  chain positions ``i`` and ``i+1`` (exclusive-or of the two positions'
  satellite-service indicators); rows C9-C12 pin it.
* ``pi_u`` indicates that at least one position of terminal ``u`` runs
  at the data center; row C13 forces ``pi_u = 1`` whenever the count of
  data-center-served positions is nonzero, and the objective's positive
  coefficient pushes it to 0 otherwise.

``z`` variables are declared only for host pairs of *consecutive*
positions of each terminal's requested chain: products of any other
variable pair never appear in the objective, so the omitted variables
would be unconstrained padding.

Constraint families:
  C1  per-satellite CPU capacity          C6-C8   z product gadget
  C2  per-satellite storage capacity      C9-C12  theta xor gadget
  C3  serve only where cached             C13     data-center indicator
  C4  at most one host per (u, NF)
  C5  satellite service forms a prefix
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .costs import ScenarioEvaluator, dco_normalizers, hosts_for
from .model import Decision, Scenario

_MAX_LINE = 240


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # X | Y | Z | Theta | Pi
    index: tuple


@dataclass
class Constraint:
    name: str
    family: str  # C1 .. C13
    terms: Dict[str, float]
    sense: str  # <= | >= | =
    rhs: float

    def satisfied(self, assignment: Dict[str, float], tol: float = 1e-9) -> bool:
        lhs = sum(c * assignment[v] for v, c in self.terms.items())
        scale = max(1.0, abs(self.rhs))
        if self.sense == "<=":
            return lhs <= self.rhs + tol * scale
        if self.sense == ">=":
            return lhs >= self.rhs - tol * scale
        return abs(lhs - self.rhs) <= tol * scale


@dataclass
class IlpModel:
    """Variables, constraint rows, and linear objective (plus constant).

    The objective value at any feasible binary assignment equals the
    cost model's normalized total for the corresponding decision. Models
    built by :func:`build_model` also carry the scenario and its
    normalizers so the exact solver can branch on scenario structure;
    models re-read from LP text carry only the algebra.
    """

    variables: List[Variable]
    constraints: List[Constraint]
    objective: Dict[str, float]
    objective_constant: float
    scenario: Optional[Scenario] = None
    t_norm: Optional[np.ndarray] = None
    e_norm: Optional[np.ndarray] = None
    evaluator: Optional[ScenarioEvaluator] = None

    def variable_names(self) -> set:
        return {v.name for v in self.variables}

    def families(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for c in self.constraints:
            counts[c.family] = counts.get(c.family, 0) + 1
        return counts

    def kind_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for v in self.variables:
            counts[v.kind] = counts.get(v.kind, 0) + 1
        return counts

    def same_structure(self, other: "IlpModel") -> bool:
        if {(v.name, v.kind, v.index) for v in self.variables} != {
            (v.name, v.kind, v.index) for v in other.variables
        }:
            return False
        mine = {c.name: c for c in self.constraints}
        theirs = {c.name: c for c in other.constraints}
        if mine.keys() != theirs.keys():
            return False
        for name, c in mine.items():
            o = theirs[name]
            if c.family != o.family or c.sense != o.sense or c.rhs != o.rhs or c.terms != o.terms:
                return False
        return self.objective == other.objective and self.objective_constant == other.objective_constant


_KIND_BY_PREFIX = {"x": "X", "y": "Y", "z": "Z", "theta": "Theta", "pi": "Pi"}


def _var_from_name(name: str) -> Variable:
    parts = name.split("_")
    prefix = parts[0]
    if prefix not in _KIND_BY_PREFIX:
        raise ValueError(f"unrecognized variable name {name!r}")
    return Variable(name, _KIND_BY_PREFIX[prefix], tuple(int(p) for p in parts[1:]))


def build_model(scenario: Scenario) -> IlpModel:
    """Assemble variables, rows C1-C13, and the normalized-cost objective."""
    ev = ScenarioEvaluator(scenario)
    t_norm, e_norm = dco_normalizers(scenario, ev)
    U = scenario.n_terminals
    K = scenario.catalog.n_nf_types
    S = scenario.n_satellites

    variables: List[Variable] = []
    for k in range(K):
        for s in range(S):
            variables.append(Variable(f"x_{k}_{s}", "X", (k, s)))
    for u in range(U):
        for k in range(K):
            for s in range(S):
                variables.append(Variable(f"y_{u}_{k}_{s}", "Y", (u, k, s)))
    z_names: List[List[List[List[str]]]] = []  # [u][i][s][s'] -> name
    for u in range(U):
        chain = ev.chain[u]
        per_u = []
        for i in range(len(chain) - 1):
            k, kp = chain[i], chain[i + 1]
            per_i = []
            for s in range(S):
                per_s = []
                for sp in range(S):
                    name = f"z_{u}_{k}_{s}_{kp}_{sp}"
                    variables.append(Variable(name, "Z", (u, k, s, kp, sp)))
                    per_s.append(name)
                per_i.append(per_s)
            per_u.append(per_i)
        z_names.append(per_u)
    for u in range(U):
        for i in range(len(ev.chain[u]) - 1):
            variables.append(Variable(f"theta_{u}_{i}", "Theta", (u, i)))
    for u in range(U):
        variables.append(Variable(f"pi_{u}", "Pi", (u,)))

    constraints: List[Constraint] = []
    f = scenario.catalog.nf_allocation
    for s in range(S):
        terms = {f"y_{u}_{k}_{s}": float(f[k, s]) for u in range(U) for k in range(K)}
        if terms:
            constraints.append(Constraint(f"C1_{s}", "C1", terms, "<=", float(scenario.catalog.cpu_capacity[s])))
    for s in range(S):
        terms = {f"x_{k}_{s}": float(scenario.catalog.nf_size_bits[k]) for k in range(K)}
        constraints.append(Constraint(f"C2_{s}", "C2", terms, "<=", float(scenario.catalog.storage_capacity[s])))
    for u in range(U):
        for k in range(K):
            for s in range(S):
                constraints.append(
                    Constraint(f"C3_{u}_{k}_{s}", "C3", {f"y_{u}_{k}_{s}": 1.0, f"x_{k}_{s}": -1.0}, "<=", 0.0)
                )
    for u in range(U):
        for k in range(K):
            constraints.append(
                Constraint(f"C4_{u}_{k}", "C4", {f"y_{u}_{k}_{s}": 1.0 for s in range(S)}, "<=", 1.0)
            )

    def g_terms(u: int, i: int, coef: float, into: Dict[str, float]) -> None:
        k = ev.chain[u][i]
        for s in range(S):
            name = f"y_{u}_{k}_{s}"
            into[name] = into.get(name, 0.0) + coef

    for u in range(U):
        for i in range(len(ev.chain[u]) - 1):
            terms: Dict[str, float] = {}
            g_terms(u, i, 1.0, terms)
            g_terms(u, i + 1, -1.0, terms)
            constraints.append(Constraint(f"C5_{u}_{i}", "C5", terms, ">=", 0.0))

    for fam, builder in (
        ("C6", lambda z, y1, y2: ({z: 1.0, y1: -1.0}, "<=", 0.0)),
        ("C7", lambda z, y1, y2: ({z: 1.0, y2: -1.0}, "<=", 0.0)),
        ("C8", lambda z, y1, y2: ({z: 1.0, y1: -1.0, y2: -1.0}, ">=", -1.0)),
    ):
        for u in range(U):
            chain = ev.chain[u]
            for i in range(len(chain) - 1):
                k, kp = chain[i], chain[i + 1]
                for s in range(S):
                    for sp in range(S):
                        z = z_names[u][i][s][sp]
                        terms, sense, rhs = builder(z, f"y_{u}_{k}_{s}", f"y_{u}_{kp}_{sp}")
                        constraints.append(Constraint(f"{fam}_{u}_{k}_{s}_{kp}_{sp}", fam, dict(terms), sense, rhs))

    theta_rows = (
        ("C9", 1.0, -1.0, ">=", 0.0),  # theta >= g_i - g_{i+1}
        ("C10", -1.0, 1.0, ">=", 0.0),  # theta >= g_{i+1} - g_i
        ("C11", 1.0, 1.0, "<=", 2.0),  # theta <= 2 - g_i - g_{i+1}
        ("C12", -1.0, -1.0, "<=", 0.0),  # theta <= g_i + g_{i+1}
    )
    for fam, ci, cj, sense, rhs in theta_rows:
        for u in range(U):
            for i in range(len(ev.chain[u]) - 1):
                terms = {f"theta_{u}_{i}": 1.0}
                g_terms(u, i, -ci, terms)
                g_terms(u, i + 1, -cj, terms)
                constraints.append(Constraint(f"{fam}_{u}_{i}", fam, terms, sense, rhs))

    for u in range(U):
        I = len(ev.chain[u])
        # count of data-center positions <= I * pi  <=>  sum_i g_i + I*pi >= I
        terms = {f"pi_{u}": float(I)}
        for i in range(I):
            g_terms(u, i, 1.0, terms)
        constraints.append(Constraint(f"C13_{u}", "C13", terms, ">=", float(I)))

    objective: Dict[str, float] = {}
    constant = 0.0

    def add_obj(name: str, coef: float) -> None:
        if coef:
            objective[name] = objective.get(name, 0.0) + coef

    for u in range(U):
        chain = ev.chain[u]
        sizes = ev.sizes[u]
        cycles = ev.comp_cycles[u]
        I = len(chain)
        a = ev.assoc[u]
        wT = ev.alpha / float(t_norm[u])
        wE = ev.one_minus_alpha / float(e_norm[u])
        constant += wT * (sizes[0] / ev.r_u + ev.two_du_c + sizes[0] / ev.r_g + sum(c / ev.f_g for c in cycles))
        constant += wE * (ev.p_u * sizes[0] / ev.r_u + ev.p_g * sizes[0] / ev.r_g)
        for s in range(S):
            h_as = ev.hops[a][s]
            k1 = chain[0]
            first = f"y_{u}_{k1}_{s}"
            add_obj(first, (wT + wE * ev.p_s) * (sizes[0] * h_as / ev.r_s))  # reach the first host
            add_obj(first, wT * (h_as * ev.ds_c))
            add_obj(f"y_{u}_{chain[I - 1]}_{s}", wT * (h_as * ev.ds_c))  # return from the last host
            add_obj(first, -(wT + wE * ev.p_g) * (sizes[0] / ev.r_g))  # whole-chain downlink avoided
            for i in range(I):
                k = chain[i]
                fks = ev.f[k][s]
                name = f"y_{u}_{k}_{s}"
                add_obj(name, wT * (cycles[i] / fks))
                add_obj(name, -wT * (cycles[i] / ev.f_g))
                add_obj(name, wE * (ev.kappa * cycles[i] * fks * fks))
        for i in range(I - 1):
            for s in range(S):
                for sp in range(S):
                    h = ev.hops[s][sp]
                    if h:
                        z = z_names[u][i][s][sp]
                        add_obj(z, (wT + wE * ev.p_s) * (sizes[i + 1] * h / ev.r_s))
                        add_obj(z, wT * (h * ev.ds_c))
            add_obj(f"theta_{u}_{i}", (wT + wE * ev.p_g) * (sizes[i + 1] / ev.r_g))
        add_obj(f"pi_{u}", wT * ev.two_dg_c)

    return IlpModel(
        variables=variables,
        constraints=constraints,
        objective=objective,
        objective_constant=constant,
        scenario=scenario,
        t_norm=t_norm,
        e_norm=e_norm,
        evaluator=ev,
    )


def decision_assignment(model: IlpModel, decision: Decision) -> Dict[str, float]:
    """Full variable assignment induced by a decision.

    Auxiliaries are propagated from their definitions: products for z,
    exclusive-or for theta, and the any-data-center indicator for pi.
    """
    if model.scenario is None:
        raise ValueError("model carries no scenario (was it parsed from LP text?)")
    scenario = model.scenario
    assignment: Dict[str, float] = {}
    for v in model.variables:
        if v.kind == "X":
            k, s = v.index
            assignment[v.name] = float(decision.cached[k, s])
        elif v.kind == "Y":
            u, k, s = v.index
            assignment[v.name] = float(decision.served[u, k, s])
    ev = model.evaluator or ScenarioEvaluator(scenario)
    for u in range(scenario.n_terminals):
        hosts = hosts_for(scenario, decision, u)
        chain = ev.chain[u]
        for i in range(len(chain) - 1):
            k, kp = chain[i], chain[i + 1]
            for s in range(scenario.n_satellites):
                for sp in range(scenario.n_satellites):
                    y1 = decision.served[u, k, s]
                    y2 = decision.served[u, kp, sp]
                    assignment[f"z_{u}_{k}_{s}_{kp}_{sp}"] = float(int(y1) * int(y2))
            g_i = hosts[i] is not None
            g_j = hosts[i + 1] is not None
            assignment[f"theta_{u}_{i}"] = float(g_i != g_j)
        assignment[f"pi_{u}"] = float(any(h is None for h in hosts))
    return assignment


def objective_value(model: IlpModel, assignment: Dict[str, float]) -> float:
    return model.objective_constant + sum(c * assignment[v] for v, c in model.objective.items())


def violated_constraints(model: IlpModel, assignment: Dict[str, float], tol: float = 1e-9) -> List[str]:
    return [c.name for c in model.constraints if not c.satisfied(assignment, tol)]


def _write_terms(tokens: List[str], terms: Dict[str, float], order: Dict[str, int]) -> None:
    for name in sorted(terms, key=lambda n: order.get(n, len(order))):
        coef = terms[name]
        tokens.append("-" if coef < 0 else "+")
        tokens.append(repr(abs(float(coef))))
        tokens.append(name)


def _wrap(tokens: List[str]) -> List[str]:
    lines: List[str] = []
    cur = ""
    for tok in tokens:
        if cur and len(cur) + len(tok) + 1 > _MAX_LINE:
            lines.append(cur)
            cur = " " + tok
        else:
            cur = tok if not cur else f"{cur} {tok}"
    if cur:
        lines.append(cur)
    return [" " + l if not l.startswith(" ") else l for l in lines]


def export_lp(model: IlpModel) -> str:
    """Emit the model in LP text format (minimize / subject to / binary).

    Coefficients use ``repr`` so a parse of the emitted text reproduces
    the model bit-exactly; see :func:`parse_lp`.
    """
    order = {v.name: i for i, v in enumerate(model.variables)}
    out: List[str] = ["\\ satedge caching/offloading model", "Minimize"]
    tokens = ["obj:"]
    _write_terms(tokens, model.objective, order)
    if model.objective_constant or not model.objective:
        tokens.append("-" if model.objective_constant < 0 else "+")
        tokens.append(repr(abs(float(model.objective_constant))))
    out.extend(_wrap(tokens))
    out.append("Subject To")
    for c in model.constraints:
        tokens = [f"{c.name}:"]
        _write_terms(tokens, c.terms, order)
        tokens.append(c.sense)
        tokens.append(repr(float(c.rhs)))
        out.extend(_wrap(tokens))
    out.append("Binary")
    out.extend(_wrap([v.name for v in model.variables]))
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN_RE = re.compile(
    r"(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|=|\+|-|:)"
)


def _tokenize(text: str) -> List[str]:
    tokens = []
    for line in text.splitlines():
        line = line.split("\\")[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                if line[pos].isspace():
                    pos += 1
                    continue
                raise ValueError(f"cannot tokenize LP text at {line[pos:pos + 20]!r}")
            tokens.append(m.group(0))
            pos = m.end()
    return tokens


def _parse_linear(tokens: List[str], pos: int, stop: set) -> Tuple[Dict[str, float], float, int]:
    terms: Dict[str, float] = {}
    constant = 0.0
    sign = 1.0
    pending: Optional[float] = None
    while pos < len(tokens):
        tok = tokens[pos]
        if tok.lower() in stop or tok in ("<=", ">=", "="):
            break
        if tok == ":" or (pos + 1 < len(tokens) and tokens[pos + 1] == ":"):
            break
        if tok == "+":
            constant += sign * pending if pending is not None else 0.0
            pending, sign = None, 1.0
        elif tok == "-":
            constant += sign * pending if pending is not None else 0.0
            pending, sign = None, -1.0
        elif _TOKEN_RE.fullmatch(tok) and tok[0].isdigit() or tok.startswith("."):
            pending = float(tok)
        elif tok[0].isalpha():
            coef = sign * (pending if pending is not None else 1.0)
            terms[tok] = terms.get(tok, 0.0) + coef
            pending, sign = None, 1.0
        else:
            raise ValueError(f"unexpected token {tok!r} in linear expression")
        pos += 1
    if pending is not None:
        constant += sign * pending
    return terms, constant, pos


def parse_lp(text: str) -> IlpModel:
    """Parse LP text produced by :func:`export_lp` back into a model.

    The result carries the full algebra (variables, rows, objective) but
    no scenario; it supports structural comparison and assignment
    checking, not the structure-aware exact solver.
    """
    tokens = _tokenize(text)
    lowered = [t.lower() for t in tokens]

    def find(words: List[str], start: int = 0) -> int:
        for i in range(start, len(lowered) - len(words) + 1):
            if lowered[i : i + len(words)] == words:
                return i
        return -1

    i_min = find(["minimize"])
    i_st = find(["subject", "to"])
    i_bin = find(["binary"], i_st if i_st >= 0 else 0)
    i_end = find(["end"], i_bin if i_bin >= 0 else 0)
    if min(i_min, i_st, i_bin, i_end) < 0:
        raise ValueError("missing LP section (Minimize / Subject To / Binary / End)")

    # objective: "obj : <linear>"
    pos = i_min + 1
    if not (tokens[pos].isidentifier() and tokens[pos + 1] == ":"):
        raise ValueError("objective row must be named")
    objective, constant, pos = _parse_linear(tokens, pos + 2, {"subject"})

    constraints: List[Constraint] = []
    pos = i_st + 2
    while pos < i_bin:
        name = tokens[pos]
        if tokens[pos + 1] != ":":
            raise ValueError(f"constraint {name!r}: expected ':'")
        terms, shift, pos = _parse_linear(tokens, pos + 2, {"binary"})
        sense = tokens[pos]
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"constraint {name!r}: missing sense")
        rhs_terms, rhs_const, pos = _parse_linear(tokens, pos + 1, {"binary"})
        if rhs_terms:
            raise ValueError(f"constraint {name!r}: variables on the right-hand side are unsupported")
        family = name.split("_")[0]
        constraints.append(Constraint(name, family, terms, sense, rhs_const - shift))

    variables = [_var_from_name(tokens[p]) for p in range(i_bin + 1, i_end)]
    return IlpModel(
        variables=variables,
        constraints=constraints,
        objective=objective,
        objective_constant=constant,
        scenario=None,
    )
