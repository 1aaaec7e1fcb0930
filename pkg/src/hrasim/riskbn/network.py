"""Binary Bayesian networks: structure, exact inference and forward sampling.

Every node has the two states ``S1_failure`` (index 0) and ``S2_success``
(index 1). A CPT is an array of shape ``(2 ** k, 2)`` for ``k`` parents; the
row for a parent configuration is ``sum(state_i * 2 ** (k - 1 - i))``, so the
first parent is the most significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = ["STATES", "FAIL", "OK", "BnNode", "BayesNet", "ImpossibleEvidenceError", "infer",
           "infer_joint", "monte_carlo_forward", "or_gate_cpt", "prior_cpt"]

STATES = ("S1_failure", "S2_success")
FAIL, OK = 0, 1
_ROW_TOL = 1e-12


class ImpossibleEvidenceError(ValueError):
    """The evidence has probability zero under the network."""


def prior_cpt(p_fail: float) -> np.ndarray:
    return np.array([[p_fail, 1.0 - p_fail]])


def or_gate_cpt(k: int) -> np.ndarray:
    """Deterministic OR: fails iff at least one parent fails."""
    rows = np.zeros((2 ** k, 2))
    rows[:, OK] = 1.0
    rows[: 2 ** k - 1] = (1.0, 0.0)  # only the all-success row (last) succeeds
    return rows


@dataclass(frozen=True)
class BnNode:
    id: str
    parents: tuple[str, ...]
    cpt: np.ndarray

    def __post_init__(self):
        cpt = np.array(self.cpt, dtype=float)
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "cpt", cpt)
        k = len(self.parents)
        if cpt.shape != (2 ** k, 2):
            raise ValueError(f"{self.id}: CPT shape {cpt.shape} != {(2 ** k, 2)}")
        if np.any(cpt < 0) or np.any(np.abs(cpt.sum(1) - 1.0) > _ROW_TOL):
            raise ValueError(f"{self.id}: CPT rows must be distributions")
        if len(set(self.parents)) != k:
            raise ValueError(f"{self.id}: repeated parent")
        cpt.setflags(write=False)

    def p_fail(self, parent_states: Sequence[int] = ()) -> float:
        return float(self.cpt[_row(parent_states), FAIL])


def _row(states) -> int:
    r = 0
    for s in states:
        r = 2 * r + int(s)
    return r


class BayesNet:
    """An immutable DAG of binary nodes, stored in topological order."""

    def __init__(self, nodes: Sequence[BnNode]):
        by_id = {}
        for n in nodes:
            if n.id in by_id:
                raise ValueError(f"duplicate node id {n.id!r}")
            by_id[n.id] = n
        for n in nodes:
            for p in n.parents:
                if p not in by_id:
                    raise ValueError(f"{n.id}: unknown parent {p!r}")
        # Kahn's algorithm, ties broken by declaration order
        indeg = {n.id: len(n.parents) for n in nodes}
        children = {n.id: [] for n in nodes}
        for n in nodes:
            for p in n.parents:
                children[p].append(n.id)
        ready = [n.id for n in nodes if indeg[n.id] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(nodes):
            raise ValueError("network has a directed cycle")
        self._nodes = {v: by_id[v] for v in order}
        self._children = {v: tuple(children[v]) for v in order}

    @property
    def order(self) -> tuple[str, ...]:
        return tuple(self._nodes)

    @property
    def nodes(self) -> tuple[BnNode, ...]:
        return tuple(self._nodes.values())

    def __getitem__(self, node_id) -> BnNode:
        return self._nodes[node_id]

    def __contains__(self, node_id):
        return node_id in self._nodes

    def __len__(self):
        return len(self._nodes)

    @property
    def arcs(self) -> tuple[tuple[str, str], ...]:
        return tuple((p, n.id) for n in self._nodes.values() for p in n.parents)

    def children(self, node_id) -> tuple[str, ...]:
        return self._children[node_id]

    def ancestors(self, ids) -> set:
        seen, stack = set(), list(ids)
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(self._nodes[v].parents)
        return seen

    def has_path(self, src, dst) -> bool:
        return src in self.ancestors([dst]) and src != dst

    def replace(self, node: BnNode) -> "BayesNet":
        return BayesNet([node if n.id == node.id else n for n in self.nodes])

    # -- persistence
    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "states": list(STATES),
            "nodes": [{"id": n.id, "parents": list(n.parents), "cpt": n.cpt.tolist()}
                      for n in self.nodes],
            "arcs": [list(a) for a in self.arcs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "BayesNet":
        if d.get("schema_version") != 1:
            raise ValueError(f"unsupported network schema {d.get('schema_version')!r}")
        return cls([BnNode(n["id"], tuple(n["parents"]), np.array(n["cpt"])) for n in d["nodes"]])


# ---------------------------------------------------------------- inference

class _Factor:
    __slots__ = ("vars", "table")

    def __init__(self, vars_, table):
        self.vars = tuple(vars_)
        self.table = table

    def times(self, other: "_Factor") -> "_Factor":
        union = self.vars + tuple(v for v in other.vars if v not in self.vars)
        sym = {v: chr(97 + i) if i < 26 else chr(65 + i - 26) for i, v in enumerate(union)}
        spec = (f"{''.join(sym[v] for v in self.vars)},{''.join(sym[v] for v in other.vars)}"
                f"->{''.join(sym[v] for v in union)}")
        return _Factor(union, np.einsum(spec, self.table, other.table))

    def sum_out(self, var) -> "_Factor":
        i = self.vars.index(var)
        return _Factor(self.vars[:i] + self.vars[i + 1:], self.table.sum(axis=i))

    def fix(self, var, state) -> "_Factor":
        i = self.vars.index(var)
        return _Factor(self.vars[:i] + self.vars[i + 1:], np.take(self.table, state, axis=i))


def _node_factor(n: BnNode) -> _Factor:
    k = len(n.parents)
    return _Factor(n.parents + (n.id,), n.cpt.reshape((2,) * k + (2,)))


def _check_evidence(net: BayesNet, evidence: Mapping[str, int]):
    ev = {}
    for k, s in evidence.items():
        if k not in net:
            raise KeyError(f"evidence on unknown node {k!r}")
        s = STATES.index(s) if isinstance(s, str) else int(s)
        if s not in (FAIL, OK):
            raise ValueError(f"{k}: invalid state {s!r}")
        ev[k] = s
    return ev


def infer_joint(net: BayesNet, query: Sequence[str], evidence: Mapping[str, int] | None = None
                ) -> np.ndarray:
    """Exact posterior joint of ``query`` as an array of shape ``(2,) * len(query)``.

    Variable elimination over the ancestors of the query and evidence nodes
    (other nodes are barren and sum to one); elimination order is greedy on
    the size of the product factor.
    """
    ev = _check_evidence(net, evidence or {})
    query = tuple(query)
    for q in query:
        if q not in net:
            raise KeyError(f"unknown node {q!r}")
    if len(set(query)) != len(query):
        raise ValueError("repeated query node")
    clash = [q for q in query if q in ev]
    keep = net.ancestors(set(query) | set(ev))
    factors = []
    for n in net.nodes:
        if n.id in keep:
            f = _node_factor(n)
            for v, s in ev.items():
                if v in f.vars:
                    f = f.fix(v, s)
            factors.append(f)
    hidden = [v for v in net.order if v in keep and v not in ev and v not in query]
    while hidden:
        def cost(v):
            vs = set()
            for f in factors:
                if v in f.vars:
                    vs.update(f.vars)
            return len(vs)
        v = min(hidden, key=lambda x: (cost(x), net.order.index(x)))
        hidden.remove(v)
        touching = [f for f in factors if v in f.vars]
        factors = [f for f in factors if v not in f.vars]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod.times(f)
        factors.append(prod.sum_out(v))
    free = tuple(q for q in query if q not in ev)
    result = _Factor((), np.array(1.0))
    for f in factors:
        result = result.times(f)
    if free:
        result = _Factor(result.vars, np.transpose(result.table, [result.vars.index(q) for q in free]))
    z = float(result.table.sum())
    if z <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {dict(ev)} has probability zero")
    table = result.table / z
    if clash:
        # queried evidence nodes are certain
        full = np.zeros((2,) * len(query))
        idx = tuple(ev[q] if q in ev else slice(None) for q in query)
        full[idx] = table
        table = full
    return table


def infer(net: BayesNet, evidence: Mapping[str, int] | None, query: str) -> np.ndarray:
    """Posterior ``[P(S1_failure), P(S2_success)]`` of one node."""
    return infer_joint(net, (query,), evidence)


def monte_carlo_forward(net: BayesNet, n: int, seed: int = 0) -> dict:
    """Ancestral sampling. Returns ``{node: (failure_count, P_hat(S1))}``.

    A node fails when its uniform draw falls below the failure probability of
    its CPT row, so priors of exactly 0 or 1 are reproduced without error.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    states = {}
    out = {}
    for node in net.nodes:
        row = np.zeros(n, dtype=np.int64)
        for p in node.parents:
            row = 2 * row + states[p]
        pf = node.cpt[row, FAIL]
        s = np.where(rng.random(n) < pf, FAIL, OK)
        states[node.id] = s
        k = int(np.count_nonzero(s == FAIL))
        out[node.id] = (k, k / n)
    return out
