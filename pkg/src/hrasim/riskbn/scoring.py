"""Event networks built from HEP records, arc influence and node sensitivity."""

from __future__ import annotations

import csv
import io
from itertools import product
from typing import Sequence

import numpy as np

from ..dataset import fmt_float
from .network import FAIL, OK, BayesNet, BnNode, ImpossibleEvidenceError, infer, infer_joint, \
    or_gate_cpt, prior_cpt

__all__ = ["OVERALL", "build_from_heps", "series_failure", "influence_strength", "sensitivity_max",
           "node_influence", "ranking", "ranking_csv"]

OVERALL = "Overall"


def build_from_heps(records: Sequence) -> BayesNet:
    """Roots ``Pc:<proc>`` and ``Pt:<proc>`` feed an OR node ``<proc>``; all
    procedure nodes feed the OR node ``Overall``."""
    if not records:
        raise ValueError("need at least one HEP record")
    procs = [r.procedure for r in records]
    if len(set(procs)) != len(procs):
        raise ValueError(f"duplicate procedure ids in {procs}")
    nodes = []
    for r in records:
        pc, pt = f"Pc:{r.procedure}", f"Pt:{r.procedure}"
        nodes += [BnNode(pc, (), prior_cpt(r.pc)), BnNode(pt, (), prior_cpt(r.pt)),
                  BnNode(r.procedure, (pc, pt), or_gate_cpt(2))]
    nodes.append(BnNode(OVERALL, tuple(procs), or_gate_cpt(len(procs))))
    return BayesNet(nodes)


def series_failure(p_events) -> float:
    """``1 - prod(1 - p_i)``: failure of a series system of independent parts."""
    return 1.0 - float(np.prod([1.0 - p for p in p_events]))


def influence_strength(net: BayesNet, arc) -> float:
    """Weighted average total-variation distance along ``arc = (parent, child)``.

    For each configuration of the child's other parents, the distance between
    the child's CPT rows with the arc parent failed and succeeded is weighted
    by the prior joint probability of that configuration.
    """
    parent, child = arc
    node = net[child]
    if parent not in node.parents:
        raise ValueError(f"no arc {parent} -> {child}")
    i = node.parents.index(parent)
    others = node.parents[:i] + node.parents[i + 1:]
    w = infer_joint(net, others) if others else np.array(1.0)
    score = 0.0
    for cfg in product((FAIL, OK), repeat=len(others)):
        full = list(cfg)
        rows = []
        for s in (FAIL, OK):
            states = full[:i] + [s] + full[i:]
            rows.append(node.cpt[_row(states)])
        tv = 0.5 * float(np.abs(rows[0] - rows[1]).sum())
        score += float(w[cfg]) * tv
    return score


def _row(states) -> int:
    r = 0
    for s in states:
        r = 2 * r + int(s)
    return r


def _p_target(net, target, evidence=None) -> float:
    return float(infer(net, evidence or {}, target)[FAIL])


def sensitivity_max(net: BayesNet, target: str, node: str) -> float:
    """Largest relative change of ``P(target = S1)`` over the node's extremes.

    Root nodes have their failure prior swept to 0 and 1; other nodes are
    clamped to each state as evidence (states with zero probability are
    skipped). The result is ``max |P - P_base| / P_base``.
    """
    if node == target:
        raise ValueError("node must differ from the target")
    base = _p_target(net, target)
    if base == 0.0:
        raise ValueError(f"baseline P({target}=S1) is zero; relative change undefined")
    if not net.has_path(node, target):
        return 0.0
    n = net[node]
    values = []
    if not n.parents:
        for p in (0.0, 1.0):
            values.append(_p_target(net.replace(BnNode(node, (), prior_cpt(p))), target))
    else:
        for s in (FAIL, OK):
            try:
                values.append(_p_target(net, target, {node: s}))
            except ImpossibleEvidenceError:
                continue
    return max(abs(v - base) for v in values) / base


def node_influence(net: BayesNet, node: str) -> float:
    """Strongest influence over the node's outgoing arcs (0 for leaves)."""
    return max((influence_strength(net, (node, c)) for c in net.children(node)), default=0.0)


def ranking(net: BayesNet, target: str = OVERALL) -> list[tuple[str, float, float]]:
    """``(node, influence, sensitivity)`` for every non-target node, sorted by
    sensitivity, then influence (both descending), then id."""
    rows = [(v, node_influence(net, v), sensitivity_max(net, target, v))
            for v in net.order if v != target]
    return sorted(rows, key=lambda r: (-r[2], -r[1], r[0]))


def ranking_csv(net: BayesNet, target: str = OVERALL) -> str:
    buf = io.StringIO()
    buf.write(f"# P({target}=S1)={fmt_float(_p_target(net, target))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "influence", "sensitivity"])
    for v, inf, sens in ranking(net, target):
        w.writerow([v, fmt_float(inf), fmt_float(sens)])
    return buf.getvalue()
