"""Independent reference computations used only by the tests."""

from __future__ import annotations

from itertools import product
from typing import Mapping, Sequence

import numpy as np

from hrasim.riskbn.network import BayesNet, ImpossibleEvidenceError, STATES


def _check_evidence(net, evidence):
    return {k: (STATES.index(s) if isinstance(s, str) else int(s)) for k, s in evidence.items()}


def enumerate_joint(net: BayesNet, query: Sequence[str], evidence: Mapping[str, int] | None = None
                    ) -> np.ndarray:
    """Posterior joint by summing the full joint table (exponential; small nets)."""
    ev = _check_evidence(net, evidence or {})
    ids = net.order
    m = len(ids)
    if m > 22:
        raise ValueError("too many nodes to enumerate")
    pos = {v: i for i, v in enumerate(ids)}
    idx = np.arange(2 ** m)
    # column i holds node i's state in every joint assignment
    col = [((idx >> (m - 1 - i)) & 1).astype(np.uint8) for i in range(m)]
    p = np.ones(2 ** m)
    for node in net.nodes:
        row = np.zeros(2 ** m, dtype=np.int64)
        for par in node.parents:
            row = 2 * row + col[pos[par]]
        p *= node.cpt[row, col[pos[node.id]]]
    mask = np.ones(2 ** m, dtype=bool)
    for v, s in ev.items():
        mask &= col[pos[v]] == s
    z = p[mask].sum()
    if z <= 0:
        raise ImpossibleEvidenceError("evidence has probability zero")
    out = np.zeros((2,) * len(query))
    for states in product((0, 1), repeat=len(query)):
        sel = mask.copy()
        for q, s in zip(query, states):
            sel &= col[pos[q]] == s
        out[states] = p[sel].sum() / z
    return out
