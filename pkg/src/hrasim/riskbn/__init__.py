"""Binary Bayesian networks for ranking contributors to an event failure."""

from .network import (FAIL, OK, STATES, BayesNet, BnNode, ImpossibleEvidenceError, infer, infer_joint,
                      monte_carlo_forward, or_gate_cpt, prior_cpt)
from .scoring import (OVERALL, build_from_heps, influence_strength, node_influence, ranking,
                      ranking_csv, sensitivity_max, series_failure)

__all__ = [
    "FAIL", "OK", "STATES", "BayesNet", "BnNode", "ImpossibleEvidenceError", "infer", "infer_joint",
    "monte_carlo_forward", "or_gate_cpt", "prior_cpt", "OVERALL", "build_from_heps",
    "influence_strength", "node_influence", "ranking", "ranking_csv", "sensitivity_max",
    "series_failure",
]
