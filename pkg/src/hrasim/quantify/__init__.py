"""Time-failure quantification: duration fits, Pt convolution and HEP combination."""

from .convolution import QuadratureConfig, QuadratureError, adaptive_quad, combine_hep, p_t
from .distributions import (FAMILIES, DegenerateDataError, FittedDistribution, NoSolutionError,
                            distribution_from_spec, fit_mle, fit_percentiles)
from .procedure import (AllFamiliesExcluded, HepRecord, ProcedureResult, ScreeningRule, fmt3,
                        hep_report, quantify_procedure, records_from_report, report_json,
                        screen_fit, sensitivity_csv)

__all__ = [
    "QuadratureConfig", "QuadratureError", "adaptive_quad", "combine_hep", "p_t", "FAMILIES",
    "DegenerateDataError", "FittedDistribution", "NoSolutionError", "distribution_from_spec",
    "fit_mle", "fit_percentiles", "AllFamiliesExcluded", "HepRecord", "ProcedureResult",
    "ScreeningRule", "fmt3", "hep_report", "quantify_procedure", "records_from_report",
    "report_json", "screen_fit", "sensitivity_csv",
]
