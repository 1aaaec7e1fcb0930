"""Per-procedure HEP quantification across candidate duration families."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .convolution import QuadratureConfig, combine_hep, p_t
from .distributions import FAMILIES, FittedDistribution, distribution_from_spec, fit_mle

__all__ = ["ScreeningRule", "HepRecord", "ProcedureResult", "AllFamiliesExcluded", "screen_fit",
           "quantify_procedure", "fmt3", "hep_report", "sensitivity_csv", "records_from_report",
           "report_json"]


class AllFamiliesExcluded(ValueError):
    def __init__(self, procedure, reasons):
        super().__init__(f"{procedure}: every candidate family was excluded: {reasons}")
        self.procedure, self.reasons = procedure, reasons


def fmt3(p: float) -> str:
    """Three significant figures in ``8.70e-3`` style."""
    m, e = f"{p:.2e}".split("e")
    return f"{m}e{int(e)}"


@dataclass(frozen=True)
class ScreeningRule:
    """Goodness screening: KS statistic and shape sanity bounds."""

    ks_max: float = 0.15
    shape_min: float = 1e-3
    shape_max: float = 1e3


@dataclass(frozen=True)
class HepRecord:
    procedure: str
    pc: float
    pt: float
    p_event: float
    treqd: FittedDistribution
    tavail: FittedDistribution

    def __post_init__(self):
        for name in ("pc", "pt", "p_event"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.p_event != combine_hep(self.pc, self.pt):
            raise ValueError("p_event must equal 1 - (1 - pc)(1 - pt)")

    @classmethod
    def build(cls, procedure, pc, treqd, tavail, quad: QuadratureConfig | None = None):
        pt = p_t(treqd, tavail, quad)
        return cls(procedure, pc, pt, combine_hep(pc, pt), treqd, tavail)


@dataclass
class ProcedureResult:
    procedure: str
    pc: float
    tavail: FittedDistribution
    records: dict  # family -> HepRecord
    fits: dict  # family -> FittedDistribution (including excluded)
    ks: dict
    excluded: dict = field(default_factory=dict)  # family -> reason

    def representative(self) -> HepRecord:
        """The retained family with the largest event probability (ties by
        family order)."""
        return max(self.records.values(), key=lambda r: r.p_event)


def screen_fit(data, dist: FittedDistribution, rule: ScreeningRule):
    """Return ``(ks_statistic, reason or None)``."""
    ks = float(stats.kstest(np.asarray(data, float), dist.frozen().cdf).statistic)
    if dist.shape is not None and not rule.shape_min <= dist.shape <= rule.shape_max:
        return ks, f"extreme shape parameter {dist.shape:.4g}"
    if ks > rule.ks_max:
        return ks, f"poor fit (KS statistic {ks:.3f} > {rule.ks_max})"
    return ks, None


def quantify_procedure(data, pc: float, tavail, families: Sequence[str] = FAMILIES, *,
                       procedure: str = "procedure", rule: ScreeningRule | None = None,
                       quad: QuadratureConfig | None = None) -> ProcedureResult:
    """Fit each family to the durations, screen the fits and build HEP records.

    ``tavail`` is a FittedDistribution or a config mapping understood by
    ``distribution_from_spec``.
    """
    rule = rule or ScreeningRule()
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValueError(f"{procedure}: empty dataset")
    if not families:
        raise ValueError(f"{procedure}: no candidate families given")
    for f in families:
        if f not in FAMILIES:
            raise ValueError(f"{procedure}: unknown family {f!r}")
    ta = tavail if isinstance(tavail, FittedDistribution) else distribution_from_spec(tavail)
    res = ProcedureResult(procedure, pc, ta, {}, {}, {})
    for fam in families:
        d = fit_mle(x, fam)
        res.fits[fam] = d
        ks, why = screen_fit(x, d, rule)
        res.ks[fam] = ks
        if why:
            res.excluded[fam] = why
        else:
            res.records[fam] = HepRecord.build(procedure, pc, d, ta, quad)
    if not res.records:
        raise AllFamiliesExcluded(procedure, res.excluded)
    return res


# ----------------------------------------------------------------- reporting

def hep_report(results: Sequence[ProcedureResult]) -> dict:
    procs = []
    for r in results:
        fams = {}
        for fam, d in r.fits.items():
            entry = {"fit": d.to_dict(), "spec": d.to_spec(), "ks": r.ks[fam]}
            if fam in r.records:
                rec = r.records[fam]
                entry.update(pt=rec.pt, p_event=rec.p_event,
                             display={"pt": fmt3(rec.pt), "p_event": fmt3(rec.p_event)})
            else:
                entry["excluded"] = r.excluded[fam]
            fams[fam] = entry
        rep = r.representative()
        procs.append({
            "procedure": r.procedure, "pc": r.pc, "tavail": r.tavail.to_dict(),
            "tavail_spec": r.tavail.to_spec(),
            "families": fams, "excluded": dict(r.excluded),
            "representative": {"family": rep.treqd.family, "pt": rep.pt, "p_event": rep.p_event,
                               "display": {"pc": fmt3(r.pc), "pt": fmt3(rep.pt),
                                           "p_event": fmt3(rep.p_event)}},
        })
    return {"schema_version": 1, "procedures": procs}


def records_from_report(report: Mapping) -> list[HepRecord]:
    """One representative HepRecord per procedure of a saved report."""
    out = []
    for p in report["procedures"]:
        rep = p["representative"]
        treqd = distribution_from_spec(p["families"][rep["family"]]["spec"])
        tavail = distribution_from_spec(p["tavail_spec"])
        out.append(HepRecord(p["procedure"], p["pc"], rep["pt"], rep["p_event"], treqd, tavail))
    return out


def sensitivity_csv(results: Sequence[ProcedureResult]) -> str:
    """Rows ``procedure, distribution, parameters, status, Pt, HEP``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["procedure", "distribution", "parameters", "status", "Pt", "HEP"])
    for r in results:
        for fam, d in r.fits.items():
            if fam in r.records:
                rec = r.records[fam]
                w.writerow([r.procedure, fam, d.describe(), "retained", fmt3(rec.pt), fmt3(rec.p_event)])
            else:
                w.writerow([r.procedure, fam, d.describe(), f"excluded: {r.excluded[fam]}", "", ""])
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
