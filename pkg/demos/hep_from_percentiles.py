"""Quantify one procedure from expert percentiles instead of simulated data.

Run with ``python3 demos/hep_from_percentiles.py``.
"""

from hrasim.quantify import FittedDistribution, combine_hep, fit_percentiles, fmt3, p_t


def main():
    # required time: 5th percentile 4 s, 95th percentile 9 s
    # available time: lognormal with a median of about 20 s
    tavail = FittedDistribution.lognormal(3.0, 0.3)
    pc = 5e-3
    for family in ("normal", "lognormal", "gamma", "weibull"):
        treqd = fit_percentiles(family, (0.05, 4.0), (0.95, 9.0))
        pt = p_t(treqd, tavail)
        print(f"{family:<9} {treqd.describe():<48} Pt {fmt3(pt)}  HEP {fmt3(combine_hep(pc, pt))}")


if __name__ == "__main__":
    main()
