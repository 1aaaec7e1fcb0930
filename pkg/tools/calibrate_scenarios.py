"""Refit the shared perceptual-motor constants and write them into the shipped scenarios.

    python tools/calibrate_scenarios.py [--n 2000]

Targets are the ``reference.<segment>.simulated_mean`` entries of each file.
"""

import argparse
import re
from importlib import resources

from hrasim.cogsim import builtin_scenario
from hrasim.cogsim.calibrate import calibrate
from hrasim.cogsim.scenario import CALIBRATED

PRIOR = dict(motor_press=0.5, speech=1.6, visual_encode=0.35, aural_encode=0.6)
NAMES = ("exp1", "exp2", "exp3")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    args = ap.parse_args()
    scs = [builtin_scenario(n) for n in NAMES]
    targets = {sc.id: {s: sc.reference[s]["simulated_mean"] for s in sc.task.segments} for sc in scs}
    c = calibrate(scs, targets, PRIOR, n=args.n)
    print({k: round(v, 4) for k, v in c.items()})
    root = resources.files("hrasim.data").joinpath("scenarios")
    for name in NAMES:
        path = root.joinpath(f"{name}.yaml")
        text = path.read_text()
        for k in CALIBRATED:
            text = re.sub(rf"(\n  {k}: )[0-9.]+", rf"\g<1>{c[k]:.4f}", text)
        with open(str(path), "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
