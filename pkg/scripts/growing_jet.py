"""Growing jet with free end compared with the steady fixed-domain center-line of the same parameters."""

import argparse

import numpy as np

from spinrod.runner import RunConfig, run_simulate, run_steady
from spinrod.verify import arclength, centerline, polyline_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/growing")
    ap.add_argument("--ds", type=float, default=1 / 80)
    args = ap.parse_args()
    for re in (100.0, 1.0):
        steady = run_steady(RunConfig(setup="b", dim=2, Re=re, Rb=1.0, eps=0.1, ds=args.ds, tEnd=200.0),
                            threshold=1e-8)
        rec = run_simulate(RunConfig(setup="a", dim=2, Re=re, Rb=1.0, eps=0.1, ds=args.ds, tEnd=1.0,
                                     snapshotEvery=int(round(0.25 / args.ds)),
                                     outputPath=f"{args.out}/Re{re:g}"))
        ref = centerline(steady.final, steady.params)
        for t, f in rec.snapshots[1:]:
            line = centerline(f, rec.params)
            keep = arclength(line) <= 1.0
            d = np.max(polyline_distance(line[keep], ref))
            print(f"Re={re:g} t={t:.2f}: max distance to steady curve {d:.4f}, end at {line[-1].round(4)}")


if __name__ == "__main__":
    main()
