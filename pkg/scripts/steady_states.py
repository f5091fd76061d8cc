"""Long-time runs of the fixed-domain jet until the steady residual drops below a threshold."""

import argparse

from spinrod.runner import RunConfig, run_steady


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/steady")
    ap.add_argument("--threshold", type=float, default=1e-8)
    args = ap.parse_args()
    for re, rb in ((1.0, 1.0), (1.0, 0.1)):
        cfg = RunConfig(setup="b", dim=2, Re=re, Rb=rb, eps=0.1, ds=1 / 80, tEnd=50.0, snapshotEvery=100,
                        outputPath=f"{args.out}/Re{re:g}_Rb{rb:g}")
        rec = run_steady(cfg, args.threshold)
        u_out = rec.final[-1, 1]
        print(f"Re={re:g} Rb={rb:g}: reached={rec.reached_threshold} at t={rec.t_final:.2f}, "
              f"outflow speed {u_out:.4f}, {rec.steps} steps")


if __name__ == "__main__":
    main()
