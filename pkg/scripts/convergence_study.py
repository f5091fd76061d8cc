"""Temporal self-convergence ladders for both set-ups; writes one CSV table per run."""

import argparse
from pathlib import Path

from spinrod.runner import RunConfig, run_converge


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    fixed = RunConfig(setup="b", dim=2, Re=1.0, Rb=1.0, eps=0.1, ds=1 / 80, tEnd=0.5, newtonTol=1e-12)
    growing = RunConfig(setup="a", dim=2, Re=1.0, Rb=1.0, eps=0.1, ds=0.025, tEnd=0.5, newtonTol=1e-12)
    for s in (1, 2):
        t = run_converge(fixed.replace(radauStages=s), "time", steps=[4e-3, 2e-3, 1e-3, 5e-4])
        (out / f"fixed_domain_s{s}.csv").write_text(t.to_csv())
        print(f"fixed domain, s={s}: fitted orders diff/alg = {t.fitted()[0]:.2f}/{t.fitted()[1]:.2f}")
        t = run_converge(growing.replace(radauStages=s), "time", steps=[0.025, 0.0125, 0.00625])
        (out / f"growing_domain_s{s}.csv").write_text(t.to_csv())
        print(f"growing domain, s={s}: fitted orders diff/alg = {t.fitted()[0]:.2f}/{t.fitted()[1]:.2f}")


if __name__ == "__main__":
    main()
