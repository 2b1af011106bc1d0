"""Level-set sweep of the two-mode model for several eps / eps_star ratios.

Writes one CSV row per (ratio, axis) with the largest G_t found on the level
set under the four extreme forcings.
"""
import argparse
import csv
import sys

from ks2d.constants import domain_for_eps_fraction
from ks2d.toy import ToySystem, level_set_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ratios", type=float, nargs="+", default=[0.01, 0.1, 0.25, 0.5, 0.9, 2.0, 10.0])
    p.add_argument("--points", type=int, default=10_000)
    args = p.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["ratio", "axis", "eps", "max_Gdot", "n_nonnegative"])
    for ratio in args.ratios:
        _, led = domain_for_eps_fraction(ratio, 0.1, 8)
        for axis in (1, 2):
            rep = level_set_sweep(ToySystem.from_ledger(led, axis), args.points)
            w.writerow([ratio, axis, f"{led.eps:.6e}", f"{rep.max_Gdot:.6e}", rep.n_nonnegative])


if __name__ == "__main__":
    main()
