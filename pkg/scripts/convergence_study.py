"""Observed time-step orders of the iteration (dt_w) and of the direct solver (dt).

Prints successive-halving orders log2(e_h / e_{h/2}) for the converged w of
the iteration and for the direct solution at T, on theorem-scale data and on
a wider box where the nonlinearity is not negligible.
"""
import argparse
import math

from ks2d.constants import build_ledger, domain_for_eps_fraction
from ks2d.direct import DirectSolver
from ks2d.mild import SchemeConfig, run_scheme, theorem_initial_data
from ks2d.spectral import TWO_PI, Domain, ModeSplit, SpectralField, assemble, sup_wiener_norm, wiener_norm_array


def orders(errs):
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def dtw_study(init, led, levels, check, **kw):
    ws = []
    for n in levels:
        cfg = SchemeConfig(T=1.0, dt=1 / 1024, dt_w=2.0 ** -n, N=init.domain.N, **kw)
        ws.append(run_scheme(init, led, cfg, check=check).final.w)
    errs = []
    for coarse, fine in zip(ws, ws[1:]):
        step = (len(fine) - 1) // (len(coarse) - 1)
        errs.append(sup_wiener_norm(fine[::step] - coarse, led.rho, 1))
    return errs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--finest", type=int, default=9, help="finest dt_w is 2^-finest")
    args = p.parse_args()

    d, led = domain_for_eps_fraction(0.25, 0.1, 32)
    levels = list(range(4, args.finest + 1))
    errs = dtw_study(theorem_initial_data(led, d), led, levels, True)
    print("theorem data, dt_w levels", levels)
    print("  differences", " ".join(f"{e:.3e}" for e in errs))
    print("  orders     ", " ".join(f"{x:.4f}" for x in orders(errs)))

    wide = Domain(TWO_PI * 1.2, TWO_PI * 1.15, 16)
    init = ModeSplit(0.3, 0.05, 0.2, -0.04, SpectralField.from_modes(
        wide, {(1, 1): 0.05, (2, 1): -0.02, (1, 2): 0.03, (3, 0): 0.01}))
    wled = build_ledger(wide, 0.1)
    errs = dtw_study(init, wled, levels[:-1], False, max_iters=60, cauchy_tol=1e-13)
    print("wide box, dt_w levels", levels[:-1])
    print("  orders     ", " ".join(f"{x:.4f}" for x in orders(errs)))

    ends = [DirectSolver(wide, 2.0 ** -n).run(assemble(init), 1.0).coeffs[-1] for n in range(5, 11)]
    errs = [wiener_norm_array(a - b, 0.1, 0) for a, b in zip(ends, ends[1:])]
    print("direct solver, dt = 2^-5 .. 2^-10")
    print("  orders     ", " ".join(f"{x:.4f}" for x in orders(errs)))


if __name__ == "__main__":
    main()
