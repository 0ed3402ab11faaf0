"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 5] [--csv out.csv]
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from censcore import kernels


def cases(n, rng):
    alpha = rng.uniform(0.3, 8.0, n)
    x = rng.gamma(alpha, 1.0)
    members = rng.gamma(2.0, 3.0, (n // 20, 51))
    t_ens = rng.gamma(2.0, 3.0, n // 20)
    p = rng.uniform(size=n)
    t = rng.gamma(2.0, 2.0, n)
    iso_vals = rng.gamma(2.0, 2.0, 2000)
    iso_offsets = np.arange(0, 2001, 4, dtype=np.int64)
    return {
        "reg_lower_gamma": lambda b: kernels.reg_lower_gamma(alpha, x, backend=b),
        "gamma_cdf_pdf_integral": lambda b: kernels.gamma_cdf_pdf_integral(alpha, x, backend=b),
        "ensemble_twcrps (m=51)": lambda b: kernels.ensemble_twcrps(members, t_ens, 12.0, 50.0, backend=b),
        "concordance_counts": lambda b: kernels.concordance_counts(p, t, 12.0, backend=b),
        "minmax_isotonic (500 blocks)": lambda b: kernels.minmax_isotonic(iso_vals, iso_offsets, 0.9, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="problem size")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is kept)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="also write results to this CSV")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; timing the fallback only", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, fn in cases(args.n, rng).items():
        times = {}
        for b in backends:
            fn(b)  # warm up
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        rows.append((name, times.get("cython", float("nan")), times["python"], speedup))

    print(f"{'kernel':<30}{'cython [ms]':>14}{'python [ms]':>14}{'speedup':>10}")
    for name, tc, tp, sp in rows:
        print(f"{name:<30}{tc * 1e3:>14.3f}{tp * 1e3:>14.3f}{sp:>10.1f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "cython_s", "python_s", "speedup"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
