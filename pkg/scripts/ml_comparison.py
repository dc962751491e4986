"""BER of the four schemes at 4 bpcu per user, K=2, n_r=8, ML detection.

Writes the simulated curves in the standard CSV layout and the MBM union
bound to a second file.

    python scripts/ml_comparison.py --out ml.csv --bound-out ml_bound.csv
"""

import argparse
import sys

import numpy as np

from mumbm.analysis import union_bound_ber
from mumbm.channel import sigma_from_snr
from mumbm.harness import ExperimentSpec, run_sweep, write_csv
from mumbm.signalsets import SchemeConfig

SCHEMES = [
    SchemeConfig.mbm(3, "bpsk", K=2, n_r=8),
    SchemeConfig.cm("16qam", K=2, n_r=8),
    SchemeConfig.sm(2, "8qam", K=2, n_r=8),
    SchemeConfig.gsm(4, 2, "bpsk", K=2, n_r=8),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--snr-max", type=float, default=20.0)
    p.add_argument("--min-errors", type=int, default=200)
    p.add_argument("--max-uses", type=int, default=500_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--bound-out", default=None)
    args = p.parse_args(argv)

    grid = tuple(np.arange(0.0, args.snr_max + 0.5, 1.0))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    write_csv([], out)
    for cfg in SCHEMES:
        spec = ExperimentSpec(cfg, "ml", snr_grid=grid, min_bit_errors=args.min_errors,
                              max_channel_uses=args.max_uses, master_seed=args.seed, workers=args.workers)
        run_sweep(spec, on_record=lambda r: (write_csv([r], out, header=False), out.flush()))

    if args.bound_out:
        mbm = SCHEMES[0]
        bound = union_bound_ber(mbm, np.array([sigma_from_snr(s, mbm).sigma2 for s in grid]))
        with open(args.bound_out, "w") as fh:
            fh.write("snr_db,bound\n")
            for s, b in zip(grid, bound):
                fh.write(f"{s},{b:.6e}\n")
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
