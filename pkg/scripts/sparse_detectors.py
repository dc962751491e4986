"""MBM with K=16, n_r=128, m_rf=6, 4-QAM: sparse detector variants against MMSE.

    python scripts/sparse_detectors.py --snr-grid 0:1:8 --out sparse.csv
"""

import argparse
import sys

from mumbm.cli import parse_grid
from mumbm.harness import ExperimentSpec, run_sweep, write_csv
from mumbm.signalsets import SchemeConfig

DETECTORS = ("alg1-sp", "alg1-cosamp", "alg1-omp", "mmse")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--snr-grid", default="0:1:8")
    p.add_argument("--min-errors", type=int, default=200)
    p.add_argument("--max-uses", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    args = p.parse_args(argv)

    cfg = SchemeConfig.mbm(6, "4qam", K=16, n_r=128)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    write_csv([], out)
    for det in DETECTORS:
        spec = ExperimentSpec(cfg, det, snr_grid=parse_grid(args.snr_grid), min_bit_errors=args.min_errors,
                              max_channel_uses=args.max_uses, master_seed=args.seed, workers=args.workers)
        run_sweep(spec, on_record=lambda r: (write_csv([r], out, header=False), out.flush()))
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
