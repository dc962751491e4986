"""Four schemes at 5 bpcu per user with K=16 users.

Sparse schemes use the SP-based sparse detector (alg1-sp), the conventional baseline uses the
sphere decoder (ML). ``snr`` mode sweeps SNR at n_r=128; ``nr`` mode sweeps
the number of receive antennas at a fixed SNR.

    python scripts/massive_comparison.py snr --snr-grid 0:1:8 --out snr.csv
    python scripts/massive_comparison.py nr --nr-grid 48,64,96,128,192,256 --snr-db 4 --out nr.csv
"""

import argparse
import sys

from mumbm.cli import parse_grid
from mumbm.harness import ExperimentSpec, run_sweep, write_csv
from mumbm.signalsets import SchemeConfig

K = 16
SCHEMES = [
    (SchemeConfig.mbm(3, "4qam", K=K, n_r=128), "alg1-sp"),
    (SchemeConfig.cm("32qam", K=K, n_r=128), "sphere"),
    (SchemeConfig.sm(4, "8qam", K=K, n_r=128), "alg1-sp"),
    (SchemeConfig.gsm(5, 2, "bpsk", K=K, n_r=128), "alg1-sp"),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=("snr", "nr"))
    p.add_argument("--snr-grid", default="0:1:8")
    p.add_argument("--nr-grid", default="48,64,96,128,192,256")
    p.add_argument("--snr-db", type=float, default=4.0)
    p.add_argument("--schemes", default="MBM,CM,SM,GSM", help="comma-separated subset")
    p.add_argument("--snr-convention", default="aggregate", choices=("aggregate", "per_user"))
    p.add_argument("--min-errors", type=int, default=200)
    p.add_argument("--max-uses", type=int, default=60_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    args = p.parse_args(argv)

    wanted = {s.strip().upper() for s in args.schemes.split(",")}
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    write_csv([], out)
    for cfg, det in SCHEMES:
        if cfg.scheme not in wanted:
            continue
        if args.mode == "snr":
            grid = dict(snr_grid=parse_grid(args.snr_grid))
        else:
            grid = dict(nr_grid=parse_grid(args.nr_grid, cast=int), snr_db=args.snr_db)
        spec = ExperimentSpec(cfg, det, snr_convention=args.snr_convention, min_bit_errors=args.min_errors,
                              max_channel_uses=args.max_uses, master_seed=args.seed, workers=args.workers, **grid)
        run_sweep(spec, on_record=lambda r: (write_csv([r], out, header=False), out.flush()))
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
