"""Wall-clock time of the alg1-sp detector against n_r (K=16, MBM m_rf=3, 4-QAM).

Prints n_r, median seconds per detection and mean SP iterations as CSV.

    python scripts/complexity_timing.py --nr-grid 64,128,256 --snr-db 20
"""

import argparse
import time

import numpy as np

from mumbm.channel import sigma_from_snr
from mumbm.cli import parse_grid
from mumbm.detectors import algorithm1
from mumbm.harness import draw_block
from mumbm.signalsets import SchemeConfig, build_signal_set


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nr-grid", default="64,128,256")
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    data = {}
    for n_r in parse_grid(args.nr_grid, cast=int):
        cfg = SchemeConfig.mbm(3, "4qam", K=16, n_r=n_r)
        s = build_signal_set(cfg)
        sigma2 = sigma_from_snr(args.snr_db, cfg).sigma2
        idx, Hs, w = draw_block(cfg, s, args.seed, 0, args.trials)
        Y = np.einsum("bij,bj->bi", Hs, s.vectors[idx].reshape(args.trials, -1)) + np.sqrt(sigma2) * w
        data[n_r] = (Y, Hs, s)

    times = {n: [] for n in data}
    iters = {n: [] for n in data}
    # interleave sizes so drifting machine load hits all of them alike
    for _ in range(args.reps):
        for n_r, (Y, Hs, s) in data.items():
            t0 = time.perf_counter()
            for b in range(args.trials):
                iters[n_r].append(algorithm1(Y[b], Hs[b], s, 16, "sp").diagnostics["inner_iterations"])
            times[n_r].append((time.perf_counter() - t0) / args.trials)

    print("n_r,seconds_per_detection,mean_sp_iterations")
    for n_r in data:
        print(f"{n_r},{np.median(times[n_r]):.6e},{np.mean(iters[n_r]):.3f}")


if __name__ == "__main__":
    main()
