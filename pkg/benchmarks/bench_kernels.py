"""Compiled vs numpy fixed-point kernels, and SERE vs Monte Carlo.

    python benchmarks/bench_kernels.py [--K 128 256 512] [--mc-draws 20]
"""

import argparse
import time

from cfnet import kernels
from cfnet.config import NetworkConfig
from cfnet.linkops import mc_ergodic_rate, subnetwork_alphas
from cfnet.sere import sere_rate, solve_subnetwork
from cfnet.topology import generate_network


def best_of(fn, repeat=5):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--beta", type=float, default=4.0)
    ap.add_argument("--mc-draws", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    names = kernels.available()
    print(f"backends: {names} (default {kernels.BACKEND})")
    print(f"{'K':>5} " + " ".join(f"{n + ' [ms]':>14}" for n in names)
          + f" {'sere [ms]':>10} {'mc/draw [ms]':>13} {'speedup':>8}")
    for K in args.K:
        cfg = NetworkConfig(total_users_K=K, antenna_ratio_beta=args.beta, seed=args.seed,
                            mc_realizations=args.mc_draws)
        topo, prof = generate_network(cfg, 0)
        alphas = subnetwork_alphas(topo, cfg)
        cols = []
        for name in names:
            impl = kernels.get_backend(name)
            cols.append(best_of(lambda: [solve_subnetwork(prof.own(m), alphas[m], 50, backend=impl)
                                         for m in range(topo.num_subnetworks)]))
        t_sere = best_of(lambda: sere_rate(topo, prof, cfg))
        mc = mc_ergodic_rate(topo, prof, cfg)
        t_mc = mc.time_s / mc.realizations
        print(f"{K:>5} " + " ".join(f"{1e3 * c:>14.2f}" for c in cols)
              + f" {1e3 * t_sere:>10.2f} {1e3 * t_mc:>13.2f} "
              f"{t_mc * cfg.mc_realizations / t_sere:>8.0f}")


if __name__ == "__main__":
    main()
