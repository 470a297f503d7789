"""Chow weight and volume drift along flows of the rational normal curve.

The flowed curve keeps its volume, so the drift measures how well the fixed
parameter grid still resolves the moving image.
"""
import argparse
from dataclasses import dataclass

import numpy as np

from kstab.moment import monotonicity_check, random_hermitian, rational_normal_curve


@dataclass
class FlowConfig:
    degree: int = 2
    n_u: int = 48
    t_max: float = 2.0
    n_t: int = 41
    trials: int = 20
    seed: int = 0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=FlowConfig.degree)
    ap.add_argument("--n-u", type=int, default=FlowConfig.n_u)
    ap.add_argument("--trials", type=int, default=FlowConfig.trials)
    args = ap.parse_args()
    cfg = FlowConfig(degree=args.degree, n_u=args.n_u, trials=args.trials)
    rng = np.random.default_rng(cfg.seed)
    x = rational_normal_curve(cfg.degree, cfg.n_u, 2 * cfg.n_u)
    print(f"degree {cfg.degree}, volume {x.volume:.6f} on a {cfg.n_u}x{2 * cfg.n_u} grid")
    t = np.linspace(-cfg.t_max, cfg.t_max, cfg.n_t)
    for i in range(cfg.trials):
        rep = monotonicity_check(random_hermitian(cfg.degree + 1, rng), x, t)
        print(f"  trial {i:2d}: resolved {int(rep.resolved.sum()):2d}/{cfg.n_t}  "
              f"violations {len(rep.violations)}  min slope {rep.min_slope:+.4f}")


if __name__ == "__main__":
    main()
