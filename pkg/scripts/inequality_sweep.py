"""Limit inequality ||mu(X)|| ||A|| >= -FCh(A, limit) with backward and forward flow limits.

FCh increases along exp(tA), so the backward limit carries the smallest Chow
weight; the sweep counts how often each version fails on random point cycles.
"""
import argparse
from dataclasses import dataclass

import numpy as np

from kstab.moment import limit_inequality_check, point_cycle, random_hermitian, random_point_cycle


@dataclass
class SweepConfig:
    trials: int = 2000
    max_N: int = 5
    max_points: int = 8
    t_neg: float = -20.0
    seed: int = 0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=SweepConfig.trials)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    args = ap.parse_args()
    cfg = SweepConfig(trials=args.trials, seed=args.seed)

    x = point_cycle([[1, np.exp(2j * np.pi * k / 3)] for k in range(3)])
    rep = limit_inequality_check(np.diag([1.0, -1.0]), x, cfg.t_neg)
    print(f"three balanced points on a great circle: lhs {rep.lhs:.3g}, backward rhs {rep.rhs:.6g}, "
          f"forward rhs {rep.rhs_forward:.6g}")

    rng = np.random.default_rng(cfg.seed)
    back = fwd = 0
    worst = 0.0
    for _ in range(cfg.trials):
        N = int(rng.integers(1, cfg.max_N + 1))
        x = random_point_cycle(N, int(rng.integers(1, cfg.max_points + 1)), rng)
        r = limit_inequality_check(random_hermitian(N + 1, rng), x, cfg.t_neg)
        back += not r.holds
        fwd += not r.holds_forward
        worst = min(worst, r.slack)
    print(f"{cfg.trials} random cycles: backward fails {back}, forward fails {fwd}, "
          f"worst backward slack {worst:.3g}")


if __name__ == "__main__":
    main()
