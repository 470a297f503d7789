"""Grid refinement study for minimal_c and the quasi-isometry sweep near a marked point."""
import argparse
from dataclasses import dataclass, field

import numpy as np

from kstab.cone import ConeSetup, cone_grid, minimal_c, quasi_isometry_constants

CONFIGS = {
    "equator3": [np.exp(2j * np.pi * k / 3) for k in range(3)],
    "0-inf-1": [0, "inf", 1],
    "pair": [0.3 + 0.1j, 2j],
    "single": [0],
}


@dataclass
class RefineConfig:
    betas: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    sizes: list = field(default_factory=lambda: [64, 128, 256])
    radii: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", nargs="+", default=list(CONFIGS), choices=list(CONFIGS))
    args = ap.parse_args()
    cfg = RefineConfig()
    print("minimal c by grid size (n_theta, n_phi = 2 n_theta)")
    for name in args.configs:
        pts = CONFIGS[name]
        for beta in cfg.betas:
            cs = [minimal_c(pts, beta, cone_grid(pts, n, 2 * n)) for n in cfg.sizes]
            print(f"  {name:>8} beta={beta:<5}" + "".join(f"{c:12.5f}" for c in cs))
    print("per-radius delta at c = 2 * minimal c, first point")
    for name in args.configs:
        pts = CONFIGS[name]
        for beta in cfg.betas[:3]:
            c = minimal_c(pts, beta)
            if c == 0:
                continue
            q = quasi_isometry_constants(ConeSetup(tuple(pts), beta, 2 * c), 0, cfg.radii)
            print(f"  {name:>8} beta={beta:<5}" + "".join(f"{d:9.4f}" for d in q.per_radius_delta()))


if __name__ == "__main__":
    main()
