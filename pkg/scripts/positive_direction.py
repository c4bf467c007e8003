"""Balance O(k) for a range of k, then direct sums with equal ratios.

    python scripts/positive_direction.py --kmax 6 --init random
"""
import argparse
from dataclasses import dataclass

import numpy as np

from balancedbundles import parse_bundle
from balancedbundles.bundle import h0_basis
from balancedbundles.metric import balance_defect, concat_balanced, find_balanced, gram_matrix


@dataclass
class Config:
    kmax: int = 6
    init: str = "identity"
    seed: int = 0
    quad_order: int | None = None


def main(cfg: Config):
    print(f"{'bundle':<16}{'iters':>6}{'defect':>12}{'max|G - I/N|':>15}")
    for k in range(1, cfg.kmax + 1):
        res = find_balanced(parse_bundle(f"O({k})"), init=cfg.init, seed=cfg.seed, quad_order=cfg.quad_order)
        err = np.max(np.abs(res.gram_final - np.eye(k + 1) / (k + 1)))
        print(f"{str(res.spec):<16}{res.iterations:>6}{res.defect_history[-1]:>12.2e}{err:>15.2e}")

    # equal ratios: balanced summands concatenate without further iteration
    for parts in (["O(2)", "O(2)"], ["O(1,0)", "O(0,1)"], ["O(3)", "O(3)", "O(3)"]):
        results = [find_balanced(parse_bundle(p), quad_order=cfg.quad_order) for p in parts]
        spec = parse_bundle("+".join(parts))
        g = gram_matrix(h0_basis(spec), concat_balanced(results), spec.base)
        print(f"{str(spec):<16}{'concat':>6}{balance_defect(g, spec.rank, spec.n_sections):>12.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kmax", type=int, default=Config.kmax)
    p.add_argument("--init", choices=["identity", "random"], default=Config.init)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--quad-order", type=int)
    main(Config(**vars(p.parse_args())))
