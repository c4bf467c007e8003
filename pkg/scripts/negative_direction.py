"""Unequal ratios: iteration stalls, and an explicit subgroup destabilizes.

Runs the balancing iteration on one bundle and prints its defect history,
then sweeps every two-summand bundle on CP1 with twists up to --kmax and
tabulates the destabilizing weight next to the ratio criterion.

    python scripts/negative_direction.py --bundle "O(1)+O(2)" --max-iter 500
"""
import argparse
import itertools
from dataclasses import dataclass

from balancedbundles import make_spec, parse_bundle
from balancedbundles.bundle import ratio_criterion
from balancedbundles.gieseker import destabilizing_ops
from balancedbundles.metric import find_balanced


@dataclass
class Config:
    bundle: str = "O(1)+O(2)"
    max_iter: int = 500
    every: int = 50
    kmax: int = 6


def main(cfg: Config):
    res = find_balanced(parse_bundle(cfg.bundle), max_iter=cfg.max_iter)
    print(f"{cfg.bundle}: {res.diagnosis.value} after {res.iterations} iterations")
    print(f"{'iter':>6}{'defect':>12}{'min eig':>12}{'trace':>20}")
    for i in range(0, len(res.defect_history), cfg.every):
        print(f"{i:>6}{res.defect_history[i]:>12.5f}{res.min_eigenvalue_history[i]:>12.3e}{res.trace_history[i]:>20.15f}")

    d = destabilizing_ops(res.spec)
    print(f"subgroup {list(d.lam.exponents)}, weight {d.weight}\n")

    print("weight table (rows k1, columns k2); '.' marks equal ratios")
    print("     " + "".join(f"{k:>4}" for k in range(cfg.kmax + 1)))
    for k1 in range(cfg.kmax + 1):
        row = []
        for k2 in range(cfg.kmax + 1):
            spec = make_spec("CP1", [k1, k2])
            d = destabilizing_ops(spec)
            assert d.destabilizes == (not ratio_criterion(spec).holds)
            row.append("." if not d.destabilizes else str(d.weight))
        print(f"{k1:>4} " + "".join(f"{c:>4}" for c in row))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bundle", default=Config.bundle)
    p.add_argument("--max-iter", type=int, default=Config.max_iter)
    p.add_argument("--every", type=int, default=Config.every)
    p.add_argument("--kmax", type=int, default=Config.kmax)
    main(Config(**vars(p.parse_args())))
