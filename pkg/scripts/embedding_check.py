"""Pulled-back Kaehler forms and SU(2) invariance of balanced bases."""
import argparse
from dataclasses import dataclass

import numpy as np

from balancedbundles import parse_bundle
from balancedbundles.embedding import form_report, isometry_invariance_check, random_su2
from balancedbundles.geometry import sample_points
from balancedbundles.metric import find_balanced


@dataclass
class Config:
    bundles: tuple = ("O(1)", "O(2)", "O(3)", "O(2)+O(2)", "O(1,0)+O(0,1)", "O(1,1)")
    points: int = 10
    elements: int = 10
    step: float = 1e-4
    seed: int = 0


def main(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    print(f"{'bundle':<16}{'form rel err':>14}{'invariance':>14}")
    for text in cfg.bundles:
        spec = parse_bundle(text)
        res = find_balanced(spec)
        rep = form_report(spec, res.final_transform, sample_points(spec, cfg.points, rng, 1.0), cfg.step)
        n = spec.base.complex_dim
        els = [random_su2(rng) if n == 1 else (random_su2(rng), random_su2(rng)) for _ in range(cfg.elements)]
        disc = isometry_invariance_check(spec, res.final_transform, els, sample_points(spec, 20, rng))
        print(f"{text:<16}{rep['max_rel_error']:>14.2e}{disc:>14.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=Config.points)
    p.add_argument("--elements", type=int, default=Config.elements)
    p.add_argument("--step", type=float, default=Config.step)
    p.add_argument("--seed", type=int, default=Config.seed)
    main(Config(**vars(p.parse_args())))
