"""Command-line experiment runner.

    balanced-bundles balance    --bundle "O(2)" [--expect no-balance]
    balanced-bundles gieseker   --bundle "O(1)+O(2)"
    balanced-bundles embed-check --bundle "O(1,0)+O(0,1)"
    balanced-bundles invariance --bundle "O(2)"

Exit codes: 0 the experiment ran and its assertion holds, 1 the assertion
failed, 2 usage or configuration error.  Reports are JSON (sorted keys, no
timestamps) so equal configs give byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import embedding, gieseker
from .bundle import BundleSpec, parse_bundle, ratio_criterion
from .errors import InvalidArgumentError, ResourceError
from .geometry import make_base, sample_points
from .metric import BalanceOptions, Diagnosis, find_balanced

SCHEMA_VERSION = 1
QUAD_ORDER_ENV = "BALANCED_QUAD_ORDER"
SUBCOMMANDS = ("balance", "gieseker", "embed-check", "invariance")

__all__ = ["ExperimentConfig", "main", "parse_bundle", "run"]


@dataclass
class ExperimentConfig:
    subcommand: str
    bundle: str
    base: str | None = None
    form_weights: str | None = None
    quad_order: int | None = None
    max_iter: int = 500
    tol: float = 1e-10
    seed: int = 0
    init: str = "identity"
    expect: str = "balance"
    output: str | None = None
    csv: str | None = None
    points: int = 10
    elements: int = 10
    step: float = 1e-4
    form_tol: float = 1e-6
    invariance_tol: float = 1e-8
    dump_full: bool = False
    cap: int = gieseker.DEFAULT_CAP
    quad_order_source: str = field(default="default")

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InvalidArgumentError(f"unknown subcommand {self.subcommand!r}")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")

    def header(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("csv")
        return d


def _spec(cfg: ExperimentConfig) -> BundleSpec:
    weights = None
    if cfg.form_weights:
        weights = tuple(w.strip() for w in cfg.form_weights.split(","))
    spec = parse_bundle(cfg.bundle, weights)
    if cfg.base is not None:
        wanted = make_base(cfg.base, weights).kind
        if wanted != spec.base.kind:
            raise InvalidArgumentError(
                f"--base {cfg.base} does not match bundle {cfg.bundle!r} (twists of a {spec.base.kind.value} bundle)"
            )
    return spec


def _options(cfg: ExperimentConfig) -> BalanceOptions:
    return BalanceOptions(
        tol=cfg.tol, max_iter=cfg.max_iter, quad_order=cfg.quad_order, init=cfg.init, seed=cfg.seed
    )


def _run_balance(cfg, spec):
    res = find_balanced(spec, _options(cfg))
    if cfg.expect == "no-balance":
        ok = res.diagnosis is not Diagnosis.BALANCED
    else:
        ok = res.converged
    report = res.to_dict()
    report["ratio_criterion"] = _ratio_dict(spec)
    report["expect"] = cfg.expect
    report["assertion_holds"] = ok
    rows = [
        (i, d, e) for i, (d, e) in enumerate(zip(res.defect_history, res.min_eigenvalue_history))
    ]
    return ok, report, rows


def _ratio_dict(spec):
    crit = ratio_criterion(spec)
    return {"holds": crit.holds, "ratios": [str(q) for q in crit.ratios]}


def _run_gieseker(cfg, spec):
    d = gieseker.destabilizing_ops(spec, cap=cfg.cap)
    crit = ratio_criterion(spec)
    # destabilizing weight must appear exactly when the ratio criterion fails
    ok = d.destabilizes == (not crit.holds)
    report = d.to_dict()
    report["ratio_criterion"] = _ratio_dict(spec)
    report["assertion_holds"] = ok
    if cfg.dump_full:
        report["gieseker_point"] = gieseker.gieseker_point(spec, cfg.cap).to_dict()
    return ok, report, None


def _run_embed_check(cfg, spec):
    res = find_balanced(spec, _options(cfg))
    rng = np.random.default_rng(cfg.seed)
    pts = sample_points(spec, cfg.points, rng, max_modulus=1.0)
    report = embedding.form_report(spec, res.final_transform, pts, cfg.step)
    report["balance"] = {"converged": res.converged, "diagnosis": res.diagnosis.value, "iterations": res.iterations}
    ok = res.converged and report["max_rel_error"] < cfg.form_tol
    report["assertion_holds"] = ok
    return ok, report, None


def _run_invariance(cfg, spec):
    res = find_balanced(spec, _options(cfg))
    rng = np.random.default_rng(cfg.seed)
    n = spec.base.complex_dim
    elements = []
    for _ in range(cfg.elements):
        g = [embedding.random_su2(rng) for _ in range(n)]
        elements.append(g[0] if n == 1 else tuple(g))
    pts = sample_points(spec, max(cfg.points, 2), rng)
    disc = embedding.isometry_invariance_check(spec, res.final_transform, elements, pts)
    ok = res.converged and disc < cfg.invariance_tol
    report = {
        "spec": str(spec),
        "balance": {"converged": res.converged, "diagnosis": res.diagnosis.value, "iterations": res.iterations},
        "elements": [
            [embedding._cjson(np.asarray(g)) for g in (e if isinstance(e, tuple) else (e,))] for e in elements
        ],
        "max_discrepancy": disc,
        "assertion_holds": ok,
    }
    return ok, report, None


RUNNERS = {
    "balance": _run_balance,
    "gieseker": _run_gieseker,
    "embed-check": _run_embed_check,
    "invariance": _run_invariance,
}


def run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Run one experiment; returns (exit code, report) and writes outputs."""
    spec = _spec(cfg)
    ok, body, rows = RUNNERS[cfg.subcommand](cfg, spec)
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.header(), **body}
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    if rows is not None and (cfg.csv or cfg.output):
        csv_path = Path(cfg.csv) if cfg.csv else Path(cfg.output).with_suffix(".csv")
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["# schema_version", SCHEMA_VERSION])
            writer.writerow(["iteration", "defect", "min_gram_eigenvalue"])
            for i, d, e in rows:
                writer.writerow([i, repr(d), repr(e)])
    return (0 if ok else 1), report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balanced-bundles", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--bundle", required=True, help='e.g. "O(1)+O(2)" or "O(1,0)+O(0,1)"')
        p.add_argument("--base", choices=["cp1", "cp1xcp1", "CP1", "CP1xCP1"])
        p.add_argument("--form-weights", help="positive rationals, comma separated (one per CP1 factor)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", help="JSON report path (default: stdout)")
        if name == "gieseker":
            p.add_argument("--dump-full", action="store_true", help="include the full Gieseker point")
            p.add_argument("--cap", type=int, default=gieseker.DEFAULT_CAP)
            continue
        p.add_argument("--quad-order", type=int)
        p.add_argument("--max-iter", type=int, default=500)
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--init", choices=["identity", "random"], default="identity")
        if name == "balance":
            p.add_argument("--expect", choices=["balance", "no-balance"], default="balance")
            p.add_argument("--csv", help="defect history CSV (default: next to --output)")
        if name == "embed-check":
            p.add_argument("--points", type=int, default=10)
            p.add_argument("--step", type=float, default=1e-4)
            p.add_argument("--form-tol", type=float, default=1e-6)
        if name == "invariance":
            p.add_argument("--points", type=int, default=20)
            p.add_argument("--elements", type=int, default=10)
            p.add_argument("--invariance-tol", type=float, default=1e-8)
    return parser


def config_from_args(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    values = {k: v for k, v in vars(args).items() if v is not None}
    values["subcommand"] = args.subcommand
    source = "default"
    if "quad_order" in values:
        source = "flag"
    elif environ.get(QUAD_ORDER_ENV):
        try:
            values["quad_order"] = int(environ[QUAD_ORDER_ENV])
        except ValueError:
            raise InvalidArgumentError(f"{QUAD_ORDER_ENV}={environ[QUAD_ORDER_ENV]!r} is not an integer") from None
        source = f"env:{QUAD_ORDER_ENV}"
    values["quad_order_source"] = source
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, report = run(cfg)
    except (InvalidArgumentError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status = "ok" if code == 0 else "ASSERTION FAILED"
    print(f"{cfg.subcommand} {cfg.bundle}: {status}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
