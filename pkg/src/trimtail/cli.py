"""Command-line front end: config resolution, experiment orchestration, file emission.

Exit codes: 0 on success, 1 when a verification run reports a failure,
2 on configuration or usage errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import configfile, reports
from .distributions import SampleFrame
from .engine import remainder_scaling, seed_stream, simulate_tail_table, variance_ratio
from .errors import ConfigError, TrimtailError
from .lstat import asymptotic_sigma2, centering_mu
from .winsor import DecompositionContext, WinsorizedModel, approx_centering, extended_weight

COMMANDS = ("decompose", "constants", "tails", "variance-ratio", "remainder")

_FLAG_KEYS = {
    "seed": ("mc", "seed"),
    "workers": ("mc", "workers"),
    "replicates": ("mc", "replicates"),
    "n": ("mc", "n"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimtail",
        description="Trimmed L-statistics: decomposition checks, normalizing constants, "
                    "and deterministic Monte Carlo tail experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("decompose", "verify the exact decomposition identity over replicates"),
            ("constants", "compute the normalizing constants for one configuration"),
            ("tails", "estimate tail-probability ratios on an x grid"),
            ("variance-ratio", "estimate n Var / sigma^2 along the sample-size ladder"),
            ("remainder", "estimate remainder scaling along the sample-size ladder")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--workers", type=int, default=None, help="worker process count")
        p.add_argument("--replicates", type=int, default=None, help="replicate count override")
        p.add_argument("--n", type=int, default=None, help="sample size override")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--format", choices=("csv", "tsv"), default="csv",
                       help="delimited output format")
        p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                       help="render figures next to the data files")
    return parser


def _resolve_config(args) -> configfile.Config:
    file_cfg = configfile.load_config(args.config) if args.config else None
    flags: configfile.Config = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr)
        if value is not None:
            flags[key] = str(value)
    return configfile.resolve(file_cfg, configfile.env_overrides(), flags)


def _ext(args) -> str:
    return "tsv" if args.format == "tsv" else "csv"


def _finish(args, command: str, cfg, started, outputs) -> None:
    canonical = configfile.canonical_text(cfg)
    manifest = reports.write_manifest(
        args.out / f"{command}_manifest.txt", command, canonical,
        configfile.config_hash(cfg), int(cfg[("mc", "seed")]),
        started, datetime.now(timezone.utc), outputs)
    outputs.append(manifest)


def _cmd_decompose(args) -> int:
    cfg = _resolve_config(args)
    model = configfile.build_model(cfg)
    J = configfile.build_weight(cfg)
    scheme = configfile.build_scheme(cfg, J)
    sim = configfile.build_simulation_config(cfg, model, J)
    spec = sim.trim_spec(sim.n)
    ctx = DecompositionContext(model, scheme, spec)
    started = datetime.now(timezone.utc)
    rows = []
    residuals = []
    cases = Counter()
    all_passed = True
    max_residual = 0.0
    for rep_index in range(sim.replicates):
        rng = seed_stream(sim.master_seed, rep_index)
        frame = SampleFrame(np.sort(model.sample(rng, sim.n)))
        report = ctx.evaluate(frame)
        rows.append(reports.decomposition_row(rep_index, spec, report))
        residuals.append(report.residual)
        cases[report.case] += 1
        max_residual = max(max_residual, report.residual)
        all_passed &= report.passed
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [reports.write_table(args.out / f"decompose.{_ext(args)}",
                                   reports.DECOMPOSE_HEADER, rows, args.format)]
    summary = args.out / "decompose_summary.txt"
    with open(summary, "w", newline="\n") as fh:
        fh.write(f"replicates: {sim.replicates}\n")
        fh.write(f"n: {sim.n}  k_n: {spec.k_n}  m_n: {spec.m_n}\n")
        fh.write(f"max-residual: {reports.fmt(max_residual)}\n")
        fh.write(f"all-passed: {'yes' if all_passed else 'no'}\n")
        fh.write("case-histogram:\n")
        for case in sorted(cases):
            fh.write(f"  {case}: {cases[case]}\n")
    outputs.append(summary)
    if args.plot:
        from .figures import residual_histogram_figure
        outputs.append(residual_histogram_figure(residuals, args.out / "decompose.png"))
    _finish(args, "decompose", cfg, started, outputs)
    if sim.replicates == 1:
        print(reports.decomposition_text(report))
    print(f"decompose: {sim.replicates} replicates, max residual {max_residual:.3e}, "
          f"{'PASS' if all_passed else 'FAIL'}")
    return 0 if all_passed else 1


def _cmd_constants(args) -> int:
    cfg = _resolve_config(args)
    model = configfile.build_model(cfg)
    J = configfile.build_weight(cfg)
    sim = configfile.build_simulation_config(cfg, model, J)
    spec = sim.trim_spec(sim.n)
    started = datetime.now(timezone.utc)
    mu_n = centering_mu(J, model, spec)
    sigma2 = asymptotic_sigma2(J, model, sim.alpha, sim.beta)
    wmodel = WinsorizedModel.from_model(model, sim.alpha, sim.beta)
    mu_w = approx_centering(extended_weight(J, sim.alpha, sim.beta), wmodel)
    row = (spec.n, spec.k_n, spec.m_n, sim.alpha, sim.beta, mu_n, sigma2,
           math.sqrt(sigma2), wmodel.xi_alpha, wmodel.xi_upper, mu_w)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [reports.write_table(args.out / f"constants.{_ext(args)}",
                                   reports.CONSTANTS_HEADER, [row], args.format)]
    _finish(args, "constants", cfg, started, outputs)
    print(f"constants: mu_n={mu_n!r} sigma2={sigma2!r} xi=({wmodel.xi_alpha!r}, "
          f"{wmodel.xi_upper!r}) mu_winsor={mu_w!r}")
    return 0


def _cmd_tails(args) -> int:
    cfg = _resolve_config(args)
    model = configfile.build_model(cfg)
    J = configfile.build_weight(cfg)
    sim = configfile.build_simulation_config(cfg, model, J)
    started = datetime.now(timezone.utc)
    table = simulate_tail_table(sim)
    table = dataclasses.replace(table, config_hash=configfile.config_hash(cfg))
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [
        reports.write_table(args.out / f"tails.{_ext(args)}", reports.TAIL_HEADER,
                            reports.tail_table_rows(table), args.format),
        reports.write_table(args.out / f"tails_plotdata.{_ext(args)}", reports.PLOTDATA_HEADER,
                            reports.tail_plotdata_rows(table), args.format),
    ]
    if args.plot:
        from .figures import tail_ratio_figure
        outputs.append(tail_ratio_figure(table, args.out / "tails.png"))
    _finish(args, "tails", cfg, started, outputs)
    flagged = sum(1 for r in table.rows if r.low_mass)
    print(f"tails: n={table.n}, {table.replicates} replicates, {len(table.rows)} rows"
          + (f", {flagged} low-mass rows" if flagged else ""))
    return 0


def _cmd_variance_ratio(args) -> int:
    cfg = _resolve_config(args)
    model = configfile.build_model(cfg)
    J = configfile.build_weight(cfg)
    sim = configfile.build_simulation_config(cfg, model, J)
    started = datetime.now(timezone.utc)
    ladder = variance_ratio(sim)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [reports.write_table(args.out / f"variance_ratio.{_ext(args)}",
                                   reports.VARIANCE_HEADER, reports.variance_rows(ladder),
                                   args.format)]
    if args.plot:
        from .figures import variance_ratio_figure
        outputs.append(variance_ratio_figure(ladder, args.out / "variance_ratio.png"))
    _finish(args, "variance-ratio", cfg, started, outputs)
    tail = ladder.rows[-1]
    print(f"variance-ratio: ladder {[r.n for r in ladder.rows]}, "
          f"final ratio {tail.ratio:.4f} (se {tail.se:.4f})")
    return 0


def _cmd_remainder(args) -> int:
    cfg = _resolve_config(args)
    model = configfile.build_model(cfg)
    J = configfile.build_weight(cfg)
    sim = configfile.build_simulation_config(cfg, model, J)
    started = datetime.now(timezone.utc)
    ladder = remainder_scaling(sim)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [reports.write_table(args.out / f"remainder.{_ext(args)}",
                                   reports.REMAINDER_HEADER, reports.remainder_rows(ladder),
                                   args.format)]
    if args.plot:
        from .figures import remainder_figure
        outputs.append(remainder_figure(ladder, args.out / "remainder.png"))
    _finish(args, "remainder", cfg, started, outputs)
    print(f"remainder: ladder {[r.n for r in ladder.rows]}, slope {ladder.slope:.4f} "
          f"(se {ladder.slope_se:.4f})")
    return 0


_HANDLERS = {
    "decompose": _cmd_decompose,
    "constants": _cmd_constants,
    "tails": _cmd_tails,
    "variance-ratio": _cmd_variance_ratio,
    "remainder": _cmd_remainder,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrimtailError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
