"""Delimited output files and run manifests.

All real numbers are written with 17 significant digits, newlines are always
LF, and nothing time-dependent goes into the data files: the manifest is the
only place that records wall-clock information.
"""
from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .engine import RemainderLadder, TailTable, VarianceLadder
from .lstat import NormalizedStatistic
from .weights import TrimSpec
from .winsor import DecompositionReport

_SEPS = {"csv": ",", "tsv": "\t"}


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_table(path, header, rows, fmt_name: str = "csv") -> Path:
    sep = _SEPS[fmt_name]
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(sep.join(header) + "\n")
        for row in rows:
            fh.write(sep.join(fmt(v) for v in row) + "\n")
    return path


TAIL_HEADER = ("x", "tail", "count", "p_hat", "ref_prob", "ratio", "ci_lo", "ci_hi", "low_mass")


def tail_table_rows(table: TailTable):
    for r in table.rows:
        yield (r.x, r.tail, r.count, r.p_hat, r.ref_prob, r.ratio, r.ci_lo, r.ci_hi, r.low_mass)


PLOTDATA_HEADER = ("x", "tail", "ratio", "ci_lo", "ci_hi")


def tail_plotdata_rows(table: TailTable):
    for r in table.rows:
        yield (r.x, r.tail, r.ratio, r.ci_lo, r.ci_hi)


VARIANCE_HEADER = ("n", "replicates", "var_hat", "ratio", "se", "bound")


def variance_rows(ladder: VarianceLadder):
    for r in ladder.rows:
        yield (r.n, r.replicates, r.var_hat, r.ratio, r.se, r.bound)


REMAINDER_HEADER = ("n", "replicates", "mean_n_rn2", "mean_n_vn2", "slope", "slope_se")


def remainder_rows(ladder: RemainderLadder):
    for r in ladder.rows:
        yield (r.n, r.replicates, r.mean_n_rn2, r.mean_n_vn2, ladder.slope, ladder.slope_se)


DECOMPOSE_HEADER = ("replicate", "n", "k_n", "m_n", "L0", "mu_n", "Ltilde", "mu_Ltilde",
                    "R1", "R2", "Rn", "Vn", "residual", "A_n", "B_n",
                    "N_alpha", "N_upper", "case", "passed")


def decomposition_row(index: int, spec: TrimSpec, rep: DecompositionReport):
    return (index, rep.n, spec.k_n, spec.m_n, rep.L0, rep.mu_n, rep.Ltilde, rep.mu_Ltilde,
            rep.R1, rep.R2, rep.Rn, rep.Vn, rep.residual, rep.A_n, rep.B_n,
            rep.N_alpha, rep.N_upper, rep.case, rep.passed)


def decomposition_text(rep: DecompositionReport) -> str:
    """Human-readable block with every decomposition term for one sample."""
    lines = [
        f"n                 {rep.n}",
        f"L0                {fmt(rep.L0)}",
        f"mu_n              {fmt(rep.mu_n)}",
        f"Ltilde            {fmt(rep.Ltilde)}",
        f"mu_Ltilde         {fmt(rep.mu_Ltilde)}",
        f"R1                {fmt(rep.R1)}",
        f"R2                {fmt(rep.R2)}",
        f"Rn = R1 + R2      {fmt(rep.Rn)}",
        f"Vn                {fmt(rep.Vn)}",
        f"A_n / B_n         {fmt(rep.A_n)} / {fmt(rep.B_n)}",
        f"N_alpha / N_upper {rep.N_alpha} / {rep.N_upper}",
        f"case ordering     {rep.case}",
        f"identity residual {fmt(rep.residual)} (tolerance {fmt(rep.tolerance)})",
        f"verdict           {'PASS' if rep.passed else 'FAIL'}",
    ]
    return "\n".join(lines)


HOEFFDING_HEADER = ("n", "h", "bound")

UNIFORM_OS_HEADER = ("lambda", "p", "n", "bound")


CONSTANTS_HEADER = ("n", "k_n", "m_n", "alpha", "beta", "mu_n", "sigma2", "sigma",
                    "xi_alpha", "xi_upper", "mu_winsor")


STATISTIC_HEADER = ("n", "k_n", "m_n", "L_n", "mu_n", "sigma", "x")


def statistic_row(stat: NormalizedStatistic, spec: TrimSpec):
    return (spec.n, spec.k_n, spec.m_n, stat.raw, stat.mu_n, stat.sigma, stat.x)


def write_manifest(path, command: str, canonical_cfg: str, cfg_hash: str, seed: int,
                   started: datetime, finished: datetime, outputs: list[Path]) -> Path:
    path = Path(path)
    from .lstat import MU_TOL, SIGMA2_TOL
    lines = [
        f"command: {command}",
        f"config-hash: {cfg_hash}",
        f"seed: {seed}",
        f"started: {started.astimezone(timezone.utc).isoformat()}",
        f"finished: {finished.astimezone(timezone.utc).isoformat()}",
        f"wall-seconds: {(finished - started).total_seconds():.3f}",
        f"python: {sys.version.split()[0]}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"centering-quadrature-tol: {MU_TOL:g}",
        f"variance-quadrature-tol: {SIGMA2_TOL:g}",
        "outputs:",
    ]
    lines += [f"  - {p.name}" for p in outputs]
    lines += ["config:"]
    lines += [f"  {line}" for line in canonical_cfg.strip().splitlines()]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
