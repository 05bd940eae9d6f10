"""
harness.py

This module runs whole experiments. run_sweep evaluates every (n, M, seed) grid
point of a config in a thread pool and writes the security, delta, bound and
summary CSV files together with a YAML run manifest. run_verify runs the
inequality suite on the configured source and on random tuple joints and
collects one CheckResult per inequality.

Classes:
    SweepResult: Rows of every CSV written by a sweep.
    RunManifest: The reproducibility record written next to the CSV files.
    CheckResult: Case and violation counts of one inequality.
    VerificationReport: All CheckResults of a verification run.

Functions:
    run_sweep(config) -> SweepResult
    run_verify(config) -> VerificationReport
    load_run_manifest(filename) -> RunManifest
"""

import csv
import datetime
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from . import __version__
from .config import ExperimentConfig
from .config_loader import load_configuration_from_dict
from .security_metrics import (
    DISCRIMINATION_LIMIT,
    REPORT_CSV_FIELDS,
    brute_force_discrimination,
    key_eve_joint,
    regroup,
    report_row,
    security_report,
)
from .source_core import (
    EnumerationLimitError,
    ProductSource,
    Source,
    bsc_joint,
    det_joint,
    indep_joint,
    parse_source_spec,
    random_tuple_joint,
)
from .sw_codes import (
    CodePair,
    best_code_search,
    compose_encoder,
    converse_bound,
    default_alpha_grid,
    error_probability,
    map_decoder,
    repair_decoder,
    seeded_encoder,
)
from .theory_bounds import (
    BRUTE_FORCE_MAX_SIZE,
    clt_tail_check,
    delta_brute,
    delta_exact,
    fit_root_n_slope,
    lemma2_bound,
    partition_report,
    thm2_proof_chain,
)
from .utilities import format_number, sha256_file

logger = logging.getLogger(__name__)

SKIPPED = "skipped=threshold"
CHECK_TOLERANCE = 1e-9

SECURITY_FIELDS = REPORT_CSV_FIELDS + ["eps_ci99"]
DELTA_FIELDS = ["n", "delta", "best_M"]
CURVE_FIELDS = ["n", "M", "delta_M"]
BOUND_FIELDS = [
    "n", "b", "M", "thm2_rhs", "lemma2_rhs", "h_sz", "tn_mass",
    "p_c_aplus", "p_aminus_cbar", "p_a0", "bound_exp", "bound_a0", "thm4_lower", "delta",
]
SUMMARY_FIELDS = ["n", "M", "runs", "median_eps", "median_delta", "median_D_over_n", "median_D_over_sqrt_n"]

CLT_BLOCK_LENGTHS = (25, 100, 400)
CLT_THRESHOLDS = (-1.0, 0.0, 1.0)
RANDOM_JOINT_SEED_OFFSET = 1000


@dataclass
class SweepResult:
    security_rows: List[List[str]] = field(default_factory=list)
    delta_rows: List[List[str]] = field(default_factory=list)
    curve_rows: List[List[str]] = field(default_factory=list)
    bound_rows: List[List[str]] = field(default_factory=list)
    summary_rows: List[List[str]] = field(default_factory=list)
    root_n_slope: Optional[float] = None
    written: List[str] = field(default_factory=list)


def _evaluate_code(source: Source, config: ExperimentConfig, m: int, seed: int) -> List[str]:
    try:
        source.check_enumerable()
        encoder = seeded_encoder(source, m, seed)
        code = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
        estimate = error_probability(source, code, config.mode, seed=seed, trials=config.trials)
        report = security_report(source, encoder)
    except EnumerationLimitError:
        return [str(source.n), str(m), str(seed)] + [SKIPPED] * (len(SECURITY_FIELDS) - 3)
    return report_row(report, seed, estimate.eps) + [format_number(estimate.half_width)]


def _delta_rows(source: ProductSource) -> Tuple[List[str], List[List[str]]]:
    try:
        result = delta_exact(source)
    except EnumerationLimitError:
        return [str(source.n), SKIPPED, SKIPPED], []
    curve = [[str(source.n), str(m), format_number(value)] for m, value in result.curve.items()]
    return [str(source.n), format_number(result.delta), str(result.best_m)], curve


def _bound_row(source: ProductSource, config: ExperimentConfig, m: int, b: float,
               delta: Optional[Tuple[float, int]]) -> List[str]:
    head = [str(source.n), format_number(b), str(m)]
    try:
        source.check_enumerable()
        report = lemma2_bound(source, seeded_encoder(source, m, config.seeds[0]), b)
    except EnumerationLimitError:
        return head + [SKIPPED] * (len(BOUND_FIELDS) - 3)
    row = head + [format_number(value) for value in
                  (report.thm2_rhs, report.lemma2_rhs, report.h_sz, report.tn_mass)]
    if b > 0 and delta is not None:
        part = partition_report(source, delta[1], b, config.c1)
        row += [format_number(value) for value in (
            part.p_c_aplus, part.p_aminus_cbar, part.p_a0, part.bound_exp, part.bound_a0,
            part.lower_bound, delta[0],
        )]
    else:
        row += [""] * 6 + [format_number(delta[0]) if delta is not None else ""]
    return row


@dataclass
class RunManifest:
    """
    Everything needed to reproduce a sweep: the effective config, the grid of runs
    and a sha256 checksum of every CSV written.

    Attributes:
        tool (str): Always "skaudit".
        version (str): Package version that wrote the files.
        timestamp (str): UTC time of the run, ISO 8601.
        config (Dict[str, Any]): ExperimentConfig.echo() of the run.
        runs (List[Dict[str, int]]): One {n, M, seed} entry per security row.
        root_n_slope (float, optional): Fitted K in D ~ K sqrt(n).
        outputs (Dict[str, str]): CSV file name -> sha256 hex digest.
    """
    tool: str
    version: str
    timestamp: str
    config: Dict[str, Any]
    runs: List[Dict[str, int]] = field(default_factory=list)
    root_n_slope: Optional[float] = None
    outputs: Dict[str, str] = field(default_factory=dict)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as file:
            yaml.safe_dump(asdict(self), file, sort_keys=False)

    def to_config(self) -> ExperimentConfig:
        """Rebuilds the ExperimentConfig of the recorded run."""
        return load_configuration_from_dict(self.config, origin="run manifest")


def load_run_manifest(filename: str) -> RunManifest:
    """
    Reads a manifest.yml written by run_sweep.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the YAML is malformed or a field is missing.
    """
    if not os.path.isfile(filename):
        raise FileNotFoundError(f"Run manifest not found: {filename}")
    try:
        with open(filename, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except yaml.YAMLError as e:
        raise ValueError(f"Error parsing YAML file {filename}: {e}")
    if not isinstance(data, dict):
        raise ValueError(f"Invalid format: Expected a mapping at the top level in {filename}.")
    missing = [key for key in ("tool", "version", "timestamp", "config") if key not in data]
    if missing:
        raise ValueError(f"Run manifest {filename} lacks {', '.join(missing)}.")
    try:
        return RunManifest(**data)
    except TypeError as e:
        raise ValueError(f"Invalid run manifest {filename}: {e}")


def _summarize(rows: List[List[str]]) -> Tuple[List[List[str]], Optional[float]]:
    groups: Dict[Tuple[int, int], List[List[float]]] = {}
    for row in rows:
        if row[3] == SKIPPED:
            continue
        metrics = [float(row[3]), float(row[4]), float(row[6]), float(row[7])]
        groups.setdefault((int(row[0]), int(row[1])), []).append(metrics)
    summary, ns, divergences = [], [], []
    for (n, m), values in sorted(groups.items()):
        medians = np.median(np.array(values), axis=0)
        summary.append([str(n), str(m), str(len(values))] + [format_number(v) for v in medians])
        ns.append(n)
        divergences.append(medians[3] * math.sqrt(n))
    slope = fit_root_n_slope(ns, divergences) if ns else None
    return summary, slope


def _write_csv(path: str, header: List[str], rows: List[List[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_sweep(config: ExperimentConfig, write: bool = True) -> SweepResult:
    """
    Evaluates every (n, M, seed) point of the config.

    Points whose block length exceeds the materialization threshold produce rows
    marked skipped=threshold. Rows come out sorted by (n, M, seed) whatever order
    the workers finish in.

    Args:
        config (ExperimentConfig): The experiment.
        write (bool): Write CSV files and the manifest into config.output_dir.

    Returns:
        SweepResult: All rows, the fitted root-n slope and the files written.
    """
    pmf = parse_source_spec(config.source)
    result = SweepResult()
    runs = []
    workers = config.worker_count()
    logger.debug("Sweeping %s over n=%s with %d workers", config.source, config.n_values, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for n in sorted(set(config.n_values)):
            source = ProductSource(base=pmf, n=n, materialize_threshold=config.materialize_threshold)
            try:
                source.joint_matrix
            except EnumerationLimitError:
                logger.debug("n=%d exceeds the materialization threshold", n)
            ms = config.policy_m(n, source.stats().h_cond)
            grid = [(m, seed) for m in ms for seed in sorted(set(config.seeds))]
            runs.extend({"n": n, "M": m, "seed": seed} for m, seed in grid)
            result.security_rows.extend(pool.map(partial(_evaluate_code, source, config), *zip(*grid)))

            delta_row, curve = _delta_rows(source)
            result.delta_rows.append(delta_row)
            result.curve_rows.extend(curve)
            delta = None if delta_row[1] == SKIPPED else (float(delta_row[1]), int(delta_row[2]))
            for b in config.b_values:
                result.bound_rows.append(_bound_row(source, config, ms[0], b, delta))
    result.summary_rows, result.root_n_slope = _summarize(result.security_rows)
    if write:
        result.written = _write_outputs(config, result, runs)
    return result


def _write_outputs(config: ExperimentConfig, result: SweepResult, runs: List[dict]) -> List[str]:
    os.makedirs(config.output_dir, exist_ok=True)
    tables = [
        ("security.csv", SECURITY_FIELDS, result.security_rows),
        ("delta.csv", DELTA_FIELDS, result.delta_rows),
        ("delta_curve.csv", CURVE_FIELDS, result.curve_rows),
        ("bounds.csv", BOUND_FIELDS, result.bound_rows),
        ("summary.csv", SUMMARY_FIELDS, result.summary_rows),
    ]
    written = []
    for name, header, rows in tables:
        path = os.path.join(config.output_dir, name)
        _write_csv(path, header, rows)
        written.append(path)
    manifest = RunManifest(
        tool="skaudit",
        version=__version__,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        config=config.echo(),
        runs=runs,
        root_n_slope=result.root_n_slope,
        outputs={os.path.basename(path): sha256_file(path) for path in written},
    )
    manifest_path = os.path.join(config.output_dir, "manifest.yml")
    manifest.write(manifest_path)
    written.append(manifest_path)
    return written


@dataclass
class CheckResult:
    """
    Outcome of one inequality over all the cases it was evaluated on. A residual is
    the amount by which the inequality holds; anything below -tolerance is a violation.
    """
    name: str
    cases: int = 0
    violations: int = 0
    worst_residual: float = math.inf
    tolerance: float = CHECK_TOLERANCE

    def record(self, residual: float) -> None:
        self.cases += 1
        if math.isnan(residual) or residual < -self.tolerance:
            self.violations += 1
        if math.isnan(residual) or residual < self.worst_residual:
            self.worst_residual = residual

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class VerificationReport:
    checks: Dict[str, CheckResult] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def check(self, name: str) -> CheckResult:
        if name not in self.checks:
            self.checks[name] = CheckResult(name)
        return self.checks[name]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    @property
    def violations(self) -> int:
        return sum(check.violations for check in self.checks.values())


def _verify_sizes(source: Source) -> List[int]:
    typical = max(1, math.ceil(math.exp(source.total_conditional_entropy())))
    return sorted({1, 2, typical, source.x_count})


def _verify_code(source: Source, config: ExperimentConfig, report: VerificationReport,
                 m: int, seed: int, shifted_delta: float, floor: float, markov: bool) -> None:
    encoder = seeded_encoder(source, m, seed)
    raw = CodePair(encoder, map_decoder(source, encoder))
    code = repair_decoder(raw)
    eps_raw = error_probability(source, raw).eps
    eps = error_probability(source, code).eps
    security = security_report(source, encoder)

    report.check("tradeoff").record(eps + security.delta_metric - shifted_delta)
    report.check("repair").record(eps_raw - eps)
    report.check("repair").record(0.0 if code.is_injective_on_bins() else -1.0)
    report.check("converse").record(eps - floor)
    report.check("converse").record(eps_raw - floor)
    report.check("divergence_identity").record(-security.identity_residual)
    report.check("pinsker").record(security.pinsker_slack)
    report.check("divergence_floor").record(security.divergence_floor_slack)

    kj = key_eve_joint(source, encoder)
    if kj.cells <= DISCRIMINATION_LIMIT:
        report.check("discrimination").record(-abs(brute_force_discrimination(kj) - security.distinguish_prob))
    for b in sorted({0.0, *config.b_values}):
        for step in thm2_proof_chain(source, encoder, b):
            report.check(step.name).record(step.residual)
    if markov:
        m_out = max(1, m // 2)
        rng = np.random.Generator(np.random.PCG64(seed))
        g_table = rng.integers(0, m_out, size=m)
        composed = key_eve_joint(source, compose_encoder(encoder, g_table, m_out))
        quotient = regroup(kj, g_table, m_out)
        report.check("markov_quotient").record(-float(np.abs(composed.probs - quotient.probs).max()))


def _verify_source(source: Source, config: ExperimentConfig, report: VerificationReport,
                   product: bool) -> None:
    delta = delta_exact(source)
    shifted = delta.delta + config.perturb_delta
    alpha_grid = default_alpha_grid(source)
    for m in _verify_sizes(source):
        floor = converse_bound(source, m, alpha_grid)
        for index, seed in enumerate(config.seeds):
            _verify_code(source, config, report, m, seed, shifted, floor, markov=index == 0)
        _, best = best_code_search(source, m, config.seeds)
        report.check("best_code").record(best.eps - floor)
    if source.x_count <= BRUTE_FORCE_MAX_SIZE and source.z_count <= BRUTE_FORCE_MAX_SIZE:
        report.check("delta_oracle").record(-abs(delta_brute(source).delta - delta.delta))
    if source.stats().degenerate:
        report.check("degenerate").record(-delta.delta)
    if not product:
        return
    for b in config.b_values:
        if b <= 0:
            continue
        part = partition_report(source, delta.best_m, b, config.c1)
        report.check("partition_aplus").record(part.bound_exp - part.p_c_aplus)
        report.check("partition_aminus").record(part.bound_exp - part.p_aminus_cbar)
        report.check("partition_a0").record(part.bound_a0 - part.p_a0)
        report.check("delta_certificate").record(delta.delta - part.lower_bound)


def _verify_delta_oracle(config: ExperimentConfig, report: VerificationReport) -> None:
    presets = [bsc_joint(0.1), indep_joint(2), det_joint(2)]
    sources: List[Source] = [ProductSource(base=pmf, n=n) for pmf in presets for n in (1, 2)]
    for seed in range(config.random_pmfs):
        rng = np.random.Generator(np.random.PCG64(seed))
        x_count, z_count = (int(v) for v in rng.integers(2, BRUTE_FORCE_MAX_SIZE + 1, size=2))
        sources.append(random_tuple_joint(x_count, z_count, seed))
    for source in sources:
        report.check("delta_oracle").record(-abs(delta_brute(source).delta - delta_exact(source).delta))


def run_verify(config: ExperimentConfig) -> VerificationReport:
    """
    Runs the inequality suite.

    On every enumerable block length of the configured source, and on
    config.random_joints random 4x4 tuple joints, each repaired MAP code over
    M in {1, 2, ceil(e^{nH}), |X|^n} and every seed is checked against the
    trade-off eps + Delta >= delta, the decoder repair property, the converse
    bound, the divergence chain, the metric identities and the Markov quotient.
    The best code found over the seeds is also held to the converse bound.
    Per source, delta is compared with brute force where feasible and with the
    partition certificate; the Gaussian tail is checked at large n.
    """
    pmf = parse_source_spec(config.source)
    report = VerificationReport()
    for n in sorted(set(config.n_values)):
        source = ProductSource(base=pmf, n=n, materialize_threshold=config.materialize_threshold)
        try:
            source.check_enumerable()
        except EnumerationLimitError:
            report.notes.append(f"n={n} skipped: exceeds the materialization threshold")
            continue
        logger.debug("Verifying n=%d", n)
        _verify_source(source, config, report, product=True)
    for index in range(config.random_joints):
        joint = random_tuple_joint(4, 4, RANDOM_JOINT_SEED_OFFSET + index)
        _verify_source(joint, config, report, product=False)
    _verify_delta_oracle(config, report)

    if not ProductSource(base=pmf, n=1).stats().degenerate:
        for n in CLT_BLOCK_LENGTHS:
            for b in CLT_THRESHOLDS:
                try:
                    tail = clt_tail_check(pmf, n, b, config.c1)
                except EnumerationLimitError:
                    report.notes.append(f"Gaussian tail at n={n} skipped: too many type classes")
                    break
                report.check("clt_tail").record(tail.tolerance - abs(tail.exact - tail.gaussian))
    logger.debug("Verification finished with %d violations", report.violations)
    return report
