"""
display.py

This module prints source statistics, optimal distances, bound reports, sweep
summaries and verification results in a readable format.
"""

from typing import List, Optional

from .harness import SweepResult, VerificationReport
from .source_core import SourceStats
from .special_symbols import blue_book, check_mark, exclamation, green_book, mark, warning_sign
from .theory_bounds import BoundReport, ChainStep, DeltaResult, PartitionReport


def display_source_info(spec: str, stats: SourceStats, bits: bool = False):
    """
    Prints H(X|Z), sigma^2 and rho of a source, then one key=value line for scripts.
    """
    print(f"{green_book} Source {spec}:")
    print(f"  H(X|Z)  = {stats.h_cond:.6f} nats")
    print(f"  sigma^2 = {stats.sigma2:.6f} nats^2")
    print(f"  rho     = {stats.rho3:.6f} nats^3")
    if stats.degenerate:
        print(f"  {warning_sign} sigma^2 = 0: the information density is constant")
    if bits:
        converted = stats.in_bits()
        print(f"  in bits: H={converted['h_cond']:.6f}, sigma^2={converted['sigma2']:.6f}, "
              f"rho={converted['rho3']:.6f}")
    print(f"h_cond={stats.h_cond!r} sigma2={stats.sigma2!r} rho3={stats.rho3!r} "
          f"degenerate={str(stats.degenerate).lower()}")


def display_delta(spec: str, n: int, result: DeltaResult, show_curve: bool = True):
    print(f"{green_book} delta for {spec}, n={n}: {result.delta:.12g} at M={result.best_m}")
    if show_curve:
        for m, value in result.curve.items():
            print(f"  M={m:<6d} {value:.12g}")


def display_bounds(spec: str, n: int, report: BoundReport, partition: Optional[PartitionReport],
                   chain: List[ChainStep], delta: DeltaResult):
    print(f"{blue_book} Bounds for {spec}, n={n}, b={report.b}, M={report.m}:")
    print(f"  Gaussian floor of D/sqrt(n):   {report.thm2_rhs:.9g}")
    print(f"  H(S|Z) exact / single-shot:    {report.h_sz:.9g} <= {report.lemma2_rhs:.9g}")
    print(f"  P(T_n):                        {report.tn_mass:.9g}")
    for step in chain:
        print(f"  {mark(step.holds())} {step.name}: {step.lhs:.9g} vs {step.rhs:.9g} (residual {step.residual:.3g})")
    print(f"  delta = {delta.delta:.9g} at M={delta.best_m}")
    if partition is None:
        print(f"  {exclamation} partition bounds need b > 0")
        return
    print(f"  P_C(A+)         = {partition.p_c_aplus:.9g} <= {partition.bound_exp:.9g}")
    print(f"  P(A- in C)      = {partition.p_aminus_cbar:.9g} <= {partition.bound_exp:.9g}")
    print(f"  P(A0)           = {partition.p_a0:.9g} <= {partition.bound_a0:.9g}")
    print(f"  certified lower bound on delta: {partition.lower_bound:.9g}")


def display_sweep(result: SweepResult):
    print(f"{green_book} Sweep summary (medians over seeds):")
    print("  n     M          eps          Delta        D/n          D/sqrt(n)")
    for n, m, _, eps, delta, d_n, d_root in result.summary_rows:
        print(f"  {n:<5} {m:<10} {float(eps):<12.6g} {float(delta):<12.6g} {float(d_n):<12.6g} {float(d_root):.6g}")
    if result.root_n_slope is not None:
        print(f"  fitted D ~ K sqrt(n): K = {result.root_n_slope:.6g}")
    for path in result.written:
        print(f"  wrote {path}")


def display_verification(report: VerificationReport):
    """Prints one line per inequality with its worst residual, then the verdict."""
    print(f"{blue_book} Verification:")
    for check in report.checks.values():
        print(f"  {mark(check.passed)} {check.name:<22} cases={check.cases:<7d} violations={check.violations:<5d} "
              f"worst residual={check.worst_residual:.3g}")
    for note in report.notes:
        print(f"  {exclamation} {note}")
    if report.passed:
        print(f"{check_mark} all checks passed")
    else:
        print(f"{warning_sign} {report.violations} violations")
