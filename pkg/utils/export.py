"""Export utilities: behavior CSV and fixed-width text reports."""
from pathlib import Path

from core.behavior import Behavior
from utils.formatting import format_residual, format_sites, format_value, format_verdict


def export_behavior_csv(behavior: Behavior) -> str:
    """Long-format behavior table as a CSV string (one row per input/outcome tuple)."""
    frame = behavior.to_frame()
    if frame.empty:
        return ""
    return frame.to_csv(index=False)


def write_behavior_csv(path, behavior: Behavior):
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    filepath.write_text(export_behavior_csv(behavior), encoding="utf-8")


def export_certification_report_text(report: dict) -> str:
    """Fixed-width text rendering of a certification report dict.

    Args:
        report: CertReport.to_dict() output.

    Returns:
        Formatted text report string.
    """
    sc = report["scenario"]
    lines = []
    lines.append("=" * 70)
    lines.append(f"  CERTIFICATION REPORT: {sc['variant']} N={sc['n']}")
    lines.append(f"  Verdict: {format_verdict(report['passed'])}")
    lines.append("=" * 70)
    lines.append("")

    chsh = report["chsh"]
    lines.append(f"3-CHSH (target {format_value(chsh['target'])})")
    lines.append("-" * 70)
    lines.append(f"{'Pair':<6} {'Block 1':>13} {'Block 2':>13} {'Block 3':>13} {'Total':>13} {'Dev':>10} Verdict")
    lines.append("-" * 70)
    for p in chsh["pairs"]:
        b1, b2, b3 = p["blocks"]
        lines.append(f"{p['pair']:<6} {b1:>13.9f} {b2:>13.9f} {b3:>13.9f} {p['total']:>13.9f} "
                     f"{format_residual(p['deviation']):>10} {format_verdict(p['passed'])}")
    lines.append("-" * 70)
    if chsh["failing_pairs"]:
        lines.append(f"  Failing pairs: {', '.join(str(j) for j in chsh['failing_pairs'])}")
    lines.append("")

    tomo = report["tomography"]
    lines.append("TOMOGRAPHY")
    lines.append("-" * 40)
    lines.append(f"  Max residual:       {format_residual(tomo['max_residual'])}  {format_verdict(tomo['passed'])}")
    lines.append(f"  Fidelity with psi:  {format_value(tomo.get('target_fidelity'))}")
    lines.append(f"  Fidelity with psi*: {format_value(tomo.get('conjugate_fidelity'))}")
    lines.append("")

    align = report["alignment"]
    if align["max_residual"] is not None:
        lines.append("ALIGNMENT")
        lines.append("-" * 40)
        lines.append(f"  Max residual:       {format_residual(align['max_residual'])}  "
                     f"{format_verdict(align['passed'])}")
        lines.append("")

    tol = report["tolerance"]
    lines.append(f"Tolerances: chsh {format_residual(tol['chsh'])}, tomography "
                 f"{format_residual(tol['tomography'])}, alignment {format_residual(tol['alignment'])}")
    return "\n".join(lines)


def export_extraction_report_text(report: dict) -> str:
    """Fixed-width text rendering of an extraction report dict."""
    lines = []
    lines.append("=" * 70)
    lines.append(f"  EXTRACTION REPORT: {report.get('model', '')} ({report.get('variant', '')} "
                 f"N={report.get('n', '')})")
    lines.append("=" * 70)
    lines.append("")
    lines.append(f"  alpha (psi branch):        {format_value(report['alpha'], 12)}")
    lines.append(f"  1 - alpha (psi* branch):   {format_value(report['conjugate_weight'], 12)}")
    lines.append(f"  Fidelity with flagged psi: {format_value(report['fidelity'], 12)}")
    lines.append(f"  Junk residual:             {format_residual(report['residual'])}")
    lines.append(f"  Channel trace:             {format_value(report['trace'], 12)}")
    lines.append("")
    lines.append("FLAG POPULATIONS")
    lines.append("-" * 40)
    for pattern, weight in report["flag_pattern"].items():
        if weight > 1e-12:
            lines.append(f"  |{pattern}>  {format_value(weight, 12)}")
    lines.append("")
    lines.append("ANTICOMMUTATORS (per pair)")
    lines.append("-" * 40)
    for j, residuals in enumerate(report["anticommutators"], start=1):
        parts = ", ".join(f"{k} {format_residual(v)}" for k, v in residuals.items())
        lines.append(f"  {j}: {parts}")
    certification = report.get("certification")
    if certification is not None:
        lines.append("")
        lines.append(f"Pre-check: {format_verdict(certification['passed'])}")
    return "\n".join(lines)


def export_pt_report_text(report: dict) -> str:
    """Fixed-width text rendering of a partial-transpose spectrum listing."""
    lines = []
    lines.append("=" * 70)
    lines.append(f"  PARTIAL TRANSPOSE on sites {format_sites(report['subset'])}")
    lines.append("=" * 70)
    lines.append("")
    lines.append(f"{'#':>4} {'Eigenvalue':>22}")
    lines.append("-" * 40)
    for i, v in enumerate(report["eigenvalues"], start=1):
        lines.append(f"{i:>4} {v:>22.15f}")
    lines.append("-" * 40)
    lines.append(f"  Sum:         {format_value(report['sum'], 12)}")
    lines.append(f"  Min / max:   {format_value(report['min_eig'], 12)} / {format_value(report['max_eig'], 12)}")
    lines.append(f"  In [-1/2, 1]: {'yes' if report['within_bounds'] else 'no'}")
    lines.append(f"  Product across cut: {'yes' if report['separable'] else 'no'}")
    schmidt = report.get("schmidt_spectrum")
    if schmidt:
        lines.append("")
        lines.append("FROM SCHMIDT COEFFICIENTS")
        lines.append("-" * 40)
        for value, tag in zip(schmidt["eigenvalues"], schmidt["tags"]):
            lines.append(f"  {value:>22.15f}  {tag}")
    return "\n".join(lines)
