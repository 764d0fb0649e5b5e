"""Structured text reports: `key: value` lines, repeated groups, stable order.

Report bodies are deterministic functions of (config, seeds): every float
is rendered to 12 significant digits and timings appear only on trailing
comment lines (prefix '# '), which are excluded from the body for
comparison purposes.
"""

from __future__ import annotations

import numpy as np

from .equipartition import SolveResult
from .fan import ValidationReport, split_label
from .inscription import InscriptionResult, VerificationReport
from .measure import MassVector


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def fmt_vec(v) -> str:
    return " ".join(fmt(float(x)) for x in np.asarray(v).ravel())


def body_lines(text: str) -> list:
    """Report body for determinism comparisons: drop '# ' comment lines."""
    return [ln for ln in text.splitlines() if not ln.startswith("# ")]


def config_lines(config: dict) -> list:
    return [f"config.{k}: {fmt(v)}" for k, v in sorted(config.items())]


def _mass_lines(prefix: str, mv: MassVector, stderr=None) -> list:
    lines = []
    d = mv.d
    flat = mv.flat
    for j in range(2 * d):
        g, s = split_label(j, d)
        tag = f"{'plus' if s > 0 else 'minus'}.{g}"
        lines.append(f"{prefix}.{tag}: {fmt(float(flat[j]))}")
        if stderr is not None:
            lines.append(f"{prefix}.stderr.{tag}: {fmt(float(stderr[j]))}")
    return lines


def equipartition_report(res: SolveResult, config: dict) -> str:
    lines = ["report: equipartition"]
    cert = res.certificate
    if cert is not None:
        lines.append(f"status: {'certified' if cert.passed else 'not-certified'}")
    else:
        lines.append(f"status: {'converged' if res.converged else 'not-converged'}")
    lines += config_lines(config)
    d = res.motion.d
    for i in range(d):
        lines.append(f"rotation.row.{i}: {fmt_vec(res.motion.rotation[i])}")
    lines.append(f"translation: {fmt_vec(res.motion.translation)}")
    lines += _mass_lines("mass.hard", res.masses_hard)
    lines.append(f"residual.norm: {fmt(res.residual_norm)}")
    lines.append(f"converged: {fmt(res.converged)}")
    lines.append(f"start.chosen: {res.start_index}")
    lines.append(f"starts.run: {len(res.trace)}")
    if cert is not None:
        lines += _mass_lines("oracle.mass", cert.masses, stderr=cert.stderr)
        lines.append(f"certificate.n: {cert.n}")
        lines.append(f"certificate.tol: {fmt(cert.tol)}")
        lines.append(f"certificate.passed: {fmt(cert.passed)}")
        for label, value, allowed in cert.violations:
            lines.append(f"certificate.violation: {label} {fmt(value)} {fmt(allowed)}")
    for tr in res.trace:
        lines.append(
            f"trace.start.{tr['start']}: residual={fmt(tr['residual_norm'])} "
            f"stages={len(tr.get('stages', []))}"
        )
    lines.append(f"# timing.total_seconds: {res.timings.get('total', 0.0):.3f}")
    return "\n".join(lines) + "\n"


def masses_report(mv: MassVector, stderr, config: dict) -> str:
    lines = ["report: masses"]
    lines += config_lines(config)
    lines += _mass_lines("mass", mv, stderr=stderr)
    lines.append(f"mass.total: {fmt(mv.total)}")
    return "\n".join(lines) + "\n"


def validate_fan_report(rep: ValidationReport, config: dict) -> str:
    lines = ["report: validate-fan"]
    lines.append(f"status: {'valid' if rep.valid else 'invalid'}")
    lines += config_lines(config)
    d = rep.fractions.size // 2
    for j in range(2 * d):
        g, s = split_label(j, d)
        tag = f"{'plus' if s > 0 else 'minus'}.{g}"
        lines.append(f"fraction.{tag}: {fmt(float(rep.fractions[j]))}")
    lines.append(f"samples: {rep.n}")
    for clause in rep.failures:
        lines.append(f"failure: {clause}")
    for key, value in sorted(rep.details.items()):
        lines.append(f"detail.{key}: {fmt(value)}")
    return "\n".join(lines) + "\n"


def inscription_report(res: InscriptionResult, ver: VerificationReport,
                       config: dict) -> str:
    lines = ["report: inscribe"]
    passed = res.converged and ver.passed
    lines.append(f"status: {'inscribed' if passed else 'not-converged'}")
    lines += config_lines(config)
    d = res.rotation.shape[0]
    lines.append(f"center: {fmt_vec(res.center)}")
    for i in range(d):
        lines.append(f"rotation.row.{i}: {fmt_vec(res.rotation[i])}")
    lines.append(f"scale: {fmt(res.scale)}")
    for j in range(2 * d):
        g, s = split_label(j, d)
        tag = f"{'plus' if s > 0 else 'minus'}.{g}"
        lines.append(f"vertex.{tag}: {fmt_vec(res.vertices[j])}")
        lines.append(f"vertex.gauge.{tag}: {fmt(float(ver.gauges[j]))}")
    lines.append(f"residual.norm: {fmt(res.residual_norm)}")
    lines.append(f"max.gauge.error: {fmt(ver.max_gauge_error)}")
    lines.append(f"converged: {fmt(res.converged)}")
    lines.append(f"verified: {fmt(ver.passed)}")
    return "\n".join(lines) + "\n"
