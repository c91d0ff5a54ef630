"""Report documents: machine (JSON) and table renderings.

Machine output writes every float with 17 significant digits, enough to
round-trip any IEEE double exactly. Non-finite floats become ``null``.
Table output rounds to 6 significant digits for display only.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from regdecomp import __version__
from regdecomp.decomposition import DecompositionReport
from regdecomp.fisher import SelectionSummary, SimulationResult
from regdecomp.price import PricePartition

SCHEMA_VERSION = 1
TOOL = "regdecomp"


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Serialise ``obj`` as JSON with 17-significant-digit floats."""
    return _encode(obj, indent, 0) + "\n"


def document(command: str, inputs: list, options: dict, result: Any) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": TOOL,
        "tool_version": __version__,
        "command": command,
        "inputs": inputs,
        "options": options,
        "result": result,
    }


def input_record(role: str, dataset) -> dict:
    return {"role": role, "name": dataset.name, "sha256": dataset.digest}


# ---------------------------------------------------------------------------
# Result payloads
# ---------------------------------------------------------------------------


def decomposition_payload(report: DecompositionReport) -> dict:
    contexts = {}
    for role, fit, means, zbar, label in (
        ("initial", report.initial_fit, report.initial_means, report.initial_mean_outcome, report.labels[0]),
        ("changed", report.changed_fit, report.changed_means, report.changed_mean_outcome, report.labels[1]),
    ):
        contexts[role] = {
            "label": label,
            "mean_outcome": zbar,
            "coefficients": fit.coefficients,
            "predictor_means": means,
            "dropped_columns": list(fit.dropped),
        }
    return {
        "convention": report.convention.value,
        "total_change": report.total_change,
        "coefficients_fixed_term": report.coefficients_fixed_term,
        "coefficient_change_term": report.coefficient_change_term,
        "interaction_term": report.interaction_term,
        "closure_error": report.closure_error,
        "predictors": list(report.initial_fit.names),
        "contexts": contexts,
        "per_predictor": [
            {
                "index": c.index,
                "name": c.name,
                "coefficients_fixed": c.coefficients_fixed,
                "coefficient_change": c.coefficient_change,
                "interaction": c.interaction,
            }
            for c in report.per_predictor_contributions
        ],
    }


def partition_payload(part: PricePartition) -> dict:
    return {
        "form": part.form.value,
        "selection_term": part.selection_term,
        "transmission_term": part.transmission_term,
        "total": part.total,
        "closure_error": part.closure_error,
    }


def summary_payload(s: SelectionSummary, generation: int) -> dict:
    return {
        "generation": generation,
        "raw_mean_fitness": s.raw_mean_fitness,
        "ftns_term": s.ftns_term,
        "environment_term": s.environment_term,
        "total_change": s.total_change,
        "closure_error": s.closure_error,
        "genetic_variance": s.genetic_variance,
        "genetic_covariance": s.genetic_covariance,
        "ftns_via_excess": s.ftns_via_excess,
        "p_initial": s.p_initial,
        "p_changed": s.p_changed,
        "delta_p": s.delta_p,
        "marginal_fitness": s.marginal_fitness,
        "average_excess": s.average_excess,
        "coefficients_initial": s.coefficients_initial,
        "coefficients_changed": s.coefficients_changed,
        "fixed_loci": list(s.fixed_loci),
        "undefined_loci": list(s.undefined_loci),
        "dropped_initial": list(s.dropped_initial),
        "dropped_changed": list(s.dropped_changed),
    }


def simulation_payload(run: SimulationResult) -> dict:
    return {
        "status": run.status,
        "generations_run": run.generations_run,
        "additive_effects": run.additive_effects,
        "epistasis": run.epistasis,
        "generations": [summary_payload(s, t) for t, s in enumerate(run.summaries)],
    }


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def g6(x) -> str:
    if x is None:
        return "-"
    x = float(x) + 0.0  # no "-0" in tables
    return "nan" if math.isnan(x) else f"{x:.6g}"


def _table(headers: list, rows: list) -> list:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return [fmt(cells[0]), "  ".join("-" * w for w in widths)] + [fmt(r) for r in cells[1:]]


def decomposition_table(report: DecompositionReport) -> str:
    conv = report.convention
    lines = [
        f"Mean change decomposition ({conv.value} convention)",
        f"  {report.labels[0]} mean: {g6(report.initial_mean_outcome)}",
        f"  {report.labels[1]} mean: {g6(report.changed_mean_outcome)}",
        "",
    ]
    rows = [
        ["total change", g6(report.total_change)],
        ["coefficients fixed", g6(report.coefficients_fixed_term)],
        ["coefficient change", g6(report.coefficient_change_term)],
    ]
    if report.interaction_term is not None:
        rows.append(["interaction", g6(report.interaction_term)])
    rows.append(["closure error", g6(report.closure_error)])
    lines += _table(["term", "value"], rows)
    lines.append("")
    headers = ["predictor", "b", "b'", "xbar", "xbar'", "fixed", "change"]
    if report.interaction_term is not None:
        headers.append("interaction")
    body = []
    for c in report.per_predictor_contributions:
        row = [
            c.name,
            g6(report.initial_fit.coefficients[c.index]),
            g6(report.changed_fit.coefficients[c.index]),
            g6(report.initial_means[c.index]),
            g6(report.changed_means[c.index]),
            g6(c.coefficients_fixed),
            g6(c.coefficient_change),
        ]
        if report.interaction_term is not None:
            row.append(g6(c.interaction))
        body.append(row)
    lines += _table(headers, body)
    return "\n".join(lines) + "\n"


def price_table(parts: list) -> str:
    rows = [
        [p.form.value, g6(p.selection_term), g6(p.transmission_term), g6(p.total), g6(p.closure_error)]
        for p in parts
    ]
    lines = ["Price partition of the change in mean", ""]
    lines += _table(["form", "selection", "transmission", "total", "closure error"], rows)
    return "\n".join(lines) + "\n"


def simulation_table(run: SimulationResult) -> str:
    rows = [
        [t, g6(s.raw_mean_fitness), g6(s.ftns_term), g6(s.genetic_variance),
         g6(s.environment_term), g6(s.total_change), g6(s.closure_error)]
        for t, s in enumerate(run.summaries)
    ]
    lines = [f"Haploid selection, seed {run.config.seed}: {run.status} after {run.generations_run} generations", ""]
    lines += _table(["gen", "mean w", "b.dp", "Var(g)", "p'.db", "dwbar", "closure"], rows)
    return "\n".join(lines) + "\n"
