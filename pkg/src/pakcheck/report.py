"""Text and JSON rendering of analysis reports.

Every number is printed as a reduced ``num/den`` fraction. Text output adds
a decimal approximation marked with ``≈``.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .analysis import AnalysisReport
from .model import LocalState, Run


def frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def approx(q) -> str:
    q = Fraction(q)
    return f"{frac(q)} (≈ {float(q):.6g})"


def describe_state(ls: LocalState) -> str:
    inner = ", ".join(f"{k}={v}" for k, v in ls.vars)
    return f"{ls.agent}@t{ls.time}{{{inner}}}"


def to_jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return frac(x)
    if isinstance(x, LocalState):
        return {"agent": x.agent, "time": x.time, "vars": {k: v for k, v in x.vars}}
    if isinstance(x, Run):
        return {"index": x.index, "nodes": list(x.nodes)}
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return x


def report_to_dict(rep: AnalysisReport) -> dict:
    return {
        "kind": rep.kind,
        "verdict": rep.verdict.value,
        "values": {k: frac(v) for k, v in rep.values.items()},
        "witnesses": to_jsonable(rep.witnesses),
        "notes": list(rep.notes),
    }


def report_to_json(rep: AnalysisReport) -> str:
    return json.dumps(report_to_dict(rep), sort_keys=True, indent=2, ensure_ascii=False)


def _witness_text(w: dict) -> str:
    parts = []
    for k, v in w.items():
        if isinstance(v, LocalState):
            parts.append(f"{k} {describe_state(v)}")
        elif isinstance(v, Run):
            parts.append(f"{k} #{v.index} via nodes {list(v.nodes)}")
        elif isinstance(v, Fraction):
            parts.append(f"{k} = {approx(v)}")
        else:
            parts.append(f"{k}: {v}")
    return ", ".join(parts)


def report_to_text(rep: AnalysisReport) -> str:
    lines = [f"{rep.kind}: {rep.verdict.value}"]
    for k, v in rep.values.items():
        lines.append(f"  {k} = {approx(v)}")
    for w in rep.witnesses[:10]:
        lines.append(f"  witness: {_witness_text(w)}")
    if len(rep.witnesses) > 10:
        lines.append(f"  ... {len(rep.witnesses) - 10} more witnesses")
    for n in rep.notes:
        lines.append(f"  note: {n}")
    return "\n".join(lines)


def render_report(rep: AnalysisReport, fmt: str = "text") -> str:
    return report_to_json(rep) if fmt == "json" else report_to_text(rep)
