"""JSON model files.

Two formats share one envelope, ``{"format": ..., "version": "1", ...}``:

``pps-tree``
    An explicit tree. The root is ``{"id": 0, "parent": null}``; every other
    node carries ``prob``, ``time``, ``env``, ``history`` (a list of
    ``[time, agent, action]`` records) and ``locals`` (agent to variables).
``pps-protocol``
    A :class:`~pakcheck.protocol.ProtocolSpec`: agents, horizon, the
    initial distribution and ordered rule tables.

Probabilities are always reduced ``"num/den"`` strings (or bare integers as
strings, e.g. ``"1"``); decimals are rejected. Output uses sorted keys and a
fixed indent, so saving is deterministic byte for byte.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .model import GlobalState, LocalState, Node, PakError, PpsTree, canonical_vars
from .protocol import ProtocolError, ProtocolSpec, Rule, TransitionRule

FORMAT_VERSION = "1"
_RATIONAL = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+)\s*)?$")

Model = Union[PpsTree, ProtocolSpec]


class ModelFormatError(PakError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


# -- scalars ------------------------------------------------------------------


def format_rational(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: Any, what: str = "probability") -> Fraction:
    if isinstance(text, float) or (isinstance(text, str) and "." in text):
        raise ModelFormatError("decimal probabilities not allowed; use num/den")
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ModelFormatError(f"{what} must be a \"num/den\" string, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    m = _RATIONAL.match(text)
    if not m:
        raise ModelFormatError(f"malformed {what} {text!r}; expected num/den")
    num, den = int(m.group(1)), int(m.group(2) or 1)
    if den == 0:
        raise ModelFormatError(f"zero denominator in {what} {text!r}")
    return Fraction(num, den)


def _vars_out(vars) -> dict:
    return {k: v for k, v in vars}


def _vars_in(obj, where: str):
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{where}: expected an object of variables")
    for k, v in obj.items():
        if isinstance(v, float) or not isinstance(v, (int, str, bool)):
            raise ModelFormatError(f"{where}: variable {k!r} must be int, bool or string")
    return canonical_vars(obj)


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFormatError(f"{where}: missing field {key!r}")
    return obj[key]


# -- trees --------------------------------------------------------------------


def _tree_to_obj(tree: PpsTree) -> dict:
    nodes = []
    for n in tree.nodes:
        if n.state is None:
            nodes.append({"id": n.id, "parent": n.parent})
            continue
        g = n.state
        nodes.append(
            {
                "id": n.id,
                "parent": n.parent,
                "prob": format_rational(n.prob),
                "time": g.time,
                "env": _vars_out(g.env),
                "history": [list(h) for h in g.history],
                "locals": {ls.agent: _vars_out(ls.vars) for ls in g.locals},
            }
        )
    return {
        "format": "pps-tree",
        "version": FORMAT_VERSION,
        "agents": list(tree.agents),
        "actions": {a: list(xs) for a, xs in tree.actions},
        "nodes": nodes,
    }


def _tree_from_obj(obj: dict) -> PpsTree:
    agents = _need(obj, "agents", "tree")
    actions = obj.get("actions", {})
    nodes = []
    for k, raw in enumerate(_need(obj, "nodes", "tree")):
        where = f"node #{k}"
        nid, parent = _need(raw, "id", where), raw.get("parent")
        if parent is None:
            nodes.append(Node(nid, None))
            continue
        t = _need(raw, "time", where)
        loc = _need(raw, "locals", where)
        if set(loc) != set(agents):
            raise ModelFormatError(f"{where}: locals must list exactly the agents {agents}")
        history = []
        for h in _need(raw, "history", where):
            if not (isinstance(h, list) and len(h) == 3):
                raise ModelFormatError(f"{where}: history records are [time, agent, action]")
            history.append(tuple(h))
        state = GlobalState(
            _vars_in(raw.get("env", {}), where),
            tuple(history),
            tuple(LocalState(a, t, _vars_in(loc[a], f"{where} agent {a}")) for a in agents),
        )
        nodes.append(Node(nid, parent, parse_rational(_need(raw, "prob", where)), state))
    tree = PpsTree(tuple(agents), {a: tuple(xs) for a, xs in actions.items()}, nodes)
    return tree.check()


# -- protocols ----------------------------------------------------------------


def _dist_out(dist) -> list:
    return [{"action": a, "prob": format_rational(p)} for a, p in dist.entries]


def _dist_in(raw, where: str):
    if isinstance(raw, str):
        return raw
    return [(_need(e, "action", where), parse_rational(_need(e, "prob", where))) for e in raw]


def _rule_out(r: Rule) -> dict:
    return {"guard": _vars_out(r.guard), "dist": _dist_out(r.dist)}


def _rule_in(raw, where: str) -> Rule:
    return Rule(_vars_in(raw.get("guard", {}), where), _dist_in(_need(raw, "dist", where), where))


def _spec_to_obj(spec: ProtocolSpec) -> dict:
    return {
        "format": "pps-protocol",
        "version": FORMAT_VERSION,
        "name": spec.name,
        "agents": list(spec.agents),
        "horizon": spec.horizon,
        "initial": [
            {
                "prob": format_rational(p),
                "env": _vars_out(g.env),
                "locals": {ls.agent: _vars_out(ls.vars) for ls in g.locals},
            }
            for g, p in spec.initial
        ],
        "agent_rules": {a: [_rule_out(r) for r in rs] for a, rs in spec.agent_rules.items()},
        "env_rules": [_rule_out(r) for r in spec.env_rules],
        "transition_rules": [
            {"guard": _vars_out(r.guard), "on": dict(r.on), "set": _vars_out(r.set)}
            for r in spec.transition_rules
        ],
    }


def _spec_from_obj(obj: dict) -> ProtocolSpec:
    agents = tuple(_need(obj, "agents", "protocol"))
    initial = []
    for k, raw in enumerate(_need(obj, "initial", "protocol")):
        where = f"initial #{k}"
        loc = _need(raw, "locals", where)
        g = GlobalState(
            _vars_in(raw.get("env", {}), where),
            (),
            tuple(LocalState(a, 0, _vars_in(loc.get(a, {}), where)) for a in agents),
        )
        initial.append((g, parse_rational(_need(raw, "prob", where))))
    rules = obj.get("agent_rules", {})
    unknown = set(rules) - set(agents)
    if unknown:
        raise ModelFormatError(f"agent rules for unknown agents {sorted(unknown)}")
    spec = ProtocolSpec(
        agents=agents,
        horizon=_need(obj, "horizon", "protocol"),
        initial=tuple(initial),
        agent_rules={
            a: tuple(_rule_in(r, f"agent rule {a}[{k}]") for k, r in enumerate(rules.get(a, ())))
            for a in agents
        },
        env_rules=tuple(
            _rule_in(r, f"env rule [{k}]") for k, r in enumerate(obj.get("env_rules", ()))
        ),
        transition_rules=tuple(
            TransitionRule(
                _vars_in(r.get("guard", {}), f"transition rule [{k}]"),
                r.get("on", {}),
                _vars_in(r.get("set", {}), f"transition rule [{k}]"),
            )
            for k, r in enumerate(obj.get("transition_rules", [{}]))
        ),
        name=obj.get("name", ""),
    )
    problems = spec.problems()
    if problems:
        raise ProtocolError("malformed protocol:\n  " + "\n  ".join(problems))
    return spec


# -- public API ---------------------------------------------------------------


def dumps_model(model: Model) -> str:
    if isinstance(model, PpsTree):
        obj = _tree_to_obj(model.check())
    elif isinstance(model, ProtocolSpec):
        obj = _spec_to_obj(model)
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def loads_model(text: str) -> Model:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must hold a JSON object")
    fmt = obj.get("format")
    if obj.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported version {obj.get('version')!r}; expected \"1\"")
    try:
        if fmt == "pps-tree":
            return _tree_from_obj(obj)
        if fmt == "pps-protocol":
            return _spec_from_obj(obj)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model: {exc}") from None
    raise ModelFormatError(f"unknown format {fmt!r}; expected pps-tree or pps-protocol")


def save_model(model: Model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> Model:
    return loads_model(Path(path).read_text(encoding="utf-8"))
