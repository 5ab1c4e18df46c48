"""Line-oriented scenario files.

Example::

    # Mach-Zehnder interferometer
    [space]
    src m1 m2 d1 d2

    [init]
    src

    [kernel S1]
    src: m1=0.5,-0.5 m2=0.5,0.5
    m1: identity
    ...

    [chain]
    S1 S2

    [query d2]
    d2 time=2

    [param]
    eta=0.5

Sections: ``[space]`` labels; ``[init]`` one label or ``label=re,im``
pairs; ``[kernel NAME]`` (optionally ``step=VALUE``) with one
``from: to=re,im ...`` line per row, omitted entries zero and
``from: identity`` for a stay-put row; ``[chain]`` kernel names in order;
``[query NAME]`` labels and optional ``time=INDEX``; ``[param]``
``name=value``. Instead of space/init/kernels/chain a file may name a
built-in experiment in a ``[builder]`` section, whose arguments come from
``[param]``.

Numeric fields accept arithmetic over declared parameters
(``m1|h=(1+eta)/2``), written without spaces; ``pi``, ``sqrt``, ``exp``,
``cos`` and ``sin`` are available. This is what lets a file scenario be
scanned over a parameter.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import (
    CProbError,
    RowSumViolation,
    ScenarioParseError,
    ScenarioSyntaxError,
    UnknownLabel,
)
from ..statespace import (
    INIT_SUM_TOL,
    ROW_SUM_TOL,
    Kernel,
    KernelChain,
    StateSpace,
    validate_kernel,
)
from .builders import call_builder
from .model import Scenario

_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)(?:\s+(.*?))?\s*\]$")
_LABEL = re.compile(r"^[^\s=:,#\[\]]+$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "cos": math.cos, "sin": math.sin}
_CONSTS = {"pi": math.pi}


def eval_number(text: str, params: dict[str, float]) -> float:
    """Evaluate a real arithmetic expression over ``params``."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse number {text!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id in params:
                return float(params[node.id])
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ValueError(f"undeclared parameter {node.id!r}")
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(tree)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise ValueError(f"{text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _split_pair(text: str) -> list[str]:
    depth, parts, cur = 0, [], ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return parts


def eval_complex(text: str, params: dict[str, float]) -> complex:
    parts = _split_pair(text)
    if len(parts) == 1:
        return complex(eval_number(parts[0], params), 0.0)
    if len(parts) == 2:
        return complex(eval_number(parts[0], params), eval_number(parts[1], params))
    raise ValueError(f"expected re or re,im, got {text!r}")


@dataclass
class _Row:
    src: str
    line: int
    entries: list[tuple[str, str]] | None  # None means identity


@dataclass
class _KernelDoc:
    name: str
    line: int
    step: str = "1"
    rows: list[_Row] = field(default_factory=list)


@dataclass
class _Doc:
    source: str
    space: list[tuple[str, int]] = field(default_factory=list)
    space_line: int | None = None
    init: list[tuple[str, int]] = field(default_factory=list)
    init_line: int | None = None
    kernels: dict[str, _KernelDoc] = field(default_factory=dict)
    chain: list[tuple[str, int]] = field(default_factory=list)
    chain_line: int | None = None
    queries: dict[str, tuple[list[str], int]] = field(default_factory=dict)
    params: dict[str, float] = field(default_factory=dict)
    builder: tuple[str, int] | None = None
    name: str = ""


def _read(text: str, source: str) -> tuple[_Doc, list[CProbError]]:
    doc, issues = _Doc(source), []
    section, arg, current = None, None, None
    seen_sections: set[tuple[str, str | None]] = set()
    first_comment = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("#") and first_comment is None and section is None:
            first_comment = stripped.lstrip("#").strip()
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            section, arg = m.group(1).lower(), m.group(2)
            key = (section, arg if section in ("kernel", "query") else None)
            if key in seen_sections and section not in ("param",):
                issues.append(ScenarioSyntaxError(f"duplicate section [{line[1:-1]}]", lineno))
            seen_sections.add(key)
            current = None
            if section == "kernel":
                parts = (arg or "").split()
                if not parts or not _LABEL.match(parts[0]):
                    issues.append(ScenarioSyntaxError("kernel section needs a name: [kernel NAME]", lineno))
                    section = None
                    continue
                current = _KernelDoc(parts[0], lineno)
                for extra in parts[1:]:
                    if extra.startswith("step="):
                        current.step = extra[5:]
                    else:
                        issues.append(ScenarioSyntaxError(f"unexpected {extra!r} in kernel header", lineno))
                doc.kernels[current.name] = current
            elif section == "query":
                if not arg or not _LABEL.match(arg):
                    issues.append(ScenarioSyntaxError("query section needs a name: [query NAME]", lineno))
                    section = None
                    continue
                doc.queries[arg] = ([], lineno)
            elif section == "space":
                doc.space_line = lineno
            elif section == "init":
                doc.init_line = lineno
            elif section == "chain":
                doc.chain_line = lineno
            elif section in ("param", "builder"):
                pass
            else:
                issues.append(ScenarioSyntaxError(f"unknown section [{section}]", lineno))
                section = None
            continue

        if section is None:
            issues.append(ScenarioSyntaxError(f"content outside any section: {line!r}", lineno))
        elif section == "space":
            for tok in line.split():
                if not _LABEL.match(tok):
                    issues.append(ScenarioSyntaxError(f"invalid state label {tok!r}", lineno))
                else:
                    doc.space.append((tok, lineno))
        elif section == "init":
            doc.init.extend((tok, lineno) for tok in line.split())
        elif section == "kernel":
            src, sep, rest = line.partition(":")
            src = src.strip()
            if not sep or not _LABEL.match(src):
                issues.append(ScenarioSyntaxError(f"expected 'from: to=re,im ...', got {line!r}", lineno))
                continue
            toks = rest.split()
            if toks == ["identity"]:
                current.rows.append(_Row(src, lineno, None))
                continue
            entries = []
            for tok in toks:
                dst, eq, val = tok.partition("=")
                if not eq or not dst or not val:
                    issues.append(ScenarioSyntaxError(f"expected to=re,im, got {tok!r}", lineno))
                else:
                    entries.append((dst, val))
            current.rows.append(_Row(src, lineno, entries))
        elif section == "chain":
            doc.chain.extend((tok, lineno) for tok in line.split())
        elif section == "query":
            doc.queries[arg][0].extend(line.split())
        elif section == "param":
            for tok in line.split():
                name, eq, val = tok.partition("=")
                if not eq or not _NAME.match(name):
                    issues.append(ScenarioSyntaxError(f"expected name=value, got {tok!r}", lineno))
                    continue
                try:
                    doc.params[name] = eval_number(val, {})
                except ValueError as exc:
                    issues.append(ScenarioSyntaxError(str(exc), lineno))
        elif section == "builder":
            toks = line.split()
            if doc.builder is not None or len(toks) != 1:
                issues.append(ScenarioSyntaxError("builder section takes exactly one name", lineno))
            else:
                doc.builder = (toks[0], lineno)
    doc.name = first_comment or ""
    return doc, issues


def _compile_queries(doc: _Doc, space: StateSpace, n_steps: int, issues: list):
    queries = {}
    for qname, (toks, qline) in doc.queries.items():
        members, time_index = [], None
        for tok in toks:
            if tok.startswith("time="):
                try:
                    time_index = int(tok[5:])
                except ValueError:
                    issues.append(ScenarioSyntaxError(f"query {qname!r}: bad time {tok!r}", qline))
                    continue
                if not 0 <= time_index <= n_steps:
                    issues.append(ScenarioSyntaxError(
                        f"query {qname!r}: time {time_index} outside 0..{n_steps}", qline))
                    time_index = None
            elif tok not in space:
                issues.append(UnknownLabel(f"query {qname!r} references undeclared state {tok!r}", qline))
            else:
                members.append(tok)
        if not members:
            issues.append(ScenarioSyntaxError(f"query {qname!r} has no states", qline))
            continue
        queries[qname] = space.prop(members, time_index)
    return queries


def _compile_builder(doc: _Doc, params: dict, row_tol: float) -> Scenario:
    name, line = doc.builder
    issues: list = []
    for sec, present in (("space", doc.space_line), ("init", doc.init_line), ("chain", doc.chain_line)):
        if present is not None:
            issues.append(ScenarioSyntaxError(f"[{sec}] cannot be combined with [builder]", present))
    for k in doc.kernels.values():
        issues.append(ScenarioSyntaxError("[kernel] cannot be combined with [builder]", k.line))
    if issues:
        raise ScenarioParseError(issues, doc.source)
    try:
        built = call_builder(name, dict(params))
    except CProbError as exc:
        raise ScenarioParseError([ScenarioSyntaxError(f"builder {name!r}: {exc}", line)], doc.source) from None
    queries = built.queries
    if doc.queries:
        queries = _compile_queries(doc, built.space, len(built.chain), issues)
        if issues:
            raise ScenarioParseError(issues, doc.source)
    return Scenario(built.space, built.init, built.chain, queries, dict(built.params),
                    name=doc.name or built.name, origin=name,
                    rebuild=lambda p: _compile(doc, p, row_tol), row_tol=row_tol)


def _compile(doc: _Doc, params: dict, row_tol: float = ROW_SUM_TOL) -> Scenario:
    if doc.builder is not None:
        return _compile_builder(doc, params, row_tol)

    issues: list = []
    if not doc.space:
        raise ScenarioParseError([ScenarioSyntaxError("missing [space] section", doc.space_line)], doc.source)
    labels, seen = [], set()
    for lab, line in doc.space:
        if lab in seen:
            issues.append(ScenarioSyntaxError(f"duplicate state label {lab!r}", line))
        else:
            seen.add(lab)
            labels.append(lab)
    space = StateSpace(tuple(labels))

    def number(text, line, what):
        try:
            return eval_complex(text, params)
        except ValueError as exc:
            issues.append(ScenarioSyntaxError(f"{what}: {exc}", line))
            return 0j

    # init
    init = np.zeros(space.dimension, dtype=complex)
    if not doc.init:
        issues.append(ScenarioSyntaxError("missing [init] section", doc.init_line))
    elif len(doc.init) == 1 and "=" not in doc.init[0][0]:
        lab, line = doc.init[0]
        if lab in space:
            init[space.index(lab)] = 1.0
        else:
            issues.append(UnknownLabel(f"init references undeclared state {lab!r}", line))
    else:
        for tok, line in doc.init:
            lab, eq, val = tok.partition("=")
            if not eq:
                issues.append(ScenarioSyntaxError(f"expected label=re,im in [init], got {tok!r}", line))
            elif lab not in space:
                issues.append(UnknownLabel(f"init references undeclared state {lab!r}", line))
            else:
                init[space.index(lab)] += number(val, line, f"init {lab}")
        total = init.sum()
        if abs(total - 1) > INIT_SUM_TOL:
            issues.append(RowSumViolation(
                f"initial complex probabilities sum to {total:.12g} (deviation {abs(total - 1):.3g})",
                doc.init[0][1]))

    # kernels
    kernels: dict[str, Kernel] = {}
    for kd in doc.kernels.values():
        try:
            step = eval_number(kd.step, params)
        except ValueError as exc:
            issues.append(ScenarioSyntaxError(f"kernel {kd.name}: step {exc}", kd.line))
            step = 1.0
        if not step > 0:
            issues.append(ScenarioSyntaxError(f"kernel {kd.name}: step must be positive", kd.line))
            step = 1.0
        a = np.zeros((space.dimension, space.dimension), dtype=complex)
        row_lines: dict[str, int] = {}
        bad = False
        for row in kd.rows:
            if row.src not in space:
                issues.append(UnknownLabel(f"kernel {kd.name}: undeclared state {row.src!r}", row.line))
                bad = True
                continue
            if row.src in row_lines:
                issues.append(ScenarioSyntaxError(
                    f"kernel {kd.name}: row {row.src!r} already given on line {row_lines[row.src]}", row.line))
                bad = True
                continue
            row_lines[row.src] = row.line
            i = space.index(row.src)
            if row.entries is None:
                a[i, i] = 1.0
                continue
            for dst, val in row.entries:
                if dst not in space:
                    issues.append(UnknownLabel(f"kernel {kd.name}: undeclared state {dst!r}", row.line))
                    bad = True
                    continue
                a[i, space.index(dst)] += number(val, row.line, f"kernel {kd.name} entry {row.src}->{dst}")
        k = Kernel(space, a, step, kd.name)
        if not bad:
            for v in validate_kernel(k, row_tol).violations:
                line = row_lines.get(v.label, kd.line)
                missing = "" if v.label in row_lines else " (row missing)"
                issues.append(RowSumViolation(
                    f"kernel {kd.name}: row {v.label!r}{missing} sums to {v.row_sum:.12g} "
                    f"(deviation {v.deviation:.3g})", line))
        kernels[kd.name] = k

    chain_kernels = []
    for name, line in doc.chain:
        if name not in kernels:
            issues.append(UnknownLabel(f"chain references undeclared kernel {name!r}", line))
        else:
            chain_kernels.append(kernels[name])
    chain = KernelChain(space, tuple(chain_kernels))

    if doc.queries:
        queries = _compile_queries(doc, space, len(chain), issues)
    else:
        queries = {lab: space.prop(lab) for lab in space.labels}

    if issues:
        raise ScenarioParseError(issues, doc.source)
    return Scenario(space, init, chain, queries, dict(params), name=doc.name,
                    rebuild=lambda p: _compile(doc, p, row_tol), row_tol=row_tol)


def parse_scenario(text: str, source: str = "<string>", *, row_tol: float = ROW_SUM_TOL) -> Scenario:
    """Parse and validate a scenario.

    Raises :class:`ScenarioParseError` listing every problem found, each
    tagged with its line number.
    """
    doc, issues = _read(text, source)
    if issues:
        raise ScenarioParseError(issues, source)
    return _compile(doc, dict(doc.params), row_tol)


def load_scenario(path: str | Path, *, row_tol: float = ROW_SUM_TOL) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path), row_tol=row_tol)


def fixture_path(name: str) -> Path:
    """Path of a scenario file shipped with the package, e.g. ``"mach_zehnder.scn"``."""
    return Path(str(resources.files("cprob") / "data" / name))


def _num(x: float) -> str:
    return repr(float(x))


def _cnum(z: complex) -> str:
    return f"{_num(z.real)},{_num(z.imag)}"


def serialize(s: Scenario, *, explicit: bool = False) -> str:
    """Render a scenario in the file format.

    Built-in scenarios are written as ``[builder]`` files unless
    ``explicit`` is set, in which case every kernel is written out with
    its current numeric entries; parameters are kept for reference but no
    longer drive the kernels.
    """
    out = []
    if s.name:
        out += [f"# {s.name}", ""]
    space = s.space
    if s.origin is not None and not explicit:
        out += ["[builder]", s.origin, ""]
    else:
        out += ["[space]", " ".join(space.labels), "", "[init]"]
        lab = s.init_label()
        if lab is not None:
            out.append(lab)
        else:
            out.append(" ".join(f"{space.labels[i]}={_cnum(s.init[i])}" for i in np.flatnonzero(s.init)))
        out.append("")

        names: dict[int, str] = {}
        used: set[str] = set()
        order = []
        for k in s.chain:
            if id(k) in names:
                continue
            name = k.name if k.name and k.name not in used else f"K{len(used) + 1}"
            while name in used:
                name += "_"
            names[id(k)] = name
            used.add(name)
            order.append(k)
        for k in order:
            header = f"[kernel {names[id(k)]}" + (f" step={_num(k.step)}]" if k.step != 1 else "]")
            out.append(header)
            for i, src in enumerate(space.labels):
                row = k.entries[i]
                nz = np.flatnonzero(row)
                if len(nz) == 1 and nz[0] == i and row[i] == 1:
                    out.append(f"{src}: identity")
                else:
                    cells = " ".join(f"{space.labels[j]}={_cnum(row[j])}" for j in nz)
                    out.append(f"{src}: {cells}".rstrip())
            out.append("")
        out += ["[chain]", " ".join(names[id(k)] for k in s.chain), ""]

    for qname, q in s.queries.items():
        out.append(f"[query {qname}]")
        line = " ".join(q.ordered_members())
        if q.time_index is not None:
            line += f" time={q.time_index}"
        out += [line, ""]
    if s.params:
        out.append("[param]")
        out += [f"{k}={_num(v)}" for k, v in s.params.items()]
        out.append("")
    return "\n".join(out).rstrip() + "\n"
