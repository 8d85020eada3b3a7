"""Deterministic LP-format text export/import for external-solver exchange."""

from __future__ import annotations

import math
import re

from surgeplan.solver.linear import BINARY, EQ, GE, INTEGER, LE, LinearModel

_SENSE_TOKEN = {LE: "<=", GE: ">=", EQ: "="}
_NAME_RE = re.compile(r"[^A-Za-z0-9_]")


def _safe_name(idx: int, name: str) -> str:
    return f"x{idx}_{_NAME_RE.sub('_', name)}" if name else f"x{idx}"


def _fmt(value: float) -> str:
    return repr(float(value))


def write_lp(model: LinearModel) -> str:
    """Render the model as LP-format text with stable variable/row ordering."""
    names = [_safe_name(i, v.name) for i, v in enumerate(model.variables)]
    lines = ["Minimize", " obj:"]
    terms = []
    for i in range(model.n_vars):
        coef = model.objective.get(i)
        if coef:
            terms.append(f" {'+' if coef >= 0 else '-'} {_fmt(abs(coef))} {names[i]}")
    lines.extend(terms or [" 0 " + (names[0] if names else "x0")])
    lines.append("Subject To")
    for r, con in enumerate(model.constraints):
        parts = [f" c{r}:"]
        for j in sorted(con.coefs):
            coef = con.coefs[j]
            parts.append(f" {'+' if coef >= 0 else '-'} {_fmt(abs(coef))} {names[j]}")
        if not con.coefs:
            parts.append(f" 0 {names[0]}")
        parts.append(f" {_SENSE_TOKEN[con.sense]} {_fmt(con.rhs)}")
        lines.append("".join(parts))
    lines.append("Bounds")
    for i, v in enumerate(model.variables):
        lo = "-inf" if not math.isfinite(v.lb) else _fmt(v.lb)
        hi = "+inf" if not math.isfinite(v.ub) else _fmt(v.ub)
        lines.append(f" {lo} <= {names[i]} <= {hi}")
    generals = [names[i] for i, v in enumerate(model.variables) if v.kind == INTEGER]
    binaries = [names[i] for i, v in enumerate(model.variables) if v.kind == BINARY]
    if generals:
        lines.append("Generals")
        lines.extend(f" {n}" for n in generals)
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {n}" for n in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def _tokenize_terms(expr: str) -> list[tuple[float, str]]:
    tokens = expr.replace("+", " + ").replace("-", " - ").split()
    out = []
    sign = 1.0
    pending: float | None = None
    for tok in tokens:
        if tok == "+":
            sign, pending = 1.0, None
        elif tok == "-":
            sign, pending = -1.0, None
        else:
            try:
                value = float(tok)
                pending = sign * value
            except ValueError:
                out.append((sign if pending is None else pending, tok))
                sign, pending = 1.0, None
    return out


def parse_lp(text: str) -> LinearModel:
    """Parse LP text produced by write_lp (a strict subset of the format)."""
    model = LinearModel()
    section = None
    idx_by_name: dict[str, int] = {}
    constraint_lines: list[str] = []
    objective_expr = ""
    bounds_lines: list[str] = []
    integer_names: set[str] = set()
    binary_names: set[str] = set()

    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        lower = line.lower()
        if lower in ("minimize", "min"):
            section = "obj"
            continue
        if lower in ("subject to", "st", "s.t."):
            section = "cons"
            continue
        if lower == "bounds":
            section = "bounds"
            continue
        if lower in ("generals", "general", "integers"):
            section = "generals"
            continue
        if lower in ("binaries", "binary"):
            section = "binaries"
            continue
        if lower == "end":
            break
        if section == "obj":
            objective_expr += " " + line.split(":", 1)[-1]
        elif section == "cons":
            constraint_lines.append(line.split(":", 1)[-1])
        elif section == "bounds":
            bounds_lines.append(line)
        elif section == "generals":
            integer_names.update(line.split())
        elif section == "binaries":
            binary_names.update(line.split())

    def var_index(name: str) -> int:
        if name not in idx_by_name:
            idx_by_name[name] = model.add_variable(name, lb=-math.inf, ub=math.inf)
        return idx_by_name[name]

    for coef, name in _tokenize_terms(objective_expr):
        model.add_objective_term(var_index(name), coef)

    for r, line in enumerate(constraint_lines):
        m = re.search(r"(<=|>=|=)", line)
        if not m:
            raise ValueError(f"constraint row {r} has no relational operator")
        op = m.group(1)
        lhs, rhs = line.split(op, 1)
        sense = {"<=": LE, ">=": GE, "=": EQ}[op]
        coefs: dict[int, float] = {}
        for coef, name in _tokenize_terms(lhs):
            j = var_index(name)
            coefs[j] = coefs.get(j, 0.0) + coef
        model.add_constraint(f"c{r}", coefs, sense, float(rhs))

    for line in bounds_lines:
        parts = line.split("<=")
        if len(parts) == 3:
            lo, name, hi = parts[0].strip(), parts[1].strip(), parts[2].strip()
            j = var_index(name)
            model.variables[j].lb = -math.inf if lo in ("-inf", "-infinity") else float(lo)
            model.variables[j].ub = math.inf if hi in ("+inf", "inf", "+infinity") else float(hi)
        elif "=" in line:
            name, value = (s.strip() for s in line.split("=", 1))
            j = var_index(name)
            model.variables[j].lb = model.variables[j].ub = float(value)
        else:
            raise ValueError(f"unsupported bounds line: {line!r}")

    for name in integer_names:
        model.variables[var_index(name)].kind = INTEGER
    for name in binary_names:
        j = var_index(name)
        model.variables[j].kind = BINARY
        model.variables[j].lb = max(model.variables[j].lb, 0.0)
        model.variables[j].ub = min(model.variables[j].ub, 1.0)
    return model
