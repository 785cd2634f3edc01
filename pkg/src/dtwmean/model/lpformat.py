"""CPLEX-LP text export of a :class:`~dtwmean.model.ir.Model` and a reader for it.

Quadratic rows are written in ``<=`` form with a bracketed quadratic part,
e.g. ``q_1_2_3: - d_1_2_3 + ... + [ z_3 ^2 ] <= 0.25``. Lazy cut hooks have no
representation in the format and are noted in a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .ir import BINARY, Model

_WIDTH = 78


class ExportError(ValueError):
    pass


class LPParseError(ValueError):
    pass


def _num(v: float, where: str) -> str:
    if not math.isfinite(v):
        raise ExportError(f"non-finite coefficient {v!r} in {where}")
    return repr(float(v))


def _linear_terms(coefs: dict, names: list, where: str) -> list[str]:
    out = []
    for i in sorted(coefs):
        c = coefs[i]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c), where)} {names[i]}")
    return out


def _quad_terms(qcoefs: dict, names: list, where: str) -> list[str]:
    out = []
    for (a, b) in sorted(qcoefs):
        c = qcoefs[(a, b)]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        body = f"{names[a]} ^2" if a == b else f"{names[a]} * {names[b]}"
        out.append(f"{sign} {_num(abs(c), where)} {body}")
    return out


def _wrap(head: str, terms: list[str], tail: str) -> list[str]:
    lines, cur = [], head
    for tok in terms + ([tail] if tail else []):
        if len(cur) + 1 + len(tok) > _WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def _add_q(q: dict, a: int, b: int, c: float) -> None:
    key = (min(a, b), max(a, b))
    q[key] = q.get(key, 0.0) + c


def _quad_row_parts(row) -> tuple[dict, dict, float]:
    # (z - s)^2 - d - M2 + M2 y <= 0
    lin = {row.d: -1.0}
    lin[row.z] = lin.get(row.z, 0.0) - 2.0 * row.s
    rhs = -row.s * row.s
    if row.y is not None:
        row.y.scaled_into(lin, row.big_m2)
        rhs += row.big_m2 - row.big_m2 * row.y.const
    return lin, {(row.z, row.z): 1.0}, rhs


def _persp_row_parts(row) -> tuple[dict, dict, float]:
    # zbar^2 - 2 s zbar y + s^2 y^2 - d y <= 0 with y = sum c_i x_i + c0
    lin: dict = {}
    q: dict = {}
    s = row.s
    c0 = row.y.const
    _add_q(q, row.zbar, row.zbar, 1.0)
    for i, c in row.y.coefs:
        _add_q(q, row.zbar, i, -2.0 * s * c)
        _add_q(q, row.d, i, -c)
        for i2, c2 in row.y.coefs:
            if i <= i2:
                _add_q(q, i, i2, s * s * c * c2 * (1.0 if i == i2 else 2.0))
        lin[i] = lin.get(i, 0.0) + 2.0 * s * s * c * c0
    lin[row.zbar] = lin.get(row.zbar, 0.0) - 2.0 * s * c0
    lin[row.d] = lin.get(row.d, 0.0) - c0
    return lin, q, -s * s * c0 * c0


def export_lp(model: Model) -> str:
    """Render ``model`` in CPLEX LP format with a stable ordering."""
    names = [v.name for v in model.variables]
    out = [f"\\ {model.name}"]
    if model.hooks:
        out.append(f"\\ lazy cut hooks (not exported): {', '.join(model.hooks)}")
    out.append("Minimize" if model.sense == "minimize" else "Maximize")
    obj_terms = _linear_terms(model.objective, names, "objective")
    out.extend(_wrap(" obj:", obj_terms or ["0", names[0]] if names else [], ""))
    out.append("Subject To")
    for row in model.rows:
        terms = _linear_terms(row.coefs, names, row.name)
        if not terms:
            raise ExportError(f"row {row.name} has no terms")
        out.extend(_wrap(f" {row.name}:", terms, f"{row.sense} {_num(row.rhs, row.name)}"))
    for row in model.quad_rows:
        lin, q, rhs = _quad_row_parts(row)
        terms = _linear_terms(lin, names, row.name) + ["["] + _quad_terms(q, names, row.name) + ["]"]
        out.extend(_wrap(f" {row.name}:", terms, f"<= {_num(rhs, row.name)}"))
    for row in model.persp_rows:
        lin, q, rhs = _persp_row_parts(row)
        terms = _linear_terms(lin, names, row.name) + ["["] + _quad_terms(q, names, row.name) + ["]"]
        out.extend(_wrap(f" {row.name}:", terms, f"<= {_num(rhs, row.name)}"))
    out.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        lo = "-inf" if v.lb == -math.inf else _num(v.lb, v.name)
        hi = "+inf" if v.ub == math.inf else _num(v.ub, v.name)
        out.append(f" {lo} <= {v.name} <= {hi}")
    bins = [v.name for v in model.variables if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        out.extend(_wrap("", bins, ""))
    out.append("End")
    return "\n".join(out) + "\n"


@dataclass
class ParsedLP:
    sense: str
    objective: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    binaries: list = field(default_factory=list)
    variables: list = field(default_factory=list)

    @property
    def linear_rows(self) -> list:
        return [r for r in self.rows if not r["quadratic"]]

    @property
    def quadratic_rows(self) -> list:
        return [r for r in self.rows if r["quadratic"]]


_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj",
    "maximize": "obj", "maximise": "obj", "max": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "end": "end",
}
_NUM = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?inf(inity)?$", re.I)


def _parse_expr(tokens: list[str], where: str):
    lin: dict = {}
    quad: dict = {}
    i, sign, coef, inq = 0, 1.0, None, False
    while i < len(tokens):
        t = tokens[i]
        if t == "[":
            inq = True
        elif t == "]":
            inq = False
        elif t in "+-":
            sign = -1.0 if t == "-" else 1.0
        elif _NUM.match(t) and coef is None:
            coef = float(t)
        else:
            c = sign * (1.0 if coef is None else coef)
            if inq and i + 1 < len(tokens) and tokens[i + 1] == "^2":
                quad[(t, t)] = quad.get((t, t), 0.0) + c
                i += 1
            elif inq and i + 2 < len(tokens) and tokens[i + 1] == "*":
                key = (t, tokens[i + 2])
                quad[key] = quad.get(key, 0.0) + c
                i += 2
            elif inq:
                raise LPParseError(f"bad quadratic term near {t!r} in {where}")
            else:
                lin[t] = lin.get(t, 0.0) + c
            sign, coef = 1.0, None
        i += 1
    return lin, quad


def parse_lp(text: str) -> ParsedLP:
    """Read the subset of the LP format written by :func:`export_lp`."""
    section = None
    chunks: dict = {"obj": [], "rows": [], "bounds": [], "bin": [], "gen": []}
    sense = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                sense = "maximize" if key.startswith("max") else "minimize"
            if section == "end":
                break
            continue
        if section is None:
            raise LPParseError(f"content before any section: {line!r}")
        chunks[section].append(line)
    if sense is None:
        raise LPParseError("missing objective section")
    out = ParsedLP(sense)
    toks = " ".join(chunks["obj"]).split()
    if toks and toks[0].endswith(":"):
        toks = toks[1:]
    out.objective, _ = _parse_expr(toks, "objective")

    names: list = []
    seen: set = set()

    def note(name):
        if name not in seen and not _NUM.match(name):
            seen.add(name)
            names.append(name)

    current: list = []
    rows_tokens: list = []
    for tok in " ".join(chunks["rows"]).replace("[", " [ ").replace("]", " ] ").split():
        if tok.endswith(":") and current and any(t in ("<=", ">=", "=", "<", ">", "=<", "=>") for t in current):
            rows_tokens.append(current)
            current = []
        current.append(tok)
    if current:
        rows_tokens.append(current)
    for toks in rows_tokens:
        name = toks[0][:-1] if toks[0].endswith(":") else f"R{len(out.rows)}"
        body = toks[1:] if toks[0].endswith(":") else toks
        op_at = [i for i, t in enumerate(body) if t in ("<=", ">=", "=", "<", ">", "=<", "=>")]
        if len(op_at) != 1 or op_at[0] != len(body) - 2:
            raise LPParseError(f"cannot parse row {name}")
        lin, quad = _parse_expr(body[:op_at[0]], name)
        op = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(body[op_at[0]], body[op_at[0]])
        for v in lin:
            note(v)
        for a, b in quad:
            note(a)
            note(b)
        out.rows.append({"name": name, "linear": lin, "quadratic": quad, "sense": op,
                         "rhs": float(body[-1])})
    for line in chunks["bounds"]:
        parts = line.split()
        if len(parts) == 5 and parts[1] == "<=" and parts[3] == "<=":
            out.bounds[parts[2]] = (float(parts[0]), float(parts[4]))
            note(parts[2])
        elif len(parts) == 2 and parts[1].lower() == "free":
            out.bounds[parts[0]] = (-math.inf, math.inf)
            note(parts[0])
        else:
            raise LPParseError(f"cannot parse bound {line!r}")
    for line in chunks["bin"]:
        for name in line.split():
            out.binaries.append(name)
            note(name)
    for v in out.objective:
        note(v)
    out.variables = names
    return out
