"""Checks every expected segment in latex_cases.json against sympy's LaTeX parser.

Run: python3 latex_oracle.py [--write]
Each case gets an `oracle` field: "agree", "skip: <why>" (cases holding
unsupported markers, which have no numeric meaning) or "diverge: <why>".
Without --write the script fails if any recorded status is stale.
"""
import json
import math
import random
import re
import sys
from pathlib import Path

import sympy
from lark.visitors import CollapseAmbiguities
from sympy.parsing.latex.lark.latex_parser import LarkLaTeXParser
from sympy.parsing.sympy_parser import parse_expr

HERE = Path(__file__).parent
CASES = HERE / "latex_cases.json"

NAMESPACE = {
    "sin": sympy.sin, "cos": sympy.cos, "tan": sympy.tan, "exp": sympy.exp,
    "log": sympy.log, "sqrt": sympy.sqrt, "abs": sympy.Abs, "arcsin": sympy.asin,
    "arccos": sympy.acos, "arctan": sympy.atan,
}


def clean_name(name):
    return re.sub(r"[{}\\ ]", "", name)


def plain_to_sympy(text):
    text = text.replace("^", "**")
    symbols = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", text)) - set(NAMESPACE)
    local = dict(NAMESPACE)
    for s in symbols:
        local[s] = sympy.Symbol(s)
    return parse_expr(text, local_dict=local, evaluate=False)


PARSER = LarkLaTeXParser(transform=False)


def oracle_readings(latex):
    """Every reading of an ambiguous parse, each as a list of segments."""
    readings = []
    for tree in CollapseAmbiguities().transform(PARSER.doparse(latex)):
        expr = PARSER.transformer.transform(tree)
        if isinstance(expr, sympy.core.relational.Relational):
            readings.append([expr.lhs, expr.rhs])
        else:
            readings.append([expr])
    return readings


def matches(got, want):
    if len(got) != len(want):
        return False
    for _ in range(5):
        values = {}
        for g, w in zip(got, want):
            a, b = bind(g, values), bind(w, values)
            if not abs(a - b) <= 1e-9 * max(1.0, abs(a)):
                return False
    return True


def bind(expr, values):
    subs = {}
    for s in expr.free_symbols:
        name = clean_name(s.name)
        if name == "e":
            subs[s] = sympy.E
        elif name == "pi":
            subs[s] = sympy.pi
        else:
            subs[s] = values.setdefault(name, random.uniform(0.5, 1.5))
    return complex(expr.subs(subs).evalf())


def status(case):
    if case.get("unsupported"):
        return "skip: unsupported construct has no numeric meaning"
    try:
        readings = oracle_readings(case["latex"])
    except Exception as exc:  # noqa: BLE001
        return f"diverge: reference parser failed ({type(exc).__name__})"
    want = [plain_to_sympy(e) for e in case["expected"]]
    hits = [r for r in readings if matches(r, want)]
    if not hits:
        return "diverge: " + " | ".join(sympy.sstr(r) for r in readings)
    if len(readings) > 1:
        return f"agree: one of {len(readings)} readings"
    return "agree"


def main():
    random.seed(7)
    cases = json.loads(CASES.read_text())
    stale = 0
    for case in cases:
        s = status(case)
        if case.get("oracle") != s:
            stale += 1
            print(f"{case['latex']!r}: recorded {case.get('oracle')!r}, now {s!r}")
        case["oracle"] = s
    agree = sum(c["oracle"].startswith("agree") for c in cases)
    diverge = sum(c["oracle"].startswith("diverge") for c in cases)
    print(f"{len(cases)} cases: {agree} agree, {diverge} diverge")
    if "--write" in sys.argv:
        CASES.write_text(json.dumps(cases, indent=1, ensure_ascii=False) + "\n")
    elif stale:
        sys.exit(1)


if __name__ == "__main__":
    main()
