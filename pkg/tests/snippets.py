"""Seeded generators of Python snippets for tests and bundled fixtures."""
from __future__ import annotations

import random

NAMES = ["apples", "pears", "cost", "price", "total", "count", "rate", "days", "hours",
         "boxes", "width", "height", "speed", "money", "tax", "items", "score", "weight"]
OPS = ["+", "-", "*", "/", "//", "%"]
CMP = ["<", ">", "<=", ">=", "==", "!="]


def _num(rng):
    return str(rng.randint(1, 99)) if rng.random() < 0.8 else f"{rng.randint(1, 9)}.{rng.randint(0, 9)}"


def _expr(rng, names, depth=0, bool_ops=True):
    r = rng.random()
    if depth > 2 or r < 0.3:
        return rng.choice(names) if names and rng.random() < 0.6 else _num(rng)
    if r < 0.85 or not bool_ops:
        return f"({_expr(rng, names, depth + 1, bool_ops)} {rng.choice(OPS)} {_expr(rng, names, depth + 1, bool_ops)})"
    return f"({_expr(rng, names, depth + 1)} if {_cond(rng, names)} else {_expr(rng, names, depth + 1)})"


def _cond(rng, names, bool_ops=True):
    c = f"{rng.choice(names) if names else _num(rng)} {rng.choice(CMP)} {_num(rng)}"
    if bool_ops and rng.random() < 0.3:
        c += f" {rng.choice(['and', 'or'])} {rng.choice(names) if names else _num(rng)} {rng.choice(CMP)} {_num(rng)}"
    return c


def _indent(lines, n=1):
    return ["    " * n + line for line in lines]


def restricted_program(rng: random.Random, max_stmts=6, depth=0) -> list[str]:
    """Sequential statements, if/elif/else and while only; no boolean or ternary operators."""
    names = []
    lines = []
    for _ in range(rng.randint(1, max_stmts)):
        r = rng.random()
        if depth >= 2 or r < 0.45:
            name = rng.choice(NAMES)
            lines.append(f"{name} = {_expr(rng, names, bool_ops=False) if names else _num(rng)}")
            names.append(name)
        elif r < 0.55:
            lines.append("pass")
        elif r < 0.85:
            lines.append(f"if {_cond(rng, names, bool_ops=False)}:")
            lines += _indent(restricted_program(rng, 3, depth + 1))
            for _ in range(rng.choice([0, 0, 1, 2])):
                lines.append(f"elif {_cond(rng, names, bool_ops=False)}:")
                lines += _indent(restricted_program(rng, 2, depth + 1))
            if rng.random() < 0.5:
                lines.append("else:")
                lines += _indent(restricted_program(rng, 2, depth + 1))
        else:
            lines.append(f"while {_cond(rng, names, bool_ops=False)}:")
            lines += _indent(restricted_program(rng, 3, depth + 1))
    return lines


def random_program(rng: random.Random, max_stmts=8, depth=0) -> list[str]:
    """Arbitrary mix of statements, loops, branches, functions and comprehensions."""
    names = ["n"]
    lines = ["n = " + _num(rng)] if depth == 0 else []
    for _ in range(rng.randint(1, max_stmts)):
        r = rng.random()
        name = rng.choice(NAMES)
        if depth >= 3 or r < 0.35:
            lines.append(f"{name} = {_expr(rng, names)}")
            names.append(name)
        elif r < 0.45:
            lines.append(f"{rng.choice(names)} += {_num(rng)}")
        elif r < 0.6:
            lines.append(f"if {_cond(rng, names)}:")
            lines += _indent(random_program(rng, 3, depth + 1))
            if rng.random() < 0.5:
                lines.append("else:")
                lines += _indent(random_program(rng, 2, depth + 1))
        elif r < 0.7:
            lines.append(f"for i in range({_num(rng)}):")
            lines += _indent(random_program(rng, 3, depth + 1))
        elif r < 0.75:
            lines.append(f"while {rng.choice(names)} > 0:")
            lines += _indent([f"{rng.choice(names)} -= 1"] + random_program(rng, 2, depth + 1))
            lines += _indent(["break"])
        elif r < 0.82:
            lines.append(f"{name} = [x * {_num(rng)} for x in range({_num(rng)}) if x % 2 == 0]")
            names.append(name)
        elif r < 0.9 and depth == 0:
            fn = f"f_{rng.randint(0, 999)}"
            lines.append(f"def {fn}(a, b=1):")
            lines += _indent(random_program(rng, 3, depth + 1) + [f"return a + b"])
            lines.append(f"{name} = {fn}({_num(rng)})")
            names.append(name)
        elif r < 0.95:
            lines += ["try:"] + _indent([f"{name} = {_num(rng)} / {rng.choice(names)}"])
            lines += ["except ZeroDivisionError:"] + _indent([f"{name} = 0"])
            names.append(name)
        else:
            lines.append(f"assert {_cond(rng, names)}")
    return lines


def restricted_snippet(seed: int) -> str:
    return "\n".join(restricted_program(random.Random(seed)))


def random_snippet(seed: int) -> str:
    return "\n".join(random_program(random.Random(seed))) + "\nanswer = n\n"


# -- three-tier corpus -------------------------------------------------------

def tier1(rng: random.Random) -> str:
    """Flat arithmetic: a few assignments and one final expression."""
    a, b, c = rng.sample(NAMES, 3)
    lines = [f"{a} = {rng.randint(2, 60)}", f"{b} = {rng.randint(2, 60)}"]
    if rng.random() < 0.5:
        lines.append(f"{c} = {a} {rng.choice(['+', '*'])} {b}")
        lines.append(f"answer = {c}")
    else:
        lines.append(f"answer = {a} {rng.choice(['+', '-', '*'])} {b}")
    return "\n".join(lines) + "\n"


def tier2(rng: random.Random) -> str:
    """One loop or one branch over a handful of values."""
    a, b, c, d = rng.sample(NAMES, 4)
    lines = [f"{a} = {rng.randint(2, 30)}", f"{b} = {rng.randint(2, 9)}", f"{c} = 0"]
    if rng.random() < 0.5:
        lines += [f"for i in range({a}):",
                  f"    {c} = {c} + {b} * {rng.randint(2, 5)}"]
        lines += [f"if {c} > {rng.randint(20, 80)}:",
                  f"    {d} = {c} - {rng.randint(1, 9)}",
                  "else:",
                  f"    {d} = {c} + {b}",
                  f"answer = {d} / {b}"]
    else:
        lines += [f"while {a} > {b}:",
                  f"    {a} = {a} - {b}",
                  f"    {c} = {c} + 1",
                  f"    if {c} % {rng.randint(2, 4)} == 0:",
                  f"        {a} = {a} - 1",
                  f"answer = {c} * {rng.randint(2, 7)} + {a}"]
    return "\n".join(lines) + "\n"


def tier3(rng: random.Random) -> str:
    """Several functions with nested loops and branches."""
    a, b, c, d, e = rng.sample(NAMES, 5)
    k1, k2, k3 = rng.randint(2, 9), rng.randint(10, 40), rng.randint(2, 5)
    lines = [
        f"def {a}_cost(values, rate):",
        "    result = 0",
        "    for v in values:",
        f"        if v > {k2} and v % {k3} == 0:",
        "            result += v * rate",
        f"        elif v > {k1}:",
        "            for j in range(v % 3):",
        "                result += j",
        "        else:",
        "            result -= 1",
        "    return result",
        "",
        f"def {b}_split(total, parts):",
        "    shares = []",
        "    while total > 0 and parts > 0:",
        "        share = total // parts",
        "        shares.append(share)",
        "        total -= share",
        "        parts -= 1",
        "    return shares",
        "",
        f"def {c}_solve(limit):",
        f"    data = [x * {k3} for x in range(limit) if x % 2 == 1]",
        f"    base = {a}_cost(data, {rng.randint(2, 7)})",
        f"    pieces = {b}_split(base, {rng.randint(3, 6)})",
        "    best = max(pieces) if pieces else 0",
        "    try:",
        "        ratio = best / len(pieces)",
        "    except ZeroDivisionError:",
        "        ratio = 0",
        "    return ratio + base",
        "",
        f"answer = {c}_solve({rng.randint(12, 40)})",
    ]
    if rng.random() < 0.5:
        lines += [
            f"{d} = answer",
            f"for {e} in range({rng.randint(2, 5)}):",
            f"    if {d} > {rng.randint(50, 200)}:",
            f"        {d} = {d} / 2",
            f"answer = {d}",
        ]
    return "\n".join(lines) + "\n"


TIERS = (tier1, tier2, tier3)
