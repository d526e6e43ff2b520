"""Random expression generators shared by parser and acceptance tests."""

import numpy as np

from riemap.scenelang import FUNCTIONS

VARS = ("x", "y", "z")
SAFE_UNARY = ("sin", "cos", "atan", "tanh")


def random_text(rng: np.random.Generator, depth: int, any_function: bool = True) -> str:
    """Fully parenthesized expression text of nesting depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.5:
            return str(VARS[rng.integers(len(VARS))])
        return repr(round(float(rng.uniform(0.1, 3.0)), 3))
    kind = rng.integers(5)
    sub = lambda: random_text(rng, depth - 1, any_function)
    if kind == 0:
        fn = FUNCTIONS[rng.integers(len(FUNCTIONS))] if any_function else SAFE_UNARY[rng.integers(4)]
        if fn == "pow_const":
            fn = "sin"
        return f"{fn}({sub()})"
    if kind == 1:
        return f"-({sub()})"
    if kind == 2:
        return f"({sub()})^{int(rng.integers(0, 4))}"
    op = "+-*"[rng.integers(3)] if kind == 3 else "+*"[rng.integers(2)]
    return f"({sub()}) {op} ({sub()})"


def safe_text(rng: np.random.Generator, depth: int) -> str:
    """Smooth everywhere and bounded on [-1, 1]^3: safe for evaluation tests."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            return str(VARS[rng.integers(len(VARS))])
        return repr(round(float(rng.uniform(0.1, 2.0)), 3))
    sub = lambda: safe_text(rng, depth - 1)
    kind = rng.integers(7)
    if kind == 0:
        return f"{SAFE_UNARY[rng.integers(4)]}({sub()})"
    if kind == 1:
        return f"exp(tanh({sub()}))"
    if kind == 2:
        return f"log(2 + sin({sub()}))"
    if kind == 3:
        return f"({sub()}) / (2 + cos({sub()}))"
    if kind == 4:
        return f"sqrt(1 + ({sub()})^2)"
    if kind == 5:
        return f"-({sub()})"
    return f"({sub()}) {'+-*'[rng.integers(3)]} ({sub()})"
