"""Safe arithmetic expressions for custom objectives.

Grammar: numbers, variables ``x``/``y`` or ``x1``..``xn``, binary ``+ - * / ^``
(``×`` and ``÷`` accepted), unary minus, and the functions ``abs``, ``min``, ``max``.
Nothing is ever passed to ``eval``.
"""
from functools import lru_cache
from typing import Callable, List

import numpy as np
import pyparsing as pp

Node = Callable[[np.ndarray], float]

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "×": np.multiply,
    "/": np.divide,
    "÷": np.divide,
    "^": np.power,
}

_FUNCTIONS = {
    "abs": lambda args: abs(args[0]) if len(args) == 1 else _arity_error("abs", 1, len(args)),
    "min": lambda args: min(args),
    "max": lambda args: max(args),
}


def _arity_error(name: str, expected: int, got: int):
    raise ValueError(f"{name}() takes {expected} argument(s), got {got}")


def _variable_index(name: str) -> int:
    if name == "x":
        return 0
    if name == "y":
        return 1
    return int(name[1:]) - 1


def _constant(tokens) -> Node:
    value = float(tokens[0])
    return lambda x: value


def _variable(tokens) -> Node:
    name = tokens[0]
    index = _variable_index(name)
    if index < 0:
        raise pp.ParseFatalException(f"invalid variable {name!r}")

    def node(x):
        if index >= x.size:
            raise ValueError(f"variable {name!r} needs a point of dimension >= {index + 1}")
        return float(x[index])

    return node


def _function(tokens) -> Node:
    name, args = tokens[0], list(tokens[1])
    apply = _FUNCTIONS[name]
    return lambda x: float(apply([arg(x) for arg in args]))


def _unary(tokens) -> Node:
    sign, operand = tokens[0]
    if sign == "+":
        return operand
    return lambda x: -operand(x)


def _left_binary(tokens) -> Node:
    items: List = list(tokens[0])

    def node(x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            acc = items[0](x)
            for op, rhs in zip(items[1::2], items[2::2]):
                acc = float(_BINARY[op](acc, rhs(x)))
        return acc

    return node


def _right_binary(tokens) -> Node:
    items: List = list(tokens[0])

    def node(x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            acc = items[-1](x)
            for op, lhs in zip(reversed(items[1::2]), reversed(items[0:-1:2])):
                acc = float(_BINARY[op](lhs(x), acc))
        return acc

    return node


@lru_cache(maxsize=1)
def _grammar() -> pp.ParserElement:
    expr = pp.Forward()
    number = pp.Regex(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?").set_parse_action(_constant)
    variable = pp.Regex(r"x[0-9]+|x|y").set_parse_action(_variable)
    call = (
        pp.one_of("abs min max")
        + pp.Suppress("(")
        + pp.Group(pp.DelimitedList(expr))
        + pp.Suppress(")")
    ).set_parse_action(_function)
    operand = call | number | variable
    expr <<= pp.infix_notation(
        operand,
        [
            ("^", 2, pp.OpAssoc.RIGHT, _right_binary),
            (pp.one_of("+ -"), 1, pp.OpAssoc.RIGHT, _unary),
            (pp.one_of("* / × ÷"), 2, pp.OpAssoc.LEFT, _left_binary),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _left_binary),
        ],
    )
    return expr


def parse_expression(text: str) -> Node:
    """
    Compile an expression into a function of a point.

    Args:
        text (str): Expression such as ``"(x - 0.7)^2"`` or ``"max(abs(x), y^2)"``

    Returns:
        Node: Callable mapping a coordinate array to a float

    Raises:
        ValueError: If the text does not parse
    """
    try:
        return _grammar().parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as exc:
        raise ValueError(f"invalid expression {text!r}: {exc.msg} (col {exc.col})") from exc
