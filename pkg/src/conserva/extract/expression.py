"""Symbolic expressions over state variables and parameters."""

from dataclasses import dataclass
from enum import Enum
from typing import List, Mapping, Sequence, Tuple, Union

import numpy as np

DIVISION_GUARD = 1e-12


class NodeType(Enum):
    """Types of nodes in an expression tree"""
    OPERATOR = 1
    VARIABLE = 2
    CONSTANT = 3


BINARY_OPS = ("add", "sub", "mul", "div")
UNARY_OPS = ("square", "cube", "sqrt", "exp", "log", "sin", "cos")
ARITY = {**{op: 2 for op in BINARY_OPS}, **{op: 1 for op in UNARY_OPS}}
_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


@dataclass(frozen=True)
class Node:
    """Immutable expression tree node; subtrees may be shared"""
    node_type: NodeType
    value: Union[str, float]
    children: Tuple["Node", ...] = ()

    @property
    def size(self) -> int:
        return 1 + sum(child.size for child in self.children)

    @property
    def depth(self) -> int:
        return 1 + max((child.depth for child in self.children), default=0)

    @property
    def is_constant(self) -> bool:
        return self.node_type == NodeType.CONSTANT

    def variables(self) -> List[str]:
        if self.node_type == NodeType.VARIABLE:
            return [self.value]
        found: List[str] = []
        for child in self.children:
            for name in child.variables():
                if name not in found:
                    found.append(name)
        return found

    def __str__(self) -> str:
        return to_infix(self)


def var(name: str) -> Node:
    return Node(NodeType.VARIABLE, name)


def const(value: float) -> Node:
    return Node(NodeType.CONSTANT, float(value))


def apply(op: str, *children: Node) -> Node:
    if op not in ARITY:
        raise ValueError(f"Unknown operator: {op}")
    if len(children) != ARITY[op]:
        raise ValueError(f"{op} takes {ARITY[op]} operand(s), got {len(children)}")
    return Node(NodeType.OPERATOR, op, tuple(children))


def complexity(node: Node) -> int:
    """Node count"""
    return node.size


def _eval(node: Node, env: Mapping[str, np.ndarray], n: int) -> Tuple[np.ndarray, np.ndarray]:
    if node.node_type == NodeType.CONSTANT:
        return np.full(n, node.value, dtype=np.float64), np.ones(n, dtype=bool)
    if node.node_type == NodeType.VARIABLE:
        if node.value not in env:
            raise ValueError(f"Unbound variable: {node.value}")
        return np.asarray(env[node.value], dtype=np.float64), np.ones(n, dtype=bool)

    a, valid = _eval(node.children[0], env, n)
    op = node.value
    if op in BINARY_OPS:
        b, valid_b = _eval(node.children[1], env, n)
        valid = valid & valid_b
        if op == "add":
            return a + b, valid
        if op == "sub":
            return a - b, valid
        if op == "mul":
            return a * b, valid
        bad = np.abs(b) < DIVISION_GUARD
        return a / np.where(bad, 1.0, b), valid & ~bad

    if op == "square":
        return a * a, valid
    if op == "cube":
        return a * a * a, valid
    if op == "sqrt":
        bad = a < 0
        return np.sqrt(np.where(bad, 0.0, a)), valid & ~bad
    if op == "log":
        bad = a <= 0
        return np.log(np.where(bad, 1.0, a)), valid & ~bad
    if op == "exp":
        return np.exp(a), valid
    if op == "sin":
        return np.sin(a), valid
    return np.cos(a), valid


def evaluate(node: Node, env: Mapping[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Values and validity mask; domain errors and non-finite results are flagged, never raised"""
    if not env:
        raise ValueError("evaluation needs at least one bound variable")
    n = len(next(iter(env.values())))
    with np.errstate(all="ignore"):
        values, valid = _eval(node, env, n)
        values = np.broadcast_to(values, (n,)).astype(np.float64)
        valid = valid & np.isfinite(values)
    return values, valid


# Prefix-notation text

def to_prefix(node: Node) -> str:
    if node.node_type == NodeType.CONSTANT:
        return repr(float(node.value))
    if node.node_type == NodeType.VARIABLE:
        return str(node.value)
    return " ".join([node.value] + [to_prefix(child) for child in node.children])


def from_prefix(text: str) -> Node:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty expression")
    node, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in expression: {' '.join(tokens[pos:])}")
    return node


def _parse(tokens: List[str], pos: int) -> Tuple[Node, int]:
    if pos >= len(tokens):
        raise ValueError("expression ended early")
    token = tokens[pos]
    if token in ARITY:
        children = []
        pos += 1
        for _ in range(ARITY[token]):
            child, pos = _parse(tokens, pos)
            children.append(child)
        return apply(token, *children), pos
    try:
        return const(float(token)), pos + 1
    except ValueError:
        return var(token), pos + 1


def to_infix(node: Node) -> str:
    if node.node_type == NodeType.CONSTANT:
        return f"{node.value:.6g}"
    if node.node_type == NodeType.VARIABLE:
        return str(node.value)
    parts = [to_infix(child) for child in node.children]
    if node.value in _INFIX:
        return f"({parts[0]} {_INFIX[node.value]} {parts[1]})"
    if node.value == "square":
        return f"{parts[0]}^2"
    if node.value == "cube":
        return f"{parts[0]}^3"
    return f"{node.value}({parts[0]})"


# Builders for linear-combination candidates

def power_node(base: Node, exponent: int) -> Node:
    if exponent == 1:
        return base
    if exponent == 2:
        return apply("square", base)
    if exponent == 3:
        return apply("cube", base)
    if exponent == 4:
        return apply("square", apply("square", base))
    return apply("mul", power_node(base, exponent - 4), power_node(base, 4))


def product_node(factors: Sequence[Node]) -> Node:
    result = factors[0]
    for factor in factors[1:]:
        result = apply("mul", result, factor)
    return result


def linear_combination(weights: Sequence[float], terms: Sequence[Node], prune: float = 1e-6) -> Node:
    """sum w_i * term_i with |w_i| < prune * max|w| dropped"""
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(terms) or len(terms) == 0:
        raise ValueError("weights and terms must be non-empty and of equal length")
    cutoff = prune * float(np.max(np.abs(weights)))
    result = None
    for w, term in zip(weights, terms):
        if abs(w) < cutoff or w == 0:
            continue
        piece = term if w == 1.0 else apply("mul", const(w), term)
        result = piece if result is None else apply("add", result, piece)
    return result if result is not None else const(0.0)


def affine(node: Node, slope: float, intercept: float) -> Node:
    """slope * node + intercept, skipping identity pieces"""
    if abs(slope) < 1e-12:
        return const(intercept)
    scaled = node if abs(slope - 1.0) < 1e-9 else apply("mul", const(slope), node)
    if abs(intercept) < 1e-12:
        return scaled
    return apply("add", scaled, const(intercept))
