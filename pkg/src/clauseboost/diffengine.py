"""Reverse-mode automatic differentiation over dense float64 matrices.

Define-by-run: every operation builds a Node holding its value, its parents
and a closure that routes the output gradient back to the parents. A Tape is
the topological schedule extracted from the node reachable from a root; the
backward pass walks it in reverse.

Only the operators needed by the enhancer architecture are provided. All
values are 2-D numpy arrays (row-major, float64); scalars are 1x1 matrices.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def _as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    return a


class Node:
    """One value in the computation graph.

    `value` and `grad` always share a shape. `op` records the operator kind
    for debugging; `parents` the nodes this one was computed from.
    """

    __slots__ = ("value", "grad", "op", "parents", "requires_grad", "_backward")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["Node", ...] = (),
        op: str = "leaf",
        requires_grad: bool = False,
        backward: Callable[[np.ndarray], None] | None = None,
    ):
        self.value = _as_matrix(value)
        self.grad = np.zeros_like(self.value)
        self.parents = parents
        self.op = op
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._backward = backward

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[:] = 0.0

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.value.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Topologically ordered nodes reachable from one root.

    Reverse iteration visits every node after all of its consumers, which is
    exactly the order the backward pass needs.
    """

    def __init__(self, nodes: list[Node]):
        self.nodes = nodes

    @classmethod
    def from_root(cls, root: Node) -> "Tape":
        order: list[Node] = []
        seen: set[int] = set()
        stack: list[tuple[Node, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        return cls(order)


def param(init, rng: np.random.Generator | None = None, scale: float = 1.0) -> Node:
    """Trainable leaf. `init` is a matrix, or a shape tuple sampled uniformly
    in [-scale, scale] from `rng`."""
    if isinstance(init, tuple):
        if rng is None:
            raise ValueError("shape init requires an rng")
        init = rng.uniform(-scale, scale, size=init)
    return Node(init, op="param", requires_grad=True)


def constant(value) -> Node:
    return Node(value, op="constant", requires_grad=False)


def _unary(a: Node, value: np.ndarray, op: str, grad_fn: Callable[[np.ndarray], np.ndarray]) -> Node:
    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += grad_fn(g)

    return Node(value, (a,), op, backward=backward)


def matmul(a: Node, b: Node) -> Node:
    if a.value.shape[1] != b.value.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.value.shape} @ {b.value.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g @ b.value.T
        if b.requires_grad:
            b.grad += a.value.T @ g

    return Node(a.value @ b.value, (a, b), "matmul", backward=backward)


def add(a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise ValueError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad += g

    return Node(a.value + b.value, (a, b), "add", backward=backward)


def add_row_broadcast(a: Node, bias_row: Node) -> Node:
    """a[r, c] + bias_row[0, c] for every row r."""
    if bias_row.value.shape != (1, a.value.shape[1]):
        raise ValueError(f"bias shape {bias_row.value.shape} does not broadcast over {a.value.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g
        if bias_row.requires_grad:
            bias_row.grad += g.sum(axis=0, keepdims=True)

    return Node(a.value + bias_row.value, (a, bias_row), "add_row_broadcast", backward=backward)


def relu(a: Node) -> Node:
    mask = a.value > 0.0  # gradient at exactly 0 is 0
    return _unary(a, np.where(mask, a.value, 0.0), "relu", lambda g: g * mask)


def sigmoid(a: Node) -> Node:
    s = 1.0 / (1.0 + np.exp(-a.value))
    return _unary(a, s, "sigmoid", lambda g: g * s * (1.0 - s))


def mul_scalar(a: Node, s: Node) -> Node:
    """Multiply every entry of `a` by the 1x1 node `s`."""
    if s.value.shape != (1, 1):
        raise ValueError(f"scalar node must be 1x1, got {s.value.shape}")
    k = s.value[0, 0]

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g * k
        if s.requires_grad:
            s.grad += np.sum(g * a.value)

    return Node(a.value * k, (a, s), "mul_scalar", backward=backward)


def scale(a: Node, k: float) -> Node:
    return _unary(a, a.value * k, "scale", lambda g: g * k)


def concat_cols(a: Node, b: Node) -> Node:
    if a.value.shape[0] != b.value.shape[0]:
        raise ValueError(f"concat_cols row mismatch: {a.value.shape} vs {b.value.shape}")
    na = a.value.shape[1]

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g[:, :na]
        if b.requires_grad:
            b.grad += g[:, na:]

    return Node(np.concatenate([a.value, b.value], axis=1), (a, b), "concat_cols", backward=backward)


def sum_nodes(nodes: Sequence[Node]) -> Node:
    if not nodes:
        raise ValueError("sum_nodes needs at least one node")
    shape = nodes[0].value.shape
    for n in nodes:
        if n.value.shape != shape:
            raise ValueError(f"sum_nodes shape mismatch: {n.value.shape} vs {shape}")

    def backward(g: np.ndarray) -> None:
        for n in nodes:
            if n.requires_grad:
                n.grad += g

    total = np.zeros(shape)
    for n in nodes:
        total += n.value
    return Node(total, tuple(nodes), "sum_nodes", backward=backward)


def softmax_rows(a: Node) -> Node:
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            # rowwise Jacobian-vector product: s * (g - <g, s>)
            dot = (g * s).sum(axis=1, keepdims=True)
            a.grad += s * (g - dot)

    return Node(s, (a,), "softmax_rows", backward=backward)


def gather_cols_signed(a: Node, p: Sequence[int], s: Sequence[int]) -> Node:
    """Column i of the output is s[i] * a[:, p[i]]."""
    p = np.asarray(p, dtype=np.intp)
    sg = np.asarray(s, dtype=np.float64)
    if p.shape != sg.shape:
        raise ValueError("index and sign vectors must align")
    if p.size and (p.min() < 0 or p.max() >= a.value.shape[1]):
        raise IndexError(f"column index out of range for width {a.value.shape[1]}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            np.add.at(a.grad, (slice(None), p), g * sg)

    return Node(a.value[:, p] * sg, (a,), "gather_cols_signed", backward=backward)


def scatter_cols_signed(d: Node, p: Sequence[int], s: Sequence[int], out_width: int) -> Node:
    """Inverse routing of gather_cols_signed: column p[i] receives s[i] * d[:, i];
    duplicate targets accumulate, untouched columns stay zero."""
    p = np.asarray(p, dtype=np.intp)
    sg = np.asarray(s, dtype=np.float64)
    if p.shape != sg.shape or p.size != d.value.shape[1]:
        raise ValueError("index/sign vectors must align with input columns")
    if p.size and (p.min() < 0 or p.max() >= out_width):
        raise IndexError(f"column index out of range for width {out_width}")
    out = np.zeros((d.value.shape[0], out_width))
    np.add.at(out, (slice(None), p), d.value * sg)

    def backward(g: np.ndarray) -> None:
        if d.requires_grad:
            d.grad += g[:, p] * sg

    return Node(out, (d,), "scatter_cols_signed", backward=backward)


def segment_sum_rows(a: Node, segment_ids: Sequence[int], n_segments: int) -> Node:
    """Output row k is the sum of input rows r with segment_ids[r] == k;
    segments with no member stay zero."""
    ids = np.asarray(segment_ids, dtype=np.intp)
    if ids.size != a.value.shape[0]:
        raise ValueError("one segment id per row required")
    if ids.size and (ids.min() < 0 or ids.max() >= n_segments):
        raise IndexError(f"segment id out of range for {n_segments} segments")
    out = np.zeros((n_segments, a.value.shape[1]))
    np.add.at(out, ids, a.value)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g[ids]

    return Node(out, (a,), "segment_sum_rows", backward=backward)


def gather_rows(a: Node, row_ids: Sequence[int]) -> Node:
    ids = np.asarray(row_ids, dtype=np.intp)
    if ids.size and (ids.min() < 0 or ids.max() >= a.value.shape[0]):
        raise IndexError(f"row index out of range for {a.value.shape[0]} rows")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            np.add.at(a.grad, ids, g)

    return Node(a.value[ids], (a,), "gather_rows", backward=backward)


def mean_all(a: Node) -> Node:
    n = a.value.size

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.grad += g[0, 0] / n

    return Node(np.array([[a.value.sum() / n]]), (a,), "mean_all", backward=backward)


def backward(root: Node) -> Tape:
    """Seed the root gradient with 1 and accumulate gradients into every
    reachable node. The root must be a 1x1 scalar. Returns the tape used."""
    if root.value.shape != (1, 1):
        raise ValueError(f"backward root must be scalar, got shape {root.value.shape}")
    tape = Tape.from_root(root)
    for node in tape.nodes:
        node.zero_grad()
    root.grad[:] = 1.0
    for node in reversed(tape.nodes):
        if node._backward is not None and node.requires_grad:
            node._backward(node.grad)
    return tape


def finite_diff_check(
    fn: Callable[[Sequence[Node]], Node],
    inputs: Sequence[Node],
    h: float = 1e-5,
) -> float:
    """Max relative error between backward gradients and central differences.

    `fn` must rebuild the graph from `inputs` on every call (values are
    perturbed in place between evaluations).
    """
    loss = fn(inputs)
    backward(loss)
    grads = [x.grad.copy() for x in inputs]

    max_rel = 0.0
    for x, g in zip(inputs, grads):
        numeric = np.zeros_like(x.value)
        flat = x.value.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = fn(inputs).value[0, 0]
            flat[i] = orig - h
            down = fn(inputs).value[0, 0]
            flat[i] = orig
            num_flat[i] = (up - down) / (2.0 * h)
        denom = np.maximum(np.abs(numeric) + np.abs(g), 1e-8)
        max_rel = max(max_rel, float(np.max(np.abs(numeric - g) / denom)))
    return max_rel
