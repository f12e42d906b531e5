"""
Define-by-run computation graph.

Operations executed inside ``with Graph() as g:`` append a Node to the graph's
tape whenever one of their inputs requires gradients. The tape is recorded in
execution order, which is a topological order, so ``backward`` simply walks it
in reverse. Outside an active graph nothing is recorded (inference mode).

The active graph is held in a ContextVar: each thread owns its own graph.
"""

from __future__ import annotations

from contextvars import ContextVar, Token
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from library.errors import NumericError
from library.numerics.tensor import Parameter, Tensor

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_ACTIVE_GRAPH: ContextVar[Graph | None] = ContextVar("active_graph", default=None)


@dataclass(frozen=True)
class Node:
    """One recorded primitive: inputs, output and the rule mapping dL/dout to dL/dinputs."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Graph:
    """Tape of recorded primitives for one forward pass."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self._token: Token[Graph | None] | None = None

    def __enter__(self) -> Graph:
        self._token = _ACTIVE_GRAPH.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _ACTIVE_GRAPH.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: Node) -> None:
        self.nodes.append(node)


def active_graph() -> Graph | None:
    return _ACTIVE_GRAPH.get()


def check_finite(values: np.ndarray, op: str) -> None:
    """Raise NumericError if an operation produced NaN or Inf."""
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{op} produced non-finite values")


def apply_op(
    op: str,
    output: np.ndarray,
    inputs: Sequence[Tensor],
    backward: BackwardFn,
) -> Tensor:
    """
    Wrap a computed array as a Tensor and record it on the active graph.

    This is the extension point for primitives: ``backward`` receives the
    gradient w.r.t. the output and returns one gradient (or None) per input,
    each already shaped like its input.

    Args:
        op: Primitive name (used in error messages)
        output: Computed values
        inputs: Tensors the output depends on
        backward: Gradient rule

    Returns:
        Output tensor, requiring gradients iff any input does and a graph is active
    """
    check_finite(output, op)
    graph = active_graph()
    requires_grad = graph is not None and any(t.requires_grad for t in inputs)
    result = Tensor(output)
    if requires_grad:
        result.requires_grad = True
        assert graph is not None
        graph.record(Node(op=op, inputs=tuple(inputs), output=result, backward=backward))
    return result


def backward(graph: Graph, loss: Tensor) -> None:
    """
    Accumulate d(loss)/d(param) into every Parameter reachable from ``loss``.

    The tape is left intact, so calling backward twice doubles every gradient.
    Parameters that do not influence the loss keep their gradient unchanged.

    Args:
        graph: Graph the loss was computed in
        loss: Single-element tensor
    """
    if loss.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        input_grads = node.backward(upstream)
        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise ValueError(
                    f"{node.op} backward produced gradient of shape {grad.shape} "
                    f"for input of shape {tensor.shape}"
                )
            if isinstance(tensor, Parameter):
                tensor.grad = tensor.grad + grad.astype(tensor.dtype, copy=False)
            else:
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad
