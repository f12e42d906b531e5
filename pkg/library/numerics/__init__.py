"""
Dense tensors with define-by-run reverse-mode differentiation.

Usage:
    >>> w = Parameter(np.ones(3), name="w")
    >>> with Graph() as g:
    ...     loss = ops.sum(w * w)
    >>> backward(g, loss)
    >>> w.grad
    array([2., 2., 2.])
"""

from library.numerics import ops
from library.numerics.gradcheck import GradCheckReport, finite_diff_check
from library.numerics.graph import Graph, Node, active_graph, apply_op, backward
from library.numerics.ops import matmul, softmax
from library.numerics.tensor import DEFAULT_DTYPE, Parameter, Tensor, as_dtype

__all__ = [
    "DEFAULT_DTYPE",
    "GradCheckReport",
    "Graph",
    "Node",
    "Parameter",
    "Tensor",
    "active_graph",
    "apply_op",
    "as_dtype",
    "backward",
    "finite_diff_check",
    "matmul",
    "ops",
    "softmax",
]
