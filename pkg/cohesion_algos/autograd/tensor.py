import contextlib
import threading
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cohesion_algos.errors import ContractError, DimensionError, NumericalError

DEFAULT_DTYPE = np.float32

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording for the current thread."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def _as_array(data, dtype=None) -> np.ndarray:
    if isinstance(data, Tensor):
        data = data.data
    if dtype is not None:
        return np.asarray(data, dtype=dtype)
    array = np.asarray(data)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(DEFAULT_DTYPE)
    return array


class Function(object):
    """A differentiable operation recorded in the graph.

    Subclasses implement ``forward`` on raw arrays and ``backward`` returning one
    gradient array (or ``None``) per input, already reduced to the input's shape.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError()

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError()

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        fn = cls(*inputs)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = fn.forward(*(t.data for t in inputs), **kwargs)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"{cls.__name__} produced non-finite values")
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, _ctx=fn if requires_grad else None)

    @staticmethod
    def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        """Sum out the axes that broadcasting added or stretched."""
        if grad.shape == tuple(shape):
            return grad
        while grad.ndim > len(shape):
            grad = grad.sum(axis=0)
        for axis, extent in enumerate(shape):
            if extent == 1 and grad.shape[axis] != 1:
                grad = grad.sum(axis=axis, keepdims=True)
        return grad


class Tensor(object):
    """n-dimensional array taking part in reverse-mode differentiation.

    Tensors produced by operations are never mutated; leaves (parameters) are updated
    by replacing ``data``.
    """

    __array_ufunc__ = None

    def __init__(
        self,
        data: Union[np.ndarray, float, Sequence],
        requires_grad: bool = False,
        dtype=None,
        _ctx: Optional[Function] = None,
    ):
        self.data: np.ndarray = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._ctx = _ctx

    # *** properties ***
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def __repr__(self):
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    def __len__(self):
        return len(self.data)

    # *** data handling ***
    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad)

    # *** backward pass ***
    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every tracked leaf reachable from self.

        Repeated calls add to the existing ``grad`` buffers; reset them with
        ``zero_grad`` (or ``Module.zero_grad``) between updates.
        """
        if self.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractError("loss does not depend on any tensor that requires grad")

        graph = ComputationGraph.from_root(self)
        grads: Dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(graph.nodes):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node._ctx is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            input_grads = node._ctx.backward(grad)
            for inp, inp_grad in zip(node._ctx.inputs, input_grads):
                if inp_grad is None or not inp.requires_grad:
                    continue
                if inp_grad.shape != inp.shape:
                    raise DimensionError(
                        f"{type(node._ctx).__name__} returned a gradient of the wrong shape",
                        inp_grad.shape,
                        inp.shape,
                    )
                key = id(inp)
                grads[key] = inp_grad if key not in grads else grads[key] + inp_grad

    # *** operators ***
    def __add__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.add(self, other)

    def __radd__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.add(other, self)

    def __sub__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.sub(self, other)

    def __rsub__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.sub(other, self)

    def __mul__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.mul(self, other)

    def __rmul__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.mul(other, self)

    def __truediv__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.div(self, other)

    def __rtruediv__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.div(other, self)

    def __neg__(self):
        from cohesion_algos.autograd import functional as F

        return F.mul(self, -1.0)

    def __matmul__(self, other):
        from cohesion_algos.autograd import functional as F

        return F.matmul(self, other)

    def reshape(self, *shape) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return F.transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        return F.mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None, keepdims=False) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        return F.max(self, axis=axis, keepdims=keepdims)

    def min(self, axis=None, keepdims=False) -> "Tensor":
        from cohesion_algos.autograd import functional as F

        return F.min(self, axis=axis, keepdims=keepdims)


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


class ComputationGraph(object):
    """Operations reachable from a root, in execution (topological) order.

    ``nodes`` lists every tensor once; ``edges`` are ``(producer, consumer)`` index pairs
    into ``nodes``.
    """

    def __init__(self, nodes: List[Tensor], edges: List[Tuple[int, int]]):
        self.nodes = nodes
        self.edges = edges

    @classmethod
    def from_root(cls, root: Tensor) -> "ComputationGraph":
        order: List[Tensor] = []
        visited = set()
        # iterative post-order DFS
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for inp in node._ctx.inputs:
                    if inp.requires_grad and id(inp) not in visited:
                        stack.append((inp, False))

        index = {id(node): i for i, node in enumerate(order)}
        edges = []
        for consumer in order:
            if consumer._ctx is None:
                continue
            for inp in consumer._ctx.inputs:
                if id(inp) in index:
                    edges.append((index[id(inp)], index[id(consumer)]))
        return cls(order, edges)

    def __len__(self):
        return len(self.nodes)
