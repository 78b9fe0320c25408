from cohesion_algos.autograd import functional
from cohesion_algos.autograd.functional import (
    activation,
    batch_norm,
    concat,
    conv2d,
    l2_norm,
    log,
    log_softmax,
    matmul,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    square,
    swish,
    transpose,
)
from cohesion_algos.autograd.grad_check import check_module_gradients, grad_check, relative_error
from cohesion_algos.autograd.tensor import (
    ComputationGraph,
    Function,
    Tensor,
    as_tensor,
    is_grad_enabled,
    no_grad,
)

__all__ = [
    "functional",
    "Tensor",
    "Function",
    "ComputationGraph",
    "as_tensor",
    "no_grad",
    "is_grad_enabled",
    "activation",
    "batch_norm",
    "concat",
    "conv2d",
    "l2_norm",
    "log",
    "log_softmax",
    "matmul",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "sqrt",
    "square",
    "swish",
    "transpose",
    "grad_check",
    "check_module_gradients",
    "relative_error",
]
