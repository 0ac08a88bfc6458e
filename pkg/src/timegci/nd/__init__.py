"""Small float64 autodiff core used by the policy, energy and critic networks."""
from .gradcheck import check_gradients, numerical_grad, relative_error
from .layers import LSTMParams, MLPParams, lstm_sequence, lstm_step, mlp_head
from .optim import Adam, polyak_update
from .tensor import (
    NonFiniteError,
    Tape,
    Tensor,
    absolute,
    add,
    affine,
    as_tensor,
    backward,
    broadcast_to,
    clip,
    concat,
    div,
    elu,
    exp,
    getitem,
    log,
    log_sigmoid,
    matmul,
    mean,
    minimum,
    mul,
    neg,
    no_grad,
    reshape,
    sigmoid,
    softplus,
    square,
    stack,
    sub,
    tanh,
    tsum,
)

__all__ = [
    "Adam", "LSTMParams", "MLPParams", "NonFiniteError", "Tape", "Tensor",
    "absolute", "add", "affine", "as_tensor", "backward", "broadcast_to", "check_gradients", "clip", "concat", "div", "elu",
    "exp", "getitem", "log", "log_sigmoid", "lstm_sequence", "lstm_step", "matmul", "mean", "minimum",
    "mlp_head", "mul", "neg", "no_grad", "numerical_grad", "polyak_update", "relative_error",
    "reshape", "sigmoid", "softplus", "square", "stack", "sub", "tanh", "tsum",
]
