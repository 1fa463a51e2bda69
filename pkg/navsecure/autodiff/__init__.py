from navsecure.autodiff.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from navsecure.autodiff.distributions import (
    Categorical,
    DiagonalGaussian,
    bernoulli_log_prob,
    entropy,
    gaussian_log_prob,
    gaussian_sample_logprob,
    kl_diag_gaussian,
    unit_gaussian_log_prob,
)
from navsecure.autodiff.gradcheck import GradientCheckResult, check_gradients
from navsecure.autodiff.nn import GRUCell, Linear, MLP, ParameterSet
from navsecure.autodiff.optim import AdamHyper, adam_step, clip_by_global_norm
from navsecure.autodiff.tensor import (
    Tape,
    Tensor,
    add_n,
    backward,
    concat,
    exp,
    log,
    matmul,
    maximum,
    reduce_mean,
    reduce_sum,
    sigmoid,
    softmax,
    softplus,
    square,
    stack,
    stop_gradient,
    tanh,
)
