"""Dense-tensor reverse-mode engine: graph, layers, loss, optimizer."""

from . import tensor
from .gradcheck import GradCheckReport, grad_check
from .layers import (AvgPool1D, ConcatBranches, Conv1D, Dense, Dropout,
                     Embedding, Flatten, GRU, LSTM, LayerSpec, softmax,
                     softmax_sparse_ce)
from .optim import AdamState, adam_step, clip_global_norm
from .tensor import EngineError, Tensor, backward

__all__ = [
    "AdamState", "AvgPool1D", "ConcatBranches", "Conv1D", "Dense", "Dropout",
    "Embedding", "EngineError", "Flatten", "GRU", "GradCheckReport", "LSTM",
    "LayerSpec", "Tensor", "adam_step", "backward", "clip_global_norm",
    "grad_check", "softmax", "softmax_sparse_ce", "tensor",
]
