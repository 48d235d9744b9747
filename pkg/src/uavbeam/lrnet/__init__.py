"""Two-layer LSTM location predictor, trained from scratch with numpy."""

from .gradcheck import grad_check
from .io import load_model, save_model
from .lstm import LstmLayerParams, lstm_cell_backward, lstm_cell_forward
from .model import (
    LrnetModel,
    NormalizationSpec,
    backward,
    forward,
    init_model,
    mse_loss,
    normalize,
    predict_angle,
    predict_location,
    predict_multi_step,
    zero_model,
)
from .train import Dataset, OptimizerState, TrainConfig, TrainingExample, adam_step, build_dataset, train

__all__ = [
    "Dataset", "LrnetModel", "LstmLayerParams", "NormalizationSpec", "OptimizerState", "TrainConfig",
    "TrainingExample", "adam_step", "backward", "build_dataset", "forward", "grad_check", "init_model",
    "load_model", "lstm_cell_backward", "lstm_cell_forward", "mse_loss", "normalize", "predict_angle",
    "predict_location", "predict_multi_step", "save_model", "train", "zero_model",
]
