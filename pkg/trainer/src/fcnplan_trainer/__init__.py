"""Training pipeline for the fcnplan inference engine: reads FPD datasets,
trains the fully convolutional path predictor, and exports FCNW weights."""

from .export import export_weights, weights_bytes
from .fpdio import FpdSample, read_fpd
from .model import PathNet, build_model, parameter_count
from .train import EarlyStopper, TrainConfig, train, train_single

__version__ = "0.1.0"
