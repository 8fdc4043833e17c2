"""Spike recovery under heavy-tailed noise with color-coded self-avoiding walk estimators."""

from .colorcode import (ColorCodeConfig, ColorCodedOperator, Coloring, nbw_colorcoded,
                        saw_colorcoded, sample_colorings)
from .detection import DetectionConfig, calibrate, detect
from .errors import (CapExceededError, DegenerateInputError, HeavySpikeError,
                     InvalidDimensionError, InvalidParameterError, NumericFailureError)
from .model import (NoiseModel, generate_planted, generate_spiked_matrix,
                    generate_spiked_tensor, load_instance, save_instance)
from .spectral import pca_estimate, power_top_t, squared_correlation, truncation_pca
from .tensor import TensorEstimatorConfig, tensor_recover, tensor_unfold_estimate

__version__ = "0.1.0"
