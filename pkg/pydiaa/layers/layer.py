"""Abstract base classes to define the layer interface"""

import abc
from typing import Any, Dict, Tuple

import numpy as np

import pydiaa as pda
import pydiaa.errors

Shape = Tuple[int, ...]

RULE_ZPLUS = "zplus"
RULE_ZBOX = "zbox"

# Relevance of a neuron whose share denominator is smaller than this is dropped
ZERO_DENOMINATOR = 1e-12


class Layer(abc.ABC):
    """Abstract class to specify the layer interface"""
    kind = ""
    has_weights = False

    @abc.abstractmethod
    def output_shape(self, input_shape: Shape) -> Shape:
        """Computes the output shape for a given input shape, raises if the input shape does not fit"""

    @abc.abstractmethod
    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluates the layer in inference mode"""

    @abc.abstractmethod
    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the layer input, given the layer input and the gradient w.r.t. its output"""

    @abc.abstractmethod
    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Redistributes relevance from the layer output onto the layer input"""

    def parameters(self) -> Dict[str, np.ndarray]:
        """The trainable arrays of this layer, updated in-place by the optimizers"""
        return {}

    def parameter_gradients(self, x: np.ndarray, grad_output: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients w.r.t. the trainable arrays, keyed as in parameters()"""
        return {}

    def to_dict(self) -> Dict[str, Any]:
        """Serializes the layer to its model-file representation"""
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Layer':
        """Constructs the layer from its model-file representation"""
        return cls()


class WeightedLayer(Layer):
    """Base class of the linear layers (dense, conv2d), implements the deep Taylor rules generically"""
    has_weights = True

    def __init__(self, weights: np.ndarray, bias: np.ndarray) -> None:
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    @abc.abstractmethod
    def linear(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Applies the linear map defined by the given weights, without bias"""

    @abc.abstractmethod
    def linear_transpose(self, grad_output: np.ndarray, weights: np.ndarray, input_shape: Shape) -> np.ndarray:
        """Applies the transpose of the linear map defined by the given weights"""

    @abc.abstractmethod
    def shaped_bias(self) -> np.ndarray:
        """The bias, reshaped to broadcast against the layer output"""

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.linear(x, self.weights) + self.shaped_bias()

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return self.linear_transpose(grad_output, self.weights, x.shape)

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def scale_outputs(self, scale: np.ndarray, shift: np.ndarray) -> None:
        """Folds a per-output affine map (scale, shift) into weights and bias"""
        shaped_scale = scale.reshape((-1,) + (1,) * (self.weights.ndim - 1))
        self.weights = self.weights * shaped_scale
        self.bias = self.bias * scale + shift

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """z+ rule for inner layers, z^B rule for a first layer whose input lives in the box [low, high].
        Biases take no share of the relevance."""
        positive = np.maximum(self.weights, 0.0)
        if rule == RULE_ZPLUS:
            denominator = self.linear(x, positive)
        elif rule == RULE_ZBOX:
            negative = np.minimum(self.weights, 0.0)
            lower = np.full_like(x, low)
            upper = np.full_like(x, high)
            denominator = (self.linear(x, self.weights) - self.linear(lower, positive) -
                           self.linear(upper, negative))
        else:
            raise ValueError("Unknown relevance rule '{:s}'".format(rule))

        shares = np.zeros_like(denominator)
        nonzero = np.abs(denominator) >= ZERO_DENOMINATOR
        shares[nonzero] = relevance_output[nonzero] / denominator[nonzero]

        if rule == RULE_ZPLUS:
            return x * self.linear_transpose(shares, positive, x.shape)
        return (x * self.linear_transpose(shares, self.weights, x.shape) -
                lower * self.linear_transpose(shares, positive, x.shape) -
                upper * self.linear_transpose(shares, negative, x.shape))

    @staticmethod
    def glorot_uniform(shape: Shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform initialization in +-sqrt(6 / (fan_in + fan_out))"""
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    @staticmethod
    def check_count(name: str, values: np.ndarray, expected: int) -> None:
        """Verifies the number of parameter values read from a model file"""
        if values.size != expected:
            raise pda.errors.ModelValidationError("{:s} has {:d} values, expected {:d}".
                                                  format(name, values.size, expected))
