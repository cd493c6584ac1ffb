"""Fully-connected layer"""

from typing import Any, Dict

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.layer

Shape = pydiaa.layers.layer.Shape


class Dense(pda.layers.layer.WeightedLayer):
    """Dense layer y = W x + b with W of shape (outputs, inputs), acting on 1-D inputs"""
    kind = "dense"

    @property
    def inputs(self) -> int:
        """Number of input features"""
        return self.weights.shape[1]

    @property
    def outputs(self) -> int:
        """Number of output features"""
        return self.weights.shape[0]

    @classmethod
    def create(cls, inputs: int, outputs: int, rng: np.random.Generator) -> 'Dense':
        """Creates a randomly initialized dense layer with zero bias"""
        weights = cls.glorot_uniform((outputs, inputs), inputs, outputs, rng)
        return cls(weights, np.zeros(outputs))

    def output_shape(self, input_shape: Shape) -> Shape:
        if tuple(input_shape) != (self.inputs,):
            raise pda.errors.ModelValidationError("Dense layer expects input shape ({:d},), got {:s}".
                                                  format(self.inputs, str(tuple(input_shape))))
        return (self.outputs,)

    def linear(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return weights @ x

    def linear_transpose(self, grad_output: np.ndarray, weights: np.ndarray, input_shape: Shape) -> np.ndarray:
        return weights.T @ grad_output

    def shaped_bias(self) -> np.ndarray:
        return self.bias

    def parameter_gradients(self, x: np.ndarray, grad_output: np.ndarray) -> Dict[str, np.ndarray]:
        return {"weights": np.outer(grad_output, x), "bias": grad_output.copy()}

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "in": self.inputs, "out": self.outputs,
                "weights": self.weights.reshape(-1).tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Dense':
        inputs, outputs = int(data["in"]), int(data["out"])
        weights = np.array(data["weights"], dtype=np.float64)
        bias = np.array(data["bias"], dtype=np.float64)
        cls.check_count("Dense weights", weights, inputs * outputs)
        cls.check_count("Dense bias", bias, outputs)
        return cls(weights.reshape(outputs, inputs), bias)
