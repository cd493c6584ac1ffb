"""Convolution and max-pooling layers on (channels, height, width) inputs, valid padding only"""

from typing import Any, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.layer

Shape = pydiaa.layers.layer.Shape


def windows(x: np.ndarray, window: Tuple[int, int], stride: int) -> np.ndarray:
    """All (strided) spatial windows of a (C, H, W) input as a (C, out_h, out_w, kh, kw) view"""
    return sliding_window_view(x, window, axis=(1, 2))[:, ::stride, ::stride]


def pooled_size(size: int, window: int, stride: int) -> int:
    """Output size along one spatial axis for valid padding"""
    return (size - window) // stride + 1


def check_spatial(name: str, input_shape: Shape, window: Tuple[int, int]) -> None:
    """Verifies that a (C, H, W) input can hold at least one window"""
    if len(input_shape) != 3 or input_shape[1] < window[0] or input_shape[2] < window[1]:
        raise pda.errors.ModelValidationError("{:s} with window {:s} cannot take input shape {:s}".
                                              format(name, str(window), str(tuple(input_shape))))


class Conv2D(pda.layers.layer.WeightedLayer):
    """2-D convolution with kernel of shape (out_channels, in_channels, kh, kw)"""
    kind = "conv2d"

    def __init__(self, weights: np.ndarray, bias: np.ndarray, stride: int = 1) -> None:
        super().__init__(weights, bias)
        if stride < 1:
            raise pda.errors.ModelValidationError("Conv2D stride must be positive, got {:d}".format(stride))
        self.stride = stride

    @property
    def kernel(self) -> Tuple[int, int]:
        """Spatial kernel size (kh, kw)"""
        return self.weights.shape[2], self.weights.shape[3]

    @classmethod
    def create(cls, in_channels: int, out_channels: int, kernel: Tuple[int, int],
               rng: np.random.Generator, stride: int = 1) -> 'Conv2D':
        """Creates a randomly initialized convolution with zero bias"""
        area = kernel[0] * kernel[1]
        weights = cls.glorot_uniform((out_channels, in_channels) + tuple(kernel),
                                     in_channels * area, out_channels * area, rng)
        return cls(weights, np.zeros(out_channels), stride)

    def output_shape(self, input_shape: Shape) -> Shape:
        check_spatial("Conv2D", input_shape, self.kernel)
        if input_shape[0] != self.weights.shape[1]:
            raise pda.errors.ModelValidationError("Conv2D expects {:d} input channels, got {:d}".
                                                  format(self.weights.shape[1], input_shape[0]))
        return (self.weights.shape[0],
                pooled_size(input_shape[1], self.kernel[0], self.stride),
                pooled_size(input_shape[2], self.kernel[1], self.stride))

    def linear(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return np.tensordot(weights, windows(x, self.kernel, self.stride), axes=([1, 2, 3], [0, 3, 4]))

    def linear_transpose(self, grad_output: np.ndarray, weights: np.ndarray, input_shape: Shape) -> np.ndarray:
        grad_input = np.zeros(input_shape)
        out_h, out_w = grad_output.shape[1], grad_output.shape[2]
        step = self.stride
        for row in range(self.kernel[0]):
            for col in range(self.kernel[1]):
                contribution = np.tensordot(weights[:, :, row, col], grad_output, axes=([0], [0]))
                grad_input[:, row:row + step * (out_h - 1) + 1:step,
                           col:col + step * (out_w - 1) + 1:step] += contribution
        return grad_input

    def shaped_bias(self) -> np.ndarray:
        return self.bias[:, None, None]

    def parameter_gradients(self, x: np.ndarray, grad_output: np.ndarray) -> Dict[str, np.ndarray]:
        patches = windows(x, self.kernel, self.stride)
        return {"weights": np.tensordot(grad_output, patches, axes=([1, 2], [1, 2])),
                "bias": grad_output.sum(axis=(1, 2))}

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "in_channels": self.weights.shape[1], "out_channels": self.weights.shape[0],
                "kernel": list(self.kernel), "stride": self.stride,
                "weights": self.weights.reshape(-1).tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Conv2D':
        in_channels, out_channels = int(data["in_channels"]), int(data["out_channels"])
        kernel = tuple(int(size) for size in data["kernel"])
        weights = np.array(data["weights"], dtype=np.float64)
        bias = np.array(data["bias"], dtype=np.float64)
        cls.check_count("Conv2D weights", weights, out_channels * in_channels * kernel[0] * kernel[1])
        cls.check_count("Conv2D bias", bias, out_channels)
        return cls(weights.reshape((out_channels, in_channels) + kernel), bias, int(data.get("stride", 1)))


class MaxPool2D(pda.layers.layer.Layer):
    """Square max-pooling; gradient and relevance go to the lowest-index maximal input of each window"""
    kind = "maxpool2d"

    def __init__(self, window: int = 2, stride: int = 0) -> None:
        self.window = window
        self.stride = stride if stride > 0 else window
        if self.window < 1:
            raise pda.errors.ModelValidationError("MaxPool2D window must be positive, got {:d}".format(window))

    def output_shape(self, input_shape: Shape) -> Shape:
        check_spatial("MaxPool2D", input_shape, (self.window, self.window))
        return (input_shape[0],
                pooled_size(input_shape[1], self.window, self.stride),
                pooled_size(input_shape[2], self.window, self.stride))

    def forward(self, x: np.ndarray) -> np.ndarray:
        return windows(x, (self.window, self.window), self.stride).max(axis=(3, 4))

    def route(self, x: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Sends each output value to the argmax position of its window"""
        patches = windows(x, (self.window, self.window), self.stride)
        channels, out_h, out_w = patches.shape[:3]
        argmax = patches.reshape(channels, out_h, out_w, -1).argmax(axis=3)
        channel_index, row_index, col_index = np.indices((channels, out_h, out_w))
        rows = row_index * self.stride + argmax // self.window
        cols = col_index * self.stride + argmax % self.window
        routed = np.zeros_like(x)
        np.add.at(routed, (channel_index, rows, cols), values)
        return routed

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return self.route(x, grad_output)

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self.route(x, relevance_output)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "window": self.window, "stride": self.stride}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MaxPool2D':
        return cls(int(data["window"]), int(data.get("stride", 0)))
