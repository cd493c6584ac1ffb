"""Shape-preserving and reshaping layers: ReLU, flatten, dropout and the batchnorm affine map"""

from typing import Any, Dict

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.layer

Shape = pydiaa.layers.layer.Shape


class ReLU(pda.layers.layer.Layer):
    """Rectified linear unit; transparent to relevance"""
    kind = "relu"

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0)

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return grad_output * (x > 0.0)

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return relevance_output


class Flatten(pda.layers.layer.Layer):
    """Row-major reshape to a 1-D vector"""
    kind = "flatten"

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(-1)

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return grad_output.reshape(x.shape)

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return relevance_output.reshape(x.shape)


class Dropout(pda.layers.layer.Layer):
    """Identity at inference and attack time; the trainer samples masks through sample_mask()"""
    kind = "dropout"

    def __init__(self, rate: float = 0.0) -> None:
        if not 0.0 <= rate < 1.0:
            raise pda.errors.ModelValidationError("Dropout rate must be in [0, 1), got {:f}".format(rate))
        self.rate = rate

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return grad_output

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return relevance_output

    def sample_mask(self, shape: Shape, rng: np.random.Generator) -> np.ndarray:
        """Inverted-dropout mask: kept units are scaled by 1 / (1 - rate)"""
        return (rng.random(shape) >= self.rate) / (1.0 - self.rate)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Dropout':
        return cls(float(data["rate"]))


class BatchNormAffine(pda.layers.layer.Layer):
    """Per-channel y = scale * x + shift, channels on the first axis (inference-mode batchnorm)"""
    kind = "batchnorm-affine"

    def __init__(self, scale: np.ndarray, shift: np.ndarray) -> None:
        self.scale = np.asarray(scale, dtype=np.float64).reshape(-1)
        self.shift = np.asarray(shift, dtype=np.float64).reshape(-1)
        if self.scale.size != self.shift.size:
            raise pda.errors.ModelValidationError("Batchnorm scale ({:d}) and shift ({:d}) sizes differ".
                                                  format(self.scale.size, self.shift.size))

    @classmethod
    def identity(cls, channels: int) -> 'BatchNormAffine':
        """Scale one, shift zero"""
        return cls(np.ones(channels), np.zeros(channels))

    def shaped(self, values: np.ndarray, ndim: int) -> np.ndarray:
        """Reshapes per-channel values to broadcast against an input of the given rank"""
        return values.reshape((-1,) + (1,) * (ndim - 1))

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) == 0 or input_shape[0] != self.scale.size:
            raise pda.errors.ModelValidationError("Batchnorm with {:d} channels cannot take input shape {:s}".
                                                  format(self.scale.size, str(tuple(input_shape))))
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x * self.shaped(self.scale, x.ndim) + self.shaped(self.shift, x.ndim)

    def backward(self, x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
        return grad_output * self.shaped(self.scale, x.ndim)

    def relevance(self, x: np.ndarray, relevance_output: np.ndarray, rule: str,
                  low: float = 0.0, high: float = 1.0) -> np.ndarray:
        raise pda.errors.StructureError("Relevance needs a batchnorm-folded network, call fold_batchnorm first")

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"scale": self.scale, "shift": self.shift}

    def parameter_gradients(self, x: np.ndarray, grad_output: np.ndarray) -> Dict[str, np.ndarray]:
        axes = tuple(range(1, x.ndim))
        return {"scale": (grad_output * x).sum(axis=axes), "shift": grad_output.sum(axis=axes)}

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "channels": self.scale.size,
                "scale": self.scale.tolist(), "shift": self.shift.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BatchNormAffine':
        scale = np.array(data["scale"], dtype=np.float64)
        shift = np.array(data["shift"], dtype=np.float64)
        if "channels" in data:
            pda.layers.layer.WeightedLayer.check_count("Batchnorm scale", scale, int(data["channels"]))
        return cls(scale, shift)
