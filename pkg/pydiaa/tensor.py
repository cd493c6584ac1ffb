"""Tensors, the forward pass with cached activations and reverse-mode input gradients"""

import abc
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

import pydiaa as pda
import pydiaa.errors

if TYPE_CHECKING:
    from pydiaa.network import Network  # pylint: disable=cyclic-import

Tensor = np.ndarray
Shape = Tuple[int, ...]
DTYPE = np.float64


class ForwardTrace(NamedTuple):
    """Per-layer inputs and outputs of one forward evaluation, in layer order, plus the final logits"""
    inputs: List[Tensor]
    outputs: List[Tensor]
    logits: Tensor


def check_finite(tensor: Tensor, what: str = "tensor") -> None:
    """Raises a domain error if the tensor holds NaN or Inf values"""
    if not np.all(np.isfinite(tensor)):
        raise pda.errors.DomainError("Non-finite values in {:s}".format(what))


def check_shape(tensor: Tensor, shape: Sequence[int], what: str = "input") -> None:
    """Raises an input-shape error if the tensor does not have the expected shape"""
    if tuple(tensor.shape) != tuple(shape):
        raise pda.errors.ShapeError("Expected {:s} of shape {:s}, got {:s}".
                                    format(what, str(tuple(shape)), str(tuple(tensor.shape))))


def as_tensor(data: Iterable, shape: Optional[Sequence[int]] = None) -> Tensor:
    """Converts data to a 64-bit tensor, optionally reshaped (row-major), and checks it is finite"""
    tensor = np.array(data, dtype=DTYPE)
    if shape is not None:
        shape = tuple(int(dim) for dim in shape)
        if tensor.size != int(np.prod(shape)):
            raise pda.errors.ShapeError("Cannot reshape {:d} values to {:s}".format(tensor.size, str(shape)))
        tensor = tensor.reshape(shape)
    check_finite(tensor)
    return tensor


class Objective(abc.ABC):
    """A scalar function of the logits, optionally with a term depending directly on the input"""

    def __init__(self, class_index: int) -> None:
        self.class_index = int(class_index)

    def check(self, classes: int) -> None:
        """Verifies that the class index refers to one of the network's logits"""
        if not 0 <= self.class_index < classes:
            raise pda.errors.ClassIndexError("Class index {:d} out of range for {:d} classes".
                                             format(self.class_index, classes))

    def one_hot(self, logits: Tensor) -> Tensor:
        """One-hot encoding of the class index"""
        encoding = np.zeros_like(logits)
        encoding[self.class_index] = 1.0
        return encoding

    @abc.abstractmethod
    def evaluate(self, logits: Tensor, x: Tensor) -> Tuple[float, Tensor, Optional[Tensor]]:
        """Returns the value, its gradient w.r.t. the logits and the direct gradient w.r.t. the input (if any)"""


class ClassLogit(Objective):
    """Selects a single (optionally negated) class logit"""

    def __init__(self, class_index: int, sign: float = 1.0) -> None:
        super().__init__(class_index)
        self.sign = sign

    def evaluate(self, logits: Tensor, x: Tensor) -> Tuple[float, Tensor, Optional[Tensor]]:
        return self.sign * float(logits[self.class_index]), self.sign * self.one_hot(logits), None


class CrossEntropy(Objective):
    """Cross-entropy of the softmax of the logits against a label"""

    def evaluate(self, logits: Tensor, x: Tensor) -> Tuple[float, Tensor, Optional[Tensor]]:
        shifted = logits - np.max(logits)
        log_sum = np.log(np.sum(np.exp(shifted)))
        probabilities = np.exp(shifted - log_sum)
        return float(log_sum - shifted[self.class_index]), probabilities - self.one_hot(logits), None


class LogitWithL2(Objective):
    """sign * Z_k + c * ||x - reference||_2, the Lagrangian-relaxed attack objective"""

    def __init__(self, class_index: int, reference: Tensor, c: float, sign: float = 1.0) -> None:
        super().__init__(class_index)
        self.reference = reference
        self.c = c
        self.sign = sign

    def evaluate(self, logits: Tensor, x: Tensor) -> Tuple[float, Tensor, Optional[Tensor]]:
        difference = x - self.reference
        distance = float(np.sqrt(np.sum(difference * difference)))
        if distance > 0.0:
            grad_input = self.c * difference / distance
        else:
            grad_input = np.zeros_like(x)  # subgradient at the origin
        value = self.sign * float(logits[self.class_index]) + self.c * distance
        return value, self.sign * self.one_hot(logits), grad_input


def forward(network: 'Network', x: Tensor) -> ForwardTrace:
    """Evaluates the network on a single input, caching the input and output of every layer"""
    check_shape(x, network.input_shape)
    check_finite(x, "network input")
    inputs, outputs = [], []
    activation = x
    for layer in network.layers:
        inputs.append(activation)
        activation = layer.forward(activation)
        outputs.append(activation)
    logits = activation.reshape(-1)
    check_finite(logits, "logits")
    return ForwardTrace(inputs, outputs, logits)


def logits(network: 'Network', x: Tensor) -> Tensor:
    """The logit vector Z(x)"""
    return forward(network, x).logits


def predict(network: 'Network', x: Tensor) -> int:
    """The predicted class argmax Z(x); ties go to the lowest class index"""
    return int(np.argmax(forward(network, x).logits))


def backward(network: 'Network', trace: ForwardTrace, grad_logits: Tensor) -> Tensor:
    """Propagates a gradient w.r.t. the logits back to the network input"""
    grad = grad_logits.reshape(trace.outputs[-1].shape)
    for index in reversed(range(len(network.layers))):
        grad = network.layers[index].backward(trace.inputs[index], grad)
    return grad


def objective_and_gradient(network: 'Network', x: Tensor,
                           objective: Objective) -> Tuple[float, Tensor, ForwardTrace]:
    """Evaluates a scalar objective and its exact gradient w.r.t. the input in one forward/backward pass"""
    objective.check(network.classes)
    trace = forward(network, x)
    value, grad_logits, grad_direct = objective.evaluate(trace.logits, x)
    grad = backward(network, trace, grad_logits)
    if grad_direct is not None:
        grad = grad + grad_direct
    check_finite(grad, "input gradient")
    return value, grad, trace


def input_gradient(network: 'Network', x: Tensor, objective: Objective) -> Tensor:
    """The gradient of a scalar objective w.r.t. the network input, same shape as the input"""
    return objective_and_gradient(network, x, objective)[1]


def softmax_probs(logits: Tensor) -> Tensor:
    """Max-subtracted softmax; used for reporting only"""
    logits = np.asarray(logits, dtype=DTYPE).reshape(-1)
    if logits.size == 0:
        raise pda.errors.DomainError("Softmax of empty logits")
    exponentials = np.exp(logits - np.max(logits))
    return exponentials / np.sum(exponentials)
