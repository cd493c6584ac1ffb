"""Networks: layer stacks, standard architectures, accuracy and batchnorm folding"""

import copy
from typing import List, Sequence, Type, TYPE_CHECKING

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.conv
import pydiaa.layers.dense
import pydiaa.layers.elementwise
import pydiaa.layers.layer
import pydiaa.tensor

if TYPE_CHECKING:
    import pydiaa.datasets  # pylint: disable=cyclic-import

Layer = pda.layers.layer.Layer
Shape = pda.layers.layer.Shape

LAYER_CLASSES = [pda.layers.dense.Dense, pda.layers.conv.Conv2D, pda.layers.conv.MaxPool2D,
                 pda.layers.elementwise.ReLU, pda.layers.elementwise.Flatten, pda.layers.elementwise.Dropout,
                 pda.layers.elementwise.BatchNormAffine]
ARCHITECTURES = ("dense", "convnet", "kdd")


class Network:
    """Ordered layer stack computing the logits Z(x) of an m-class classifier"""

    def __init__(self, input_shape: Sequence[int], classes: int, layers: List[Layer]) -> None:
        self.input_shape = tuple(int(dim) for dim in input_shape)
        self.classes = int(classes)
        self.layers = list(layers)
        self.shapes = self.compute_shapes()

    def compute_shapes(self) -> List[Shape]:
        """Shapes at every layer boundary; raises if consecutive layers do not compose"""
        if not self.layers:
            raise pda.errors.ModelValidationError("A network needs at least one layer")
        if self.classes < 1 or any(dim < 1 for dim in self.input_shape):
            raise pda.errors.ModelValidationError("Invalid input shape {:s} or class count {:d}".
                                                  format(str(self.input_shape), self.classes))
        shapes = [self.input_shape]
        for index, layer in enumerate(self.layers):
            try:
                shapes.append(tuple(layer.output_shape(shapes[-1])))
            except pda.errors.ModelValidationError as error:
                raise type(error)("Layer {:d} ({:s}): {:s}".format(index, layer.kind, str(error))) from error
        if int(np.prod(shapes[-1])) != self.classes:
            raise pda.errors.ModelValidationError("Final layer produces {:d} outputs, expected {:d} classes".
                                                  format(int(np.prod(shapes[-1])), self.classes))
        return shapes

    @property
    def features(self) -> int:
        """Number of input features n"""
        return int(np.prod(self.input_shape))

    def copy(self) -> 'Network':
        """Deep copy, e.g. as the starting point for training"""
        return copy.deepcopy(self)

    def is_folded(self) -> bool:
        """True if the network has no batchnorm layers left"""
        return not any(isinstance(layer, pda.layers.elementwise.BatchNormAffine) for layer in self.layers)


def get_layer_class(kind: str) -> Type[Layer]:
    """Selects the layer class based on its model-file kind"""
    for layer_class in LAYER_CLASSES:
        if layer_class.kind == kind:
            return layer_class
    raise pda.errors.FormatError("Unknown layer kind '{:s}'".format(kind))


def build_network(arch: str, input_shape: Sequence[int], classes: int, seed: int = 0,
                  hidden: int = 128) -> Network:
    """Creates a freshly initialized network of one of the supported architectures"""
    # pylint: disable=too-many-locals
    rng = np.random.default_rng(seed)
    dense, conv = pda.layers.dense.Dense, pda.layers.conv.Conv2D
    relu, batchnorm = pda.layers.elementwise.ReLU, pda.layers.elementwise.BatchNormAffine
    input_shape = tuple(int(dim) for dim in input_shape)
    features = int(np.prod(input_shape))

    if arch == "dense":
        layers = [pda.layers.elementwise.Flatten(), dense.create(features, hidden, rng), relu(),
                  dense.create(hidden, classes, rng)]  # type: List[Layer]

    elif arch == "convnet":
        if len(input_shape) != 3:
            raise pda.errors.ConfigError("The convnet architecture needs a (C, H, W) input shape")
        channels, height, width = input_shape
        layers = [conv.create(channels, 32, (3, 3), rng), relu(),
                  conv.create(32, 32, (3, 3), rng), batchnorm.identity(32), relu(),
                  pda.layers.conv.MaxPool2D(2),
                  conv.create(32, 64, (3, 3), rng), relu(),
                  conv.create(64, 64, (3, 3), rng), batchnorm.identity(64), relu(),
                  pda.layers.conv.MaxPool2D(2)]
        height, width = ((height - 4) // 2 - 4) // 2, ((width - 4) // 2 - 4) // 2
        if height < 1 or width < 1:
            raise pda.errors.ConfigError("Input shape {:s} too small for the convnet".format(str(input_shape)))
        layers += [pda.layers.elementwise.Flatten(), pda.layers.elementwise.Dropout(0.3),
                   dense.create(64 * height * width, 512, rng), relu(), dense.create(512, classes, rng)]

    elif arch == "kdd":
        # Features laid out as a 1 x 1 x n image, convolved along the feature axis
        width = features - 3 - 2 - 2
        if width < 1:
            raise pda.errors.ConfigError("Too few features ({:d}) for the kdd architecture".format(features))
        input_shape = (1, 1, features)
        layers = [conv.create(1, 16, (1, 4), rng), batchnorm.identity(16), relu(),
                  conv.create(16, 32, (1, 3), rng), batchnorm.identity(32), relu(),
                  conv.create(32, 64, (1, 3), rng), batchnorm.identity(64), relu(),
                  pda.layers.elementwise.Flatten(), pda.layers.elementwise.Dropout(0.3),
                  dense.create(64 * width, 256, rng), relu(), dense.create(256, classes, rng)]

    else:
        raise pda.errors.ConfigError("Invalid architecture '{:s}', choose from {:s}".
                                     format(arch, ", ".join(ARCHITECTURES)))
    return Network(input_shape, classes, layers)


def evaluate_accuracy(network: Network, dataset: 'pda.datasets.Dataset') -> float:
    """Fraction of examples whose predicted class equals the label"""
    if len(dataset) == 0:
        raise pda.errors.DomainError("Cannot evaluate accuracy on an empty dataset")
    correct = sum(int(pda.tensor.predict(network, example) == label)
                  for example, label in zip(dataset.shaped_examples(network.input_shape), dataset.labels))
    return correct / len(dataset)


def fold_batchnorm(network: Network) -> Network:
    """Returns an equivalent network with every batchnorm layer folded into the preceding conv/dense layer"""
    folded = []  # type: List[Layer]
    for index, layer in enumerate(network.layers):
        if isinstance(layer, pda.layers.elementwise.BatchNormAffine):
            if not folded or not isinstance(folded[-1], pda.layers.layer.WeightedLayer):
                raise pda.errors.StructureError("Batchnorm layer {:d} does not follow a conv2d or dense layer".
                                                format(index))
            folded[-1].scale_outputs(layer.scale, layer.shift)
        else:
            folded.append(copy.deepcopy(layer))
    return Network(network.input_shape, network.classes, folded)
