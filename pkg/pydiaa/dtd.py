"""Deep Taylor decomposition: relevance propagation from a class logit back onto the input features

The first weighted layer uses the z^B rule for inputs in the box [low, high], deeper weighted layers
use the z+ rule, ReLU and dropout pass relevance through unchanged, max-pooling routes each output's
relevance to its argmax input and flatten reshapes. Biases take no share of the relevance, so on
bias-free networks the input relevances sum to the decomposed logit.
"""

from typing import List, NamedTuple

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.layer
import pydiaa.network
import pydiaa.tensor

Tensor = pda.tensor.Tensor


class RelevanceMap(NamedTuple):
    """Per-input-feature relevance scores for one class, with the relevance that was decomposed"""
    scores: Tensor
    class_index: int
    start_relevance: float
    conservative: bool = True


def first_weighted_layer(network: 'pda.network.Network') -> int:
    """Index of the first dense/conv layer, which gets the box rule"""
    for index, layer in enumerate(network.layers):
        if layer.has_weights:
            return index
    return len(network.layers)


def layer_relevances(network: 'pda.network.Network', x: Tensor, class_index: int,
                     low: float = 0.0, high: float = 1.0) -> List[Tensor]:
    """Relevance at every layer boundary, from the input (first) to the logits (last).
    Requires Z(x)_class > 0 for the conservation and positivity properties to hold."""
    if not network.is_folded():
        raise pda.errors.StructureError("Deep Taylor decomposition needs a batchnorm-folded network")
    pda.tensor.ClassLogit(class_index).check(network.classes)
    trace = pda.tensor.forward(network, x)

    relevance = np.zeros_like(trace.logits)
    relevance[class_index] = trace.logits[class_index]
    relevance = relevance.reshape(trace.outputs[-1].shape)
    relevances = [relevance]
    box_layer = first_weighted_layer(network)
    for index in reversed(range(len(network.layers))):
        rule = pda.layers.layer.RULE_ZBOX if index == box_layer else pda.layers.layer.RULE_ZPLUS
        relevance = network.layers[index].relevance(trace.inputs[index], relevance, rule, low, high)
        relevances.append(relevance)
    return relevances[::-1]


def dtd_relevance(network: 'pda.network.Network', x: Tensor, class_index: int,
                  low: float = 0.0, high: float = 1.0) -> RelevanceMap:
    """The saliency map of one class logit; falls back to |dZ/dx * x| when the logit is not positive"""
    pda.tensor.ClassLogit(class_index).check(network.classes)
    class_logit = float(pda.tensor.logits(network, x)[class_index])
    if class_logit <= 0.0:
        gradient = pda.tensor.input_gradient(network, x, pda.tensor.ClassLogit(class_index))
        return RelevanceMap(np.abs(gradient * x), class_index, class_logit, conservative=False)
    scores = layer_relevances(network, x, class_index, low, high)[0]
    pda.tensor.check_finite(scores, "relevance scores")
    return RelevanceMap(scores, class_index, class_logit)


def sort_saliency(relevance_map: RelevanceMap) -> np.ndarray:
    """Flat feature indices in descending relevance, ties broken by ascending index"""
    scores = relevance_map.scores.reshape(-1)
    return np.argsort(-scores, kind="stable")
