"""Plain and adversarial training of networks with softmax cross-entropy"""

import dataclasses
from typing import Callable, Dict, List, Optional, Tuple, TYPE_CHECKING

import numpy as np
from tqdm import tqdm

import pydiaa as pda
import pydiaa.attacks
import pydiaa.errors
import pydiaa.io
import pydiaa.layers.elementwise
import pydiaa.network
import pydiaa.tensor

if TYPE_CHECKING:
    import pydiaa.datasets  # pylint: disable=cyclic-import

Network = pda.network.Network
Perturbation = Callable[[Network, np.ndarray, int, np.random.Generator], np.ndarray]

OPTIMIZERS = ("sgd", "adam")


@dataclasses.dataclass
class TrainConfig:
    """Training settings; the adversarial fields are used by adversarial_train only"""
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    adversarial: bool = False
    eps_ball: float = 0.1
    adv_steps: int = 10
    adv_step_size: float = 0.025

    def validate(self) -> None:
        """Raises a config error for out-of-range settings"""
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise pda.errors.ConfigError("Epochs must be >= 0, batch size >= 1 and learning rate > 0")
        if self.optimizer not in OPTIMIZERS:
            raise pda.errors.ConfigError("Invalid optimizer '{:s}', choose from {:s}".
                                         format(self.optimizer, ", ".join(OPTIMIZERS)))
        if self.adversarial and (self.eps_ball < 0 or self.adv_steps < 1 or self.adv_step_size <= 0):
            raise pda.errors.ConfigError("Adversarial training needs eps_ball >= 0, steps >= 1, step size > 0")


class Optimizer:
    """SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8) over all layer parameters, updating them in-place"""

    def __init__(self, kind: str, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> None:
        self.kind = kind
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.step_count = 0
        self.moments = {}  # type: Dict[Tuple[int, str], Tuple[np.ndarray, np.ndarray]]

    def step(self, network: Network, gradients: List[Dict[str, np.ndarray]]) -> None:
        """Applies one update given per-layer parameter gradients"""
        self.step_count += 1
        for index, (layer, layer_gradients) in enumerate(zip(network.layers, gradients)):
            for name, parameter in layer.parameters().items():
                gradient = layer_gradients[name]
                if self.kind == "sgd":
                    parameter -= self.learning_rate * gradient
                    continue
                first, second = self.moments.get((index, name), (np.zeros_like(gradient), np.zeros_like(gradient)))
                first = self.beta1 * first + (1.0 - self.beta1) * gradient
                second = self.beta2 * second + (1.0 - self.beta2) * gradient * gradient
                self.moments[(index, name)] = (first, second)
                first_hat = first / (1.0 - self.beta1 ** self.step_count)
                second_hat = second / (1.0 - self.beta2 ** self.step_count)
                parameter -= self.learning_rate * first_hat / (np.sqrt(second_hat) + self.epsilon)


def example_gradients(network: Network, x: np.ndarray, label: int,
                      rng: np.random.Generator) -> Tuple[float, bool, List[Dict[str, np.ndarray]]]:
    """Cross-entropy loss, correctness and per-layer parameter gradients for one example, dropout active"""
    inputs = []
    masks = {}  # type: Dict[int, np.ndarray]
    activation = x
    for index, layer in enumerate(network.layers):
        inputs.append(activation)
        activation = layer.forward(activation)
        if isinstance(layer, pda.layers.elementwise.Dropout) and layer.rate > 0:
            masks[index] = layer.sample_mask(activation.shape, rng)
            activation = activation * masks[index]
    logits = activation.reshape(-1)
    loss, grad, _ = pda.tensor.CrossEntropy(label).evaluate(logits, x)

    gradients = [dict() for _ in network.layers]  # type: List[Dict[str, np.ndarray]]
    grad = grad.reshape(activation.shape)
    for index in reversed(range(len(network.layers))):
        layer = network.layers[index]
        if index in masks:
            grad = grad * masks[index]
        gradients[index] = layer.parameter_gradients(inputs[index], grad)
        if index > 0:
            grad = layer.backward(inputs[index], grad)
    return loss, int(np.argmax(logits)) == label, gradients


def fit(network: Network, dataset: 'pda.datasets.Dataset', cfg: TrainConfig,
        perturbation: Optional[Perturbation] = None) -> Network:
    """The training loop shared by train() and adversarial_train(); returns a trained copy"""
    # pylint: disable=too-many-locals
    cfg.validate()
    if len(dataset) == 0:
        raise pda.errors.DomainError("Cannot train on an empty dataset")
    if int(np.max(dataset.labels)) >= network.classes:
        raise pda.errors.LabelError("Dataset labels exceed the network's {:d} classes".format(network.classes))

    trained = network.copy()
    examples = dataset.shaped_examples(network.input_shape)
    rng = np.random.default_rng(cfg.seed)
    attack_rng = np.random.default_rng([cfg.seed, 1])
    optimizer = Optimizer(cfg.optimizer, cfg.learning_rate)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        total_loss, correct = 0.0, 0
        batches = range(0, len(order), cfg.batch_size)
        for start in tqdm(batches, desc="epoch {:d}".format(epoch + 1), disable=not pda.io.is_verbose(),
                          leave=False):
            batch = order[start:start + cfg.batch_size]
            summed = None  # type: Optional[List[Dict[str, np.ndarray]]]
            for index in batch:
                x, label = examples[index], int(dataset.labels[index])
                if perturbation is not None:
                    x = perturbation(trained, x, label, attack_rng)
                loss, is_correct, gradients = example_gradients(trained, x, label, rng)
                total_loss += loss
                correct += int(is_correct)
                if summed is None:
                    summed = gradients
                else:
                    for accumulated, layer_gradients in zip(summed, gradients):
                        for name, gradient in layer_gradients.items():
                            accumulated[name] = accumulated[name] + gradient
            assert summed is not None
            averaged = [{name: gradient / len(batch) for name, gradient in layer_gradients.items()}
                        for layer_gradients in summed]
            optimizer.step(trained, averaged)
        pda.io.log("Epoch {:d}/{:d}: loss {:.4f}, train accuracy {:.4f}".
                   format(epoch + 1, cfg.epochs, total_loss / len(dataset), correct / len(dataset)))
    return trained


def train(network: Network, dataset: 'pda.datasets.Dataset', cfg: TrainConfig) -> Network:
    """Trains a copy of the network with minibatch cross-entropy; deterministic for a fixed seed"""
    return fit(network, dataset, cfg)


def adversarial_train(network: Network, dataset: 'pda.datasets.Dataset', cfg: TrainConfig) -> Network:
    """PGD adversarial training: every training example is replaced by its PGD perturbation
    against the current weights before the gradient step"""
    if cfg.eps_ball < 0 or cfg.adv_steps < 1 or cfg.adv_step_size <= 0:
        raise pda.errors.ConfigError("Adversarial training needs eps_ball >= 0, steps >= 1, step size > 0")
    attack_cfg = pda.attacks.AttackConfig(epsilon_ball=cfg.eps_ball, baseline_iterations=cfg.adv_steps,
                                          baseline_step=cfg.adv_step_size, seed=cfg.seed)

    def perturbation(current: Network, x: np.ndarray, label: int, rng: np.random.Generator) -> np.ndarray:
        if cfg.eps_ball == 0:
            return x
        return pda.attacks.pgd(x, label, current, attack_cfg, rng=rng, early_exit=False).adversarial

    pda.io.log("Adversarial training with PGD: eps-ball {:g}, {:d} steps of {:g}".
               format(cfg.eps_ball, cfg.adv_steps, cfg.adv_step_size))
    return fit(network, dataset, cfg, perturbation)
