# pylint: disable=missing-docstring
import unittest

import numpy as np

import pydiaa as pda
import pydiaa.datasets
import pydiaa.errors
import pydiaa.io
import pydiaa.network
import pydiaa.training


def blobs(count: int, seed: int = 0) -> pda.datasets.Dataset:
    """Two well separated Gaussian blobs around (0.25, 0.25) and (0.75, 0.75)"""
    rng = np.random.default_rng(seed)
    labels = np.arange(count) % 2
    centers = np.where(labels[:, None] == 1, 0.75, 0.25)
    examples = np.clip(centers + rng.normal(scale=0.05, size=(count, 2)), 0.0, 1.0)
    return pda.datasets.Dataset(examples, labels, 2, name="blobs")


def all_parameters(network: pda.network.Network) -> list:
    return [value for layer in network.layers for value in layer.parameters().values()]


class TestTraining(unittest.TestCase):

    def setUp(self) -> None:
        pda.io.set_verbose(False)

    def test_separable_blobs(self) -> None:
        dataset = blobs(200)
        network = pda.network.build_network("dense", (2,), 2, seed=0, hidden=16)
        cfg = pda.training.TrainConfig(epochs=50, learning_rate=0.01)
        trained = pda.training.train(network, dataset, cfg)
        self.assertGreaterEqual(pda.network.evaluate_accuracy(trained, dataset), 0.99)

    def test_zero_epochs(self) -> None:
        network = pda.network.build_network("dense", (2,), 2, seed=0, hidden=4)
        trained = pda.training.train(network, blobs(10), pda.training.TrainConfig(epochs=0))
        for before, after in zip(all_parameters(network), all_parameters(trained)):
            np.testing.assert_array_equal(before, after)

    def test_input_network_is_untouched(self) -> None:
        network = pda.network.build_network("dense", (2,), 2, seed=0, hidden=4)
        weights = network.layers[1].weights.copy()
        pda.training.train(network, blobs(10), pda.training.TrainConfig(epochs=1))
        np.testing.assert_array_equal(network.layers[1].weights, weights)

    def test_deterministic(self) -> None:
        network = pda.network.build_network("dense", (2,), 2, seed=3, hidden=4)
        cfg = pda.training.TrainConfig(epochs=3, batch_size=4, seed=5)
        first = pda.training.train(network, blobs(20), cfg)
        second = pda.training.train(network, blobs(20), cfg)
        for one, two in zip(all_parameters(first), all_parameters(second)):
            np.testing.assert_array_equal(one, two)

    def test_sgd_with_dropout(self) -> None:
        network = pda.network.build_network("kdd", (8,), 2, seed=1)
        dataset = pda.datasets.Dataset(np.random.default_rng(0).random((6, 8)), np.array([0, 1] * 3), 2)
        trained = pda.training.train(network, dataset, pda.training.TrainConfig(epochs=1, optimizer="sgd"))
        self.assertFalse(np.array_equal(trained.layers[-1].weights, network.layers[-1].weights))

    def test_adversarial_zero_radius_equals_training(self) -> None:
        network = pda.network.build_network("dense", (2,), 2, seed=3, hidden=4)
        cfg = pda.training.TrainConfig(epochs=2, batch_size=4, seed=1, adversarial=True, eps_ball=0.0)
        plain = pda.training.train(network, blobs(12), cfg)
        robust = pda.training.adversarial_train(network, blobs(12), cfg)
        for one, two in zip(all_parameters(plain), all_parameters(robust)):
            np.testing.assert_array_equal(one, two)

    def test_adversarial_training_runs(self) -> None:
        network = pda.network.build_network("dense", (2,), 2, seed=3, hidden=4)
        cfg = pda.training.TrainConfig(epochs=1, adversarial=True, eps_ball=0.1, adv_steps=2, adv_step_size=0.05)
        robust = pda.training.adversarial_train(network, blobs(8), cfg)
        self.assertEqual(robust.shapes, network.shapes)

    def test_empty_dataset(self) -> None:
        network = pda.network.build_network("dense", (2,), 2)
        empty = pda.datasets.Dataset(np.zeros((0, 2)), np.zeros(0), 2)
        with self.assertRaises(pda.errors.DomainError):
            pda.training.train(network, empty, pda.training.TrainConfig())

    def test_invalid_config(self) -> None:
        network = pda.network.build_network("dense", (2,), 2)
        with self.assertRaises(pda.errors.ConfigError):
            pda.training.train(network, blobs(4), pda.training.TrainConfig(optimizer="rmsprop"))
        with self.assertRaises(pda.errors.ConfigError):
            pda.training.train(network, blobs(4), pda.training.TrainConfig(batch_size=0))


if __name__ == '__main__':
    unittest.main()
