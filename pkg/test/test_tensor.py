# pylint: disable=missing-docstring
import unittest

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.layers.conv
import pydiaa.layers.dense
import pydiaa.layers.elementwise
import pydiaa.network
import pydiaa.tensor

Dense = pda.layers.dense.Dense
Conv2D = pda.layers.conv.Conv2D
MaxPool2D = pda.layers.conv.MaxPool2D
ReLU = pda.layers.elementwise.ReLU
Flatten = pda.layers.elementwise.Flatten


def random_network(rng: np.random.Generator) -> pda.network.Network:
    """A 1 to 4 layer mix of dense, conv, relu and maxpool layers"""
    kind = rng.integers(3)
    classes = int(rng.integers(2, 5))
    if kind == 0:
        features, hidden = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        layers = [Dense.create(features, hidden, rng), ReLU(), Dense.create(hidden, classes, rng)]
        return pda.network.Network((features,), classes, layers)
    if kind == 1:
        layers = [Conv2D.create(2, 3, (3, 3), rng), ReLU(), MaxPool2D(2), Flatten(), Dense.create(12, classes, rng)]
        return pda.network.Network((2, 6, 6), classes, layers)
    layers = [Conv2D.create(1, 2, (2, 2), rng, stride=2), Flatten(), Dense.create(18, classes, rng)]
    return pda.network.Network((1, 6, 6), classes, layers)


def is_smooth(network: pda.network.Network, x: np.ndarray, margin: float) -> bool:
    """True if no ReLU input is near its kink and no max-pool window is near a tie"""
    trace = pda.tensor.forward(network, x)
    for layer, layer_input in zip(network.layers, trace.inputs):
        if isinstance(layer, ReLU) and np.min(np.abs(layer_input)) < margin:
            return False
        if isinstance(layer, MaxPool2D):
            patches = pda.layers.conv.windows(layer_input, (layer.window, layer.window), layer.stride)
            ordered = np.sort(patches.reshape(patches.shape[:3] + (-1,)), axis=3)
            if np.min(ordered[..., -1] - ordered[..., -2]) < margin:
                return False
    return True


def central_differences(network: pda.network.Network, x: np.ndarray, objective: pda.tensor.Objective,
                        h: float = 1e-4) -> np.ndarray:
    gradient = np.zeros(x.size)
    for index in range(x.size):
        step = np.zeros(x.size)
        step[index] = h
        step = step.reshape(x.shape)
        plus = objective.evaluate(pda.tensor.logits(network, x + step), x + step)[0]
        minus = objective.evaluate(pda.tensor.logits(network, x - step), x - step)[0]
        gradient[index] = (plus - minus) / (2 * h)
    return gradient.reshape(x.shape)


class TestForward(unittest.TestCase):

    def test_identity_dense(self) -> None:
        network = pda.network.Network((2,), 2, [Dense(np.eye(2), np.zeros(2))])
        np.testing.assert_array_equal(pda.tensor.logits(network, np.array([1.0, 2.0])), [1.0, 2.0])

    def test_relu(self) -> None:
        np.testing.assert_array_equal(ReLU().forward(np.array([-1.0, 2.0])), [0.0, 2.0])

    def test_hand_evaluated_network(self) -> None:
        layers = [Dense(np.eye(2), np.zeros(2)), ReLU(), Dense(np.array([[1.0, -1.0]]), np.array([0.5]))]
        network = pda.network.Network((2,), 1, layers)
        self.assertEqual(pda.tensor.logits(network, np.array([2.0, 3.0]))[0], -0.5)

    def test_forward_is_pure(self) -> None:
        network = random_network(np.random.default_rng(3))
        x = np.random.default_rng(4).random(network.input_shape)
        first = pda.tensor.logits(network, x)
        np.testing.assert_array_equal(pda.tensor.logits(network, x), first)

    def test_shape_mismatch(self) -> None:
        network = pda.network.Network((2,), 2, [Dense(np.eye(2), np.zeros(2))])
        with self.assertRaises(pda.errors.ShapeError):
            pda.tensor.forward(network, np.zeros(3))

    def test_prediction_ties_go_to_lowest_class(self) -> None:
        network = pda.network.Network((2,), 2, [Dense(np.eye(2), np.zeros(2))])
        self.assertEqual(pda.tensor.predict(network, np.array([0.5, 0.5])), 0)

    def test_conv_matches_direct_loop(self) -> None:
        rng = np.random.default_rng(5)
        layer = Conv2D.create(2, 3, (2, 3), rng)
        layer.bias = rng.normal(size=3)
        x = rng.random((2, 5, 6))
        expected = np.zeros((3, 4, 4))
        for out in range(3):
            for row in range(4):
                for col in range(4):
                    expected[out, row, col] = np.sum(layer.weights[out] * x[:, row:row + 2, col:col + 3]) + \
                        layer.bias[out]
        np.testing.assert_allclose(layer.forward(x), expected, rtol=1e-12, atol=1e-12)

    def test_maxpool_routes_ties_to_first_input(self) -> None:
        pool = MaxPool2D(2)
        x = np.ones((1, 2, 2))
        routed = pool.backward(x, np.array([[[1.0]]]))
        np.testing.assert_array_equal(routed, [[[1.0, 0.0], [0.0, 0.0]]])


class TestGradients(unittest.TestCase):

    def test_linear_model(self) -> None:
        network = pda.network.Network((2,), 1, [Dense(np.array([[3.0, -1.0]]), np.zeros(1))])
        gradient = pda.tensor.input_gradient(network, np.array([0.4, 0.7]), pda.tensor.ClassLogit(0))
        np.testing.assert_array_equal(gradient, [3.0, -1.0])

    def test_norm_term_subgradient_at_origin(self) -> None:
        network = pda.network.Network((2,), 1, [Dense(np.array([[3.0, -1.0]]), np.zeros(1))])
        x = np.array([0.4, 0.7])
        objective = pda.tensor.LogitWithL2(0, x.copy(), 0.5)
        value, gradient, _ = pda.tensor.objective_and_gradient(network, x, objective)
        self.assertAlmostEqual(value, 3.0 * 0.4 - 0.7)
        np.testing.assert_array_equal(gradient, [3.0, -1.0])

    def test_class_index_out_of_range(self) -> None:
        network = pda.network.Network((2,), 2, [Dense(np.eye(2), np.zeros(2))])
        with self.assertRaises(pda.errors.ClassIndexError):
            pda.tensor.input_gradient(network, np.zeros(2), pda.tensor.ClassLogit(2))

    def test_matches_finite_differences(self) -> None:
        rng = np.random.default_rng(2024)
        for _ in range(20):
            network = random_network(rng)
            x = rng.random(network.input_shape)
            for _ in range(100):
                if is_smooth(network, x, 1e-2):
                    break
                x = rng.random(network.input_shape)
            objective = pda.tensor.ClassLogit(1)
            gradient = pda.tensor.input_gradient(network, x, objective)
            np.testing.assert_allclose(gradient, central_differences(network, x, objective), rtol=1e-4, atol=1e-8)

    def test_l2_objective_matches_finite_differences(self) -> None:
        rng = np.random.default_rng(7)
        network = pda.network.Network((3,), 2, [Dense.create(3, 2, rng)])
        x = rng.random(3)
        objective = pda.tensor.LogitWithL2(0, x + 0.3, 0.7)
        gradient = pda.tensor.input_gradient(network, x, objective)
        np.testing.assert_allclose(gradient, central_differences(network, x, objective), rtol=1e-4, atol=1e-8)

    def test_cross_entropy_gradient(self) -> None:
        logits = np.array([1.0, 2.0, 0.5])
        value, grad_logits, _ = pda.tensor.CrossEntropy(1).evaluate(logits, np.zeros(1))
        probabilities = np.exp(logits) / np.sum(np.exp(logits))
        self.assertAlmostEqual(value, -np.log(probabilities[1]), places=12)
        np.testing.assert_allclose(grad_logits, probabilities - [0.0, 1.0, 0.0], atol=1e-12)


class TestSoftmax(unittest.TestCase):

    def test_symmetric(self) -> None:
        np.testing.assert_array_equal(pda.tensor.softmax_probs(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_large_logits(self) -> None:
        probabilities = pda.tensor.softmax_probs(np.array([1000.0, 0.0]))
        self.assertTrue(np.all(np.isfinite(probabilities)))
        self.assertAlmostEqual(probabilities[0], 1.0)
        self.assertAlmostEqual(probabilities[1], 0.0)

    def test_direct_formula(self) -> None:
        logits = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(pda.tensor.softmax_probs(logits), np.exp(logits) / np.sum(np.exp(logits)),
                                   rtol=0, atol=1e-12)

    def test_empty(self) -> None:
        with self.assertRaises(pda.errors.DomainError):
            pda.tensor.softmax_probs(np.array([]))


if __name__ == '__main__':
    unittest.main()
