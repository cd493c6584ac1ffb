# pylint: disable=missing-docstring
import dataclasses
import unittest

import numpy as np

import pydiaa as pda
import pydiaa.attacks
import pydiaa.dtd
import pydiaa.errors
import pydiaa.layers.dense
import pydiaa.layers.elementwise
import pydiaa.network
import pydiaa.tensor

Dense = pda.layers.dense.Dense
AttackConfig = pda.attacks.AttackConfig


def scalar_network() -> pda.network.Network:
    """Logits [0, 5x]: class 1 while x > 0"""
    return pda.network.Network((1,), 2, [Dense(np.array([[0.0], [5.0]]), np.zeros(2))])


def two_feature_network() -> pda.network.Network:
    """Logits [0, x0 + 4 x1 - 1]: feature 1 carries most of the relevance of class 1"""
    return pda.network.Network((2,), 2, [Dense(np.array([[0.0, 0.0], [1.0, 4.0]]), np.array([0.0, -1.0]))])


def random_network(seed: int) -> pda.network.Network:
    rng = np.random.default_rng(seed)
    layers = [Dense.create(6, 8, rng), pda.layers.elementwise.ReLU(), Dense.create(8, 3, rng)]
    for layer in (layers[0], layers[2]):
        layer.bias = rng.normal(scale=0.1, size=layer.bias.shape)
    return pda.network.Network((6,), 3, layers)


class TestObjective(unittest.TestCase):

    def setUp(self) -> None:
        self.network = pda.network.Network((2,), 2, [Dense(np.zeros((2, 2)), np.array([1.0, 3.0]))])
        self.x = np.zeros(2)

    def test_unperturbed(self) -> None:
        value, _ = pda.attacks.attack_objective(self.network, self.x, self.x.copy(), 0, AttackConfig(c=0.5))
        self.assertEqual(value, 1.0)

    def test_norm_term(self) -> None:
        value, _ = pda.attacks.attack_objective(self.network, self.x, np.array([2.0, 0.0]), 0, AttackConfig(c=0.5))
        self.assertEqual(value, 2.0)

    def test_targeted(self) -> None:
        cfg = AttackConfig(c=0.5, targeted=True, target=1)
        value, _ = pda.attacks.attack_objective(self.network, self.x, np.array([2.0, 0.0]), 0, cfg)
        self.assertEqual(value, -2.0)


class TestAEGen(unittest.TestCase):

    def test_empty_mask(self) -> None:
        x = np.array([0.9])
        cfg = AttackConfig(step=0.05, c=0.0, allow_zero_c=True)
        x_adv, success, steps = pda.attacks.ae_gen(x.copy(), x, 1, scalar_network(), cfg, pda.attacks.Mask(x.shape))
        np.testing.assert_array_equal(x_adv, x)
        self.assertFalse(success)
        self.assertEqual(steps, 0)

    def test_empty_mask_already_misclassified(self) -> None:
        x = np.array([0.0])
        _, success, steps = pda.attacks.ae_gen(x.copy(), x, 1, scalar_network(), AttackConfig(),
                                               pda.attacks.Mask(x.shape))
        self.assertTrue(success)
        self.assertEqual(steps, 0)

    def test_zero_step(self) -> None:
        x = np.array([0.9])
        mask = pda.attacks.Mask(x.shape)
        mask.enable(0)
        x_adv, success, steps = pda.attacks.ae_gen(x.copy(), x, 1, scalar_network(),
                                                   AttackConfig(step=0.0, iterations=5), mask)
        np.testing.assert_array_equal(x_adv, x)
        self.assertFalse(success)
        self.assertEqual(steps, 5)

    def test_scalar_model_iteration(self) -> None:
        x = np.array([0.9])
        mask = pda.attacks.Mask(x.shape)
        mask.enable(0)
        x_adv, success, steps = pda.attacks.ae_gen(x.copy(), x, 1, scalar_network(),
                                                   AttackConfig(step=0.05, c=0.0, allow_zero_c=True), mask)
        self.assertTrue(success)
        self.assertEqual(steps, 4)
        self.assertEqual(x_adv[0], 0.0)

    def test_mask_enables_once(self) -> None:
        mask = pda.attacks.Mask((2, 2))
        mask.enable(3)
        mask.enable(3)
        mask.enable(1)
        self.assertEqual(mask.enabled, [3, 1])
        np.testing.assert_array_equal(mask.selected, [[False, True], [False, True]])

    def test_adam_moments_stay_masked(self) -> None:
        x = np.array([0.5, 0.5])
        mask = pda.attacks.Mask(x.shape)
        mask.enable(1)
        adam = pda.attacks.AdamState(x.shape)
        cfg = AttackConfig(step=0.01, iterations=3, update="adam")
        x_adv, success, steps = pda.attacks.ae_gen(x.copy(), x, 1, two_feature_network(), cfg, mask, adam)
        self.assertFalse(success)
        self.assertEqual(steps, 3)
        self.assertEqual(adam.step_count, 3)
        self.assertEqual((adam.first[0], adam.second[0]), (0.0, 0.0))
        self.assertGreater(adam.first[1], 0.0)
        self.assertEqual(x_adv[0], 0.5)


class TestDIAA(unittest.TestCase):

    def test_already_misclassified(self) -> None:
        x = np.array([0.0])
        outcome = pda.attacks.di_aa(x, 1, scalar_network(), AttackConfig())
        self.assertTrue(outcome.success)
        np.testing.assert_array_equal(outcome.adversarial, x)
        self.assertEqual((outcome.l0, outcome.outer_iterations, outcome.inner_iterations), (0.0, 0, 0))

    def test_most_relevant_feature_first(self) -> None:
        network = two_feature_network()
        x = np.array([0.5, 0.5])
        order = pda.dtd.sort_saliency(pda.dtd.dtd_relevance(network, x, 1))
        single_feature_success = []
        for feature in range(2):
            candidate = x.copy()
            candidate[feature] = 0.0
            single_feature_success.append(pda.tensor.predict(network, candidate) != 1)
        self.assertEqual(single_feature_success, [False, True])
        self.assertEqual(order[0], 1)

        outcome = pda.attacks.di_aa(x, 1, network, AttackConfig(step=0.05))
        self.assertTrue(outcome.success)
        self.assertEqual(outcome.outer_iterations, 1)
        self.assertEqual(outcome.adversarial[0], 0.5)
        self.assertEqual(outcome.l0, 1.0)

    def test_mask_confinement(self) -> None:
        for seed in range(20):
            network = random_network(seed)
            x = np.random.default_rng(100 + seed).random(6)
            label = pda.tensor.predict(network, x)
            for update in pda.attacks.UPDATE_RULES:
                cfg = AttackConfig(step=0.05, iterations=10, max_features=4, update=update)
                outcome = pda.attacks.di_aa(x, label, network, cfg)
                relevance = pda.dtd.dtd_relevance(network, x, label)
                enabled = pda.dtd.sort_saliency(relevance)[:outcome.outer_iterations]
                untouched = np.setdiff1d(np.arange(6), enabled)
                np.testing.assert_array_equal(outcome.adversarial[untouched], x[untouched])
                self.assertLessEqual(outcome.l0, outcome.outer_iterations)
                self.assertLessEqual(outcome.outer_iterations, 4)
                self.assertTrue(np.all((outcome.adversarial >= 0.0) & (outcome.adversarial <= 1.0)))
                self.assertEqual(outcome.success, pda.tensor.predict(network, outcome.adversarial) != label)

    def test_targeted(self) -> None:
        network = pda.network.Network((2,), 3, [Dense(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                                                      np.array([0.6, 0.0, 0.0]))])
        x = np.array([0.5, 0.5])
        cfg = AttackConfig(step=0.05, c=0.0, allow_zero_c=True, targeted=True, target=2)
        outcome = pda.attacks.di_aa(x, 0, network, cfg)
        self.assertTrue(outcome.success)
        self.assertEqual(outcome.predicted, 2)
        self.assertEqual(outcome.adversarial[0], 0.5)

    def test_invalid_configs(self) -> None:
        x = np.array([0.9])
        for cfg in (AttackConfig(targeted=True), AttackConfig(c=1.5), AttackConfig(c=0.0), AttackConfig(c=-0.5),
                    AttackConfig(c=-0.5, allow_zero_c=True), AttackConfig(clip_min=1.0, clip_max=0.0),
                    AttackConfig(max_features=2), AttackConfig(update="adabelief")):
            with self.assertRaises(pda.errors.ConfigError):
                pda.attacks.di_aa(x, 1, scalar_network(), cfg)
        with self.assertRaises(pda.errors.ClassIndexError):
            pda.attacks.di_aa(x, 1, scalar_network(), AttackConfig(targeted=True, target=5))
        with self.assertRaises(pda.errors.ClassIndexError):
            pda.attacks.di_aa(x, 2, scalar_network(), AttackConfig())


class TestBaselines(unittest.TestCase):

    def test_fgsm_zero_radius(self) -> None:
        x = np.array([0.9])
        outcome = pda.attacks.fgsm(x, 1, scalar_network(), AttackConfig(epsilon_ball=0.0))
        np.testing.assert_array_equal(outcome.adversarial, x)

    def test_fgsm_logistic(self) -> None:
        outcome = pda.attacks.fgsm(np.array([0.9]), 1, scalar_network(), AttackConfig(epsilon_ball=0.1))
        self.assertAlmostEqual(outcome.adversarial[0], 0.8)
        self.assertFalse(outcome.success)
        self.assertEqual(outcome.inner_iterations, 1)

    def test_bim_single_step_equals_fgsm(self) -> None:
        for seed in range(5):
            network = random_network(seed)
            x = np.random.default_rng(seed).random(6)
            label = pda.tensor.predict(network, x)
            cfg = AttackConfig(epsilon_ball=0.1, baseline_step=0.1, baseline_iterations=1)
            np.testing.assert_array_equal(pda.attacks.bim(x, label, network, cfg).adversarial,
                                          pda.attacks.fgsm(x, label, network, cfg).adversarial)

    def test_bim_logistic(self) -> None:
        cfg = AttackConfig(epsilon_ball=0.1, baseline_step=0.01, baseline_iterations=3)
        outcome = pda.attacks.bim(np.array([0.9]), 1, scalar_network(), cfg)
        self.assertAlmostEqual(outcome.adversarial[0], 0.87)
        self.assertEqual(outcome.inner_iterations, 3)

    def test_pgd_zero_radius(self) -> None:
        x = np.array([0.3, 0.6, 0.1, 0.9, 0.5, 0.2])
        network = random_network(1)
        label = pda.tensor.predict(network, x)
        for seed in range(3):
            outcome = pda.attacks.pgd(x, label, network, AttackConfig(epsilon_ball=0.0),
                                      rng=np.random.default_rng(seed))
            np.testing.assert_array_equal(outcome.adversarial, x)

    def test_pgd_deterministic(self) -> None:
        network = random_network(2)
        x = np.random.default_rng(2).random(6)
        label = pda.tensor.predict(network, x)
        first = pda.attacks.pgd(x, label, network, AttackConfig(), rng=np.random.default_rng(9))
        second = pda.attacks.pgd(x, label, network, AttackConfig(), rng=np.random.default_rng(9))
        np.testing.assert_array_equal(first.adversarial, second.adversarial)

    def test_ball_confinement(self) -> None:
        rng = np.random.default_rng(0)
        for run in range(100):
            network = random_network(run % 10)
            x = rng.random(6)
            label = pda.tensor.predict(network, x)
            cfg = AttackConfig(epsilon_ball=float(rng.uniform(0.01, 0.3)))
            for name in ("fgsm", "bim", "pgd"):
                outcome = pda.attacks.run_attack(name, x, label, network, cfg, rng=np.random.default_rng(run))
                self.assertLessEqual(np.max(np.abs(outcome.adversarial - x)), cfg.epsilon_ball)
                self.assertTrue(np.all((outcome.adversarial >= 0.0) & (outcome.adversarial <= 1.0)))

    def test_targeted_baseline(self) -> None:
        network = pda.network.Network((2,), 3, [Dense(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                                                      np.array([0.6, 0.0, 0.0]))])
        cfg = AttackConfig(epsilon_ball=0.3, targeted=True, target=2)
        outcome = pda.attacks.bim(np.array([0.5, 0.5]), 0, network, cfg)
        self.assertTrue(outcome.success)
        self.assertEqual(outcome.predicted, 2)

    def test_default_step_size(self) -> None:
        self.assertAlmostEqual(AttackConfig(epsilon_ball=0.1).baseline_step_size(), 0.01)
        cfg = dataclasses.replace(AttackConfig(), baseline_step=0.02)
        self.assertEqual(cfg.to_dict()["baseline_step"], 0.02)


class TestHelpers(unittest.TestCase):

    def test_clip_box(self) -> None:
        np.testing.assert_array_equal(pda.attacks.clip_box(np.array([-0.5, 0.5, 1.5]), 0.0, 1.0), [0.0, 0.5, 1.0])
        inside = np.array([0.1, 0.7])
        np.testing.assert_array_equal(pda.attacks.clip_box(inside, 0.0, 1.0), inside)
        values = np.random.default_rng(0).normal(size=50)
        once = pda.attacks.clip_box(values, 0.0, 1.0)
        np.testing.assert_array_equal(pda.attacks.clip_box(once, 0.0, 1.0), once)
        with self.assertRaises(pda.errors.ConfigError):
            pda.attacks.clip_box(values, 1.0, 1.0)

    def test_project_linf_is_exact(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.random(8)
            radius = float(rng.uniform(0.0, 0.2))
            projected = pda.attacks.project_linf(x + rng.normal(size=8), x, radius)
            self.assertLessEqual(np.max(np.abs(projected - x)), radius)

    def test_get_attack(self) -> None:
        self.assertIs(pda.attacks.get_attack("diaa"), pda.attacks.di_aa)
        with self.assertRaises(pda.errors.ConfigError):
            pda.attacks.get_attack("cw")


if __name__ == '__main__':
    unittest.main()
