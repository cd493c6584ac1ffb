"""DI-AA and the FGSM/BIM/PGD baselines

DI-AA ranks the input features once by their deep Taylor relevance for the true class and then
enables them one at a time. After every enablement the inner AEGen loop takes up to T masked
gradient steps on Z(x')_true + c * ||x - x'||_2 (or c * ||x - x'||_2 - Z(x')_target when targeted),
carrying x' forward, until the prediction flips.
"""

import dataclasses
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

import pydiaa as pda
import pydiaa.dtd
import pydiaa.errors
import pydiaa.metrics
import pydiaa.network
import pydiaa.tensor

Tensor = pda.tensor.Tensor
Network = pda.network.Network

UPDATE_RULES = ("gradient", "adam")


@dataclasses.dataclass
class AttackConfig:
    """Settings of DI-AA (step, iterations, c, max_features, update) and of the baselines (epsilon_ball...)"""
    # pylint: disable=too-many-instance-attributes
    step: float = 0.0032
    iterations: int = 21
    c: float = 1.0
    clip_min: float = 0.0
    clip_max: float = 1.0
    max_features: Optional[int] = None
    targeted: bool = False
    target: Optional[int] = None
    epsilon_ball: float = 0.1
    baseline_step: Optional[float] = None
    baseline_iterations: int = 40
    update: str = "gradient"
    seed: int = 0
    allow_zero_c: bool = False

    def validate(self, features: Optional[int] = None, classes: Optional[int] = None) -> None:
        """Raises a config error for out-of-range settings"""
        if self.clip_min >= self.clip_max:
            raise pda.errors.ConfigError("clip_min ({:g}) must be below clip_max ({:g})".
                                         format(self.clip_min, self.clip_max))
        if self.step < 0 or self.iterations < 1:
            raise pda.errors.ConfigError("Step must be >= 0 and iterations >= 1")
        low_ok = self.c >= 0.0 if self.allow_zero_c else self.c > 0.0
        if not low_ok or self.c > 1.0:
            raise pda.errors.ConfigError("Constant c must be in {:s}, 1], got {:g}".
                                         format("[0" if self.allow_zero_c else "(0", self.c))
        if self.max_features is not None and (self.max_features < 1 or
                                              (features is not None and self.max_features > features)):
            raise pda.errors.ConfigError("max_features must be in [1, n], got {:d}".format(self.max_features))
        if self.epsilon_ball < 0 or self.baseline_iterations < 1 or \
                (self.baseline_step is not None and self.baseline_step < 0):
            raise pda.errors.ConfigError("Baselines need epsilon_ball >= 0, step >= 0 and iterations >= 1")
        if self.update not in UPDATE_RULES:
            raise pda.errors.ConfigError("Invalid update rule '{:s}', choose from {:s}".
                                         format(self.update, ", ".join(UPDATE_RULES)))
        if self.targeted:
            if self.target is None:
                raise pda.errors.ConfigError("Targeted attacks need a target label")
            if classes is not None and not 0 <= self.target < classes:
                raise pda.errors.ClassIndexError("Target {:d} out of range for {:d} classes".
                                                 format(self.target, classes))

    def baseline_step_size(self) -> float:
        """BIM/PGD step size, a tenth of the ball radius unless set"""
        return self.epsilon_ball / 10.0 if self.baseline_step is None else self.baseline_step

    def to_dict(self) -> Dict[str, Any]:
        """Config echo for report headers"""
        echo = dataclasses.asdict(self)
        echo["baseline_step"] = self.baseline_step_size()
        return echo


@dataclasses.dataclass
class AttackOutcome:
    """Result of attacking one example"""
    adversarial: Tensor
    success: bool
    predicted: int
    outer_iterations: int
    inner_iterations: int
    l0: float
    l1: float
    l2: float

    def to_dict(self) -> Dict[str, Any]:
        """Outcome log entry (without the adversarial example itself)"""
        return {"success": self.success, "predicted": self.predicted, "outer_iterations": self.outer_iterations,
                "inner_iterations": self.inner_iterations, "l0": self.l0, "l1": self.l1, "l2": self.l2}


class Mask:
    """Binary feature selector; features are only ever enabled, never reset"""

    def __init__(self, shape: Tuple[int, ...]) -> None:
        self.values = np.zeros(shape)
        self.enabled = []  # type: List[int]

    def enable(self, index: int) -> None:
        """Enables one feature by its flat (row-major) index"""
        flat = self.values.reshape(-1)
        if flat[index] == 0:
            flat[index] = 1.0
            self.enabled.append(int(index))

    @property
    def selected(self) -> np.ndarray:
        """Boolean view of the enabled features"""
        return self.values > 0


class AdamState:
    """Adam moments for the optional adaptive update of AEGen"""

    def __init__(self, shape: Tuple[int, ...], beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8) -> None:
        self.first = np.zeros(shape)
        self.second = np.zeros(shape)
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.step_count = 0

    def direction(self, grad: Tensor) -> Tensor:
        """Bias-corrected Adam direction for the given gradient"""
        self.step_count += 1
        self.first = self.beta1 * self.first + (1.0 - self.beta1) * grad
        self.second = self.beta2 * self.second + (1.0 - self.beta2) * grad * grad
        first_hat = self.first / (1.0 - self.beta1 ** self.step_count)
        second_hat = self.second / (1.0 - self.beta2 ** self.step_count)
        return first_hat / (np.sqrt(second_hat) + self.epsilon)


def clip_box(x_adv: Tensor, clip_min: float, clip_max: float) -> Tensor:
    """Element-wise clamp to [clip_min, clip_max]"""
    if clip_min >= clip_max:
        raise pda.errors.ConfigError("clip_min ({:g}) must be below clip_max ({:g})".format(clip_min, clip_max))
    return np.clip(x_adv, clip_min, clip_max)


def project_linf(x_adv: Tensor, x: Tensor, radius: float) -> Tensor:
    """Projects onto the L-infinity ball around x; exact, also after floating-point rounding"""
    projected = np.clip(x_adv, x - radius, x + radius)
    outside = np.abs(projected - x) > radius
    while np.any(outside):
        projected[outside] = np.nextafter(projected[outside], x[outside])
        outside = np.abs(projected - x) > radius
    return projected


def is_success(predicted: int, true_class: int, cfg: AttackConfig) -> bool:
    """Untargeted: the prediction left the true class. Targeted: the prediction is the target"""
    if cfg.targeted:
        return predicted == cfg.target
    return predicted != true_class


def check_inputs(x: Tensor, true_class: int, network: Network, cfg: AttackConfig) -> None:
    """Common preconditions of all attacks"""
    pda.tensor.check_shape(x, network.input_shape)
    if not 0 <= true_class < network.classes:
        raise pda.errors.ClassIndexError("True class {:d} out of range for {:d} classes".
                                         format(true_class, network.classes))
    cfg.validate(network.features, network.classes)


def make_outcome(network: Network, x: Tensor, x_adv: Tensor, true_class: int, cfg: AttackConfig,
                 outer_iterations: int, inner_iterations: int) -> AttackOutcome:
    """Evaluates the final example independently of the attack loop and measures the perturbation"""
    predicted = pda.tensor.predict(network, x_adv)
    l0, l1, l2 = pda.metrics.lp_norms(x, x_adv)
    return AttackOutcome(x_adv, is_success(predicted, true_class, cfg), predicted,
                         outer_iterations, inner_iterations, l0, l1, l2)


def build_objective(x: Tensor, true_class: int, cfg: AttackConfig) -> pda.tensor.Objective:
    """Z(x')_true + c * L2 (untargeted) or c * L2 - Z(x')_target (targeted)"""
    if cfg.targeted:
        return pda.tensor.LogitWithL2(cfg.target, x, cfg.c, sign=-1.0)
    return pda.tensor.LogitWithL2(true_class, x, cfg.c)


def attack_objective(network: Network, x: Tensor, x_adv: Tensor, true_class: int,
                     cfg: AttackConfig) -> Tuple[float, Tensor]:
    """Value of the attack objective at x' and its gradient w.r.t. x'"""
    pda.tensor.check_shape(x_adv, x.shape, "adversarial example")
    value, grad, _ = pda.tensor.objective_and_gradient(network, x_adv, build_objective(x, true_class, cfg))
    return value, grad


def ae_gen(x_adv: Tensor, x: Tensor, true_class: int, network: Network, cfg: AttackConfig,
           mask: Mask, adam: Optional[AdamState] = None) -> Tuple[Tensor, bool, int]:
    """Up to T masked gradient steps on the attack objective; returns (x', success, steps taken).
    Success is checked before the first step and after every step."""
    objective = build_objective(x, true_class, cfg)
    selected = mask.selected
    x_adv = np.array(x_adv, dtype=np.float64)
    _, grad, trace = pda.tensor.objective_and_gradient(network, x_adv, objective)
    if is_success(int(np.argmax(trace.logits)), true_class, cfg):
        return x_adv, True, 0
    if not np.any(selected):
        return x_adv, False, 0

    for step in range(1, cfg.iterations + 1):
        # masked-off coordinates must not build up Adam moments
        direction = grad if adam is None else adam.direction(np.where(selected, grad, 0.0))
        moved = clip_box(x_adv - cfg.step * direction, cfg.clip_min, cfg.clip_max)
        x_adv = np.where(selected, moved, x_adv)
        _, grad, trace = pda.tensor.objective_and_gradient(network, x_adv, objective)
        if is_success(int(np.argmax(trace.logits)), true_class, cfg):
            return x_adv, True, step
    return x_adv, False, cfg.iterations


def di_aa(x: Tensor, true_class: int, network: Network, cfg: AttackConfig) -> AttackOutcome:
    """Saliency-ordered one-feature-at-a-time attack; unenabled features keep their exact value"""
    check_inputs(x, true_class, network, cfg)
    x = np.asarray(x, dtype=np.float64)
    if is_success(pda.tensor.predict(network, x), true_class, cfg):
        return make_outcome(network, x, x.copy(), true_class, cfg, 0, 0)

    saliency_class = cfg.target if cfg.targeted else true_class
    saliency = pda.dtd.dtd_relevance(network, x, saliency_class, cfg.clip_min, cfg.clip_max)
    order = pda.dtd.sort_saliency(saliency)
    limit = network.features if cfg.max_features is None else cfg.max_features

    mask = Mask(x.shape)
    adam = AdamState(x.shape) if cfg.update == "adam" else None
    x_adv = x.copy()
    outer, inner = 0, 0
    for feature in order[:limit]:
        outer += 1
        mask.enable(int(feature))
        x_adv, success, steps = ae_gen(x_adv, x, true_class, network, cfg, mask, adam)
        inner += steps
        if success:
            break
    return make_outcome(network, x, x_adv, true_class, cfg, outer, inner)


def baseline_objective(true_class: int, cfg: AttackConfig) -> Tuple[pda.tensor.Objective, float]:
    """Cross-entropy to ascend (untargeted, +1) or to descend towards the target (targeted, -1)"""
    if cfg.targeted:
        return pda.tensor.CrossEntropy(cfg.target), -1.0
    return pda.tensor.CrossEntropy(true_class), 1.0


def signed_step(x_adv: Tensor, x: Tensor, grad: Tensor, step: float, direction: float,
                cfg: AttackConfig) -> Tensor:
    """One signed-gradient step followed by the box clip and the L-infinity projection"""
    moved = x_adv + direction * step * np.sign(grad)
    return project_linf(clip_box(moved, cfg.clip_min, cfg.clip_max), x, cfg.epsilon_ball)


def iterate_signed(x_adv: Tensor, x: Tensor, true_class: int, network: Network, cfg: AttackConfig,
                   early_exit: bool) -> Tuple[Tensor, int]:
    """The BIM/PGD loop: baseline_iterations signed steps, stopping early on success"""
    objective, direction = baseline_objective(true_class, cfg)
    step_size = cfg.baseline_step_size()
    for step in range(cfg.baseline_iterations + 1):
        _, grad, trace = pda.tensor.objective_and_gradient(network, x_adv, objective)
        if early_exit and is_success(int(np.argmax(trace.logits)), true_class, cfg):
            return x_adv, step
        if step == cfg.baseline_iterations:
            break
        x_adv = signed_step(x_adv, x, grad, step_size, direction, cfg)
    return x_adv, cfg.baseline_iterations


def fgsm(x: Tensor, true_class: int, network: Network, cfg: AttackConfig) -> AttackOutcome:
    """Single signed-gradient step of size epsilon_ball on the cross-entropy"""
    check_inputs(x, true_class, network, cfg)
    x = np.asarray(x, dtype=np.float64)
    objective, direction = baseline_objective(true_class, cfg)
    _, grad, trace = pda.tensor.objective_and_gradient(network, x, objective)
    if is_success(int(np.argmax(trace.logits)), true_class, cfg):
        return make_outcome(network, x, x.copy(), true_class, cfg, 0, 0)
    x_adv = signed_step(x.copy(), x, grad, cfg.epsilon_ball, direction, cfg)
    return make_outcome(network, x, x_adv, true_class, cfg, 0, 1)


def bim(x: Tensor, true_class: int, network: Network, cfg: AttackConfig) -> AttackOutcome:
    """Iterated FGSM with the baseline step size, projected onto the epsilon ball every step"""
    check_inputs(x, true_class, network, cfg)
    x = np.asarray(x, dtype=np.float64)
    x_adv, steps = iterate_signed(x.copy(), x, true_class, network, cfg, early_exit=True)
    return make_outcome(network, x, x_adv, true_class, cfg, 0, steps)


def pgd(x: Tensor, true_class: int, network: Network, cfg: AttackConfig,
        rng: Optional[np.random.Generator] = None, early_exit: bool = True) -> AttackOutcome:
    """BIM from a uniform random start inside the epsilon ball"""
    check_inputs(x, true_class, network, cfg)
    x = np.asarray(x, dtype=np.float64)
    if early_exit and is_success(pda.tensor.predict(network, x), true_class, cfg):
        return make_outcome(network, x, x.copy(), true_class, cfg, 0, 0)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    start = x + rng.uniform(-cfg.epsilon_ball, cfg.epsilon_ball, size=x.shape)
    x_adv = project_linf(clip_box(start, cfg.clip_min, cfg.clip_max), x, cfg.epsilon_ball)
    x_adv, steps = iterate_signed(x_adv, x, true_class, network, cfg, early_exit)
    return make_outcome(network, x, x_adv, true_class, cfg, 0, steps)


ATTACKS = {
    "diaa": di_aa,
    "fgsm": fgsm,
    "bim": bim,
    "pgd": pgd,
}  # type: Dict[str, Callable[..., AttackOutcome]]


def get_attack(name: str) -> Callable[..., AttackOutcome]:
    """Selects an attack based on a string name"""
    if name not in ATTACKS:
        raise pda.errors.ConfigError("Invalid attack '{:s}', choose from {:s}".format(name, ", ".join(ATTACKS)))
    return ATTACKS[name]


def run_attack(name: str, x: Tensor, true_class: int, network: Network, cfg: AttackConfig,
               rng: Optional[np.random.Generator] = None) -> AttackOutcome:
    """Runs a named attack; only PGD consumes the random generator"""
    attack = get_attack(name)
    if name == "pgd":
        return attack(x, true_class, network, cfg, rng=rng)
    return attack(x, true_class, network, cfg)
