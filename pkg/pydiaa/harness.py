"""Attack suites, hyperparameter sweeps and transfer evaluation over datasets"""

import dataclasses
import time
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

import pydiaa as pda
import pydiaa.attacks
import pydiaa.datasets
import pydiaa.errors
import pydiaa.io
import pydiaa.metrics
import pydiaa.network
import pydiaa.reports
import pydiaa.tensor

Network = pda.network.Network
Dataset = pda.datasets.Dataset
AttackConfig = pda.attacks.AttackConfig
AttackOutcome = pda.attacks.AttackOutcome

# Success rates are computed over every attacked example, including those misclassified before the attack
SR_BASIS = "all examples"
DEFAULT_T_GRID = tuple(range(1, 22))


@dataclasses.dataclass
class SuiteReport:
    """Aggregated result of one attack over a dataset; norm statistics cover successful attacks only"""
    attack: str
    n: int
    success_rate: float
    stats: Dict[str, pda.metrics.NormStats]
    config: Dict[str, Any]
    wall_ms: float
    outcomes: List[AttackOutcome] = dataclasses.field(default_factory=list, repr=False)


class SweepRow(NamedTuple):
    """One grid point of a hyperparameter sweep"""
    iterations: int
    step: float
    c: float
    report: SuiteReport


class FullSuccessRow(NamedTuple):
    """For one (T, c) pair: the smallest step of the grid at which DI-AA succeeds on every example, if any"""
    iterations: int
    c: float
    step: Optional[float]
    report: Optional[SuiteReport]


class PerformanceRow(NamedTuple):
    """Clean accuracy of a model and its accuracy under the PGD baseline"""
    model: str
    n: int
    accuracy: float
    pgd_accuracy: float


class TransferReport(NamedTuple):
    """Accuracy of a target model on clean inputs and on adversarial examples crafted on a source model"""
    attack: str
    n: int
    clean_accuracy: float
    adversarial_accuracy: float
    accuracy_drop: float
    source_success_rate: float

    @property
    def accuracy_drop_pct(self) -> float:
        """The drop in percentage points"""
        return 100.0 * self.accuracy_drop


def aggregate(attack: str, outcomes: Sequence[AttackOutcome], config: Dict[str, Any],
              wall_ms: float = 0.0) -> SuiteReport:
    """Builds a suite report from per-example outcomes"""
    successful = [outcome for outcome in outcomes if outcome.success]
    success_rate = len(successful) / len(outcomes) if outcomes else 0.0
    stats = pda.metrics.stats_by_norm([(outcome.l0, outcome.l1, outcome.l2) for outcome in successful])
    return SuiteReport(attack, len(outcomes), success_rate, stats, config, wall_ms, list(outcomes))


def example_rng(seed: int, index: int) -> np.random.Generator:
    """Random stream of one example, independent of the order in which examples are attacked"""
    return np.random.default_rng([seed, index])


def attack_examples(network: Network, examples: np.ndarray, labels: np.ndarray, attack: str,
                    cfg: AttackConfig) -> List[AttackOutcome]:
    """Runs one attack over every example, in index order"""
    outcomes = []
    progress = tqdm(range(len(labels)), desc=attack, disable=not pda.io.is_verbose(), leave=False)
    for index in progress:
        outcomes.append(pda.attacks.run_attack(attack, examples[index], int(labels[index]), network, cfg,
                                               rng=example_rng(cfg.seed, index)))
    return outcomes


def prepare(network: Network, dataset: Dataset, limit: Optional[int]) -> Dataset:
    """Checks the dataset against the network and applies the optional prefix slice"""
    if len(dataset) == 0:
        raise pda.errors.DomainError("Cannot attack an empty dataset")
    if dataset.classes > network.classes:
        raise pda.errors.LabelError("Dataset has {:d} classes, the network only {:d}".
                                    format(dataset.classes, network.classes))
    if limit is not None:
        dataset = dataset.head(limit)
    dataset.shaped_examples(network.input_shape)
    return dataset


def run_attack_suite(network: Network, dataset: Dataset, attacks: Sequence[str], cfg: AttackConfig,
                     limit: Optional[int] = None, out: Optional[Path] = None,
                     header: Optional[Dict[str, Any]] = None) -> List[SuiteReport]:
    """Runs each named attack over the dataset and aggregates SR and L0/L1/L2 statistics per attack"""
    for attack in attacks:
        pda.attacks.get_attack(attack)
    cfg.validate(network.features, network.classes)
    dataset = prepare(network, dataset, limit)
    folded = pda.network.fold_batchnorm(network)
    examples = dataset.shaped_examples(folded.input_shape)

    reports = []
    for attack in attacks:
        start = time.perf_counter()
        outcomes = attack_examples(folded, examples, dataset.labels, attack, cfg)
        wall_ms = (time.perf_counter() - start) * 1000.0
        report = aggregate(attack, outcomes, cfg.to_dict(), wall_ms)
        pda.io.log("{:s}: SR {:.4f} over {:d} examples, mean L0 {:.2f}, L2 {:.4f} ({:.0f} ms)".
                   format(attack, report.success_rate, report.n, report.stats["l0"].mean,
                          report.stats["l2"].mean, wall_ms))
        reports.append(report)

    if out is not None:
        pda.reports.write_suite_reports(reports, out, suite_header(cfg, dataset, header))
    return reports


def suite_header(cfg: AttackConfig, dataset: Dataset, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Report header: config, seed, SR basis, dataset, plus caller-provided fields such as the model hash"""
    header = {"config": cfg.to_dict(), "seed": cfg.seed, "sr_basis": SR_BASIS,
              "dataset": dataset.name, "examples": len(dataset)}
    header.update(extra or {})
    return header


def hyperparameter_sweep(network: Network, dataset: Dataset, t_grid: Sequence[int] = DEFAULT_T_GRID,
                         eps_grid: Sequence[float] = (0.0032,), c_grid: Sequence[float] = (1.0,),
                         base_cfg: Optional[AttackConfig] = None, slice_fraction: float = 0.1,
                         out: Optional[Path] = None, header: Optional[Dict[str, Any]] = None) -> List[SweepRow]:
    """DI-AA over the leading slice of the dataset for every (T, step, c) grid point"""
    if not t_grid or not eps_grid or not c_grid:
        raise pda.errors.ConfigError("Every sweep grid needs at least one value")
    if not 0.0 < slice_fraction <= 1.0:
        raise pda.errors.ConfigError("Sweep slice must be in (0, 1], got {:g}".format(slice_fraction))
    base_cfg = AttackConfig() if base_cfg is None else base_cfg
    sliced = dataset.fraction(slice_fraction)
    pda.io.log("Sweeping {:d} grid points over {:d} examples".
               format(len(t_grid) * len(eps_grid) * len(c_grid), len(sliced)))

    rows = []
    for iterations in t_grid:
        for step in eps_grid:
            for c in c_grid:
                cfg = dataclasses.replace(base_cfg, iterations=int(iterations), step=float(step), c=float(c))
                report = run_attack_suite(network, sliced, ["diaa"], cfg)[0]
                rows.append(SweepRow(int(iterations), float(step), float(c), report))

    full_success = full_success_steps(rows)
    for row in full_success:
        if row.report is None:
            pda.io.log("T {:d}, c {:g}: no step of the grid reaches an SR of 1".format(row.iterations, row.c))
        else:
            pda.io.log("T {:d}, c {:g}: SR 1 first at step {:g}, mean L0 {:.2f}".
                       format(row.iterations, row.c, row.step, row.report.stats["l0"].mean))
    if out is not None:
        sweep_header = suite_header(base_cfg, sliced, header)
        sweep_header.update({"slice": slice_fraction, "t_grid": [int(value) for value in t_grid],
                             "eps_grid": [float(value) for value in eps_grid],
                             "c_grid": [float(value) for value in c_grid]})
        pda.reports.write_sweep(rows, full_success, out, sweep_header)
    return rows


def full_success_steps(rows: Sequence[SweepRow]) -> List[FullSuccessRow]:
    """Per (T, c) pair in grid order, the smallest step whose success rate is 1, with its report"""
    pairs = []  # type: List[Tuple[int, float]]
    for row in rows:
        if (row.iterations, row.c) not in pairs:
            pairs.append((row.iterations, row.c))
    result = []
    for iterations, c in pairs:
        complete = [row for row in rows
                    if (row.iterations, row.c) == (iterations, c) and row.report.success_rate >= 1.0]
        best = min(complete, key=lambda row: row.step) if complete else None
        result.append(FullSuccessRow(iterations, c, None if best is None else best.step,
                                     None if best is None else best.report))
    return result


def model_performance(networks: Dict[str, Network], dataset: Dataset, cfg: AttackConfig,
                      limit: Optional[int] = None, out: Optional[Path] = None,
                      header: Optional[Dict[str, Any]] = None) -> List[PerformanceRow]:
    """Clean accuracy of every named model and its accuracy under untargeted PGD with the epsilon_ball of cfg;
    a plain and an adversarially trained twin side by side give the clean/robust comparison"""
    cfg = dataclasses.replace(cfg, targeted=False, target=None)
    if limit is not None:
        dataset = dataset.head(limit)
    rows = []
    for name, network in networks.items():
        cfg.validate(network.features, network.classes)
        checked = prepare(network, dataset, None)
        folded = pda.network.fold_batchnorm(network)
        accuracy = pda.network.evaluate_accuracy(folded, checked)
        outcomes = attack_examples(folded, checked.shaped_examples(folded.input_shape), checked.labels, "pgd", cfg)
        pgd_accuracy = np.mean([outcome.predicted == label for outcome, label in zip(outcomes, checked.labels)])
        row = PerformanceRow(name, len(checked), float(accuracy), float(pgd_accuracy))
        pda.io.log("{:s}: accuracy {:.4f}, under PGD with radius {:g} {:.4f} over {:d} examples".
                   format(name, row.accuracy, cfg.epsilon_ball, row.pgd_accuracy, row.n))
        rows.append(row)
    if out is not None:
        pda.reports.write_performance(rows, out, suite_header(cfg, dataset, header))
    return rows


def transfer_evaluate(source: Network, target: Network, dataset: Dataset, attack: str, cfg: AttackConfig,
                      limit: Optional[int] = None, out: Optional[Path] = None,
                      header: Optional[Dict[str, Any]] = None) -> TransferReport:
    """Crafts adversarial examples on the source model for the examples it classifies correctly, and
    measures the target model's accuracy drop from clean to adversarial inputs"""
    # pylint: disable=too-many-locals
    if source.input_shape != target.input_shape or source.classes != target.classes:
        raise pda.errors.ConfigError("Source {:s}/{:d} and target {:s}/{:d} models are incompatible".
                                     format(str(source.input_shape), source.classes,
                                            str(target.input_shape), target.classes))
    pda.attacks.get_attack(attack)
    cfg.validate(source.features, source.classes)
    dataset = prepare(source, dataset, limit)
    source = pda.network.fold_batchnorm(source)
    target = pda.network.fold_batchnorm(target)
    examples = dataset.shaped_examples(source.input_shape)

    correct = [index for index in range(len(dataset))
               if pda.tensor.predict(source, examples[index]) == dataset.labels[index]]
    if not correct:
        raise pda.errors.DomainError("The source model classifies none of the examples correctly")
    examples, labels = examples[correct], dataset.labels[correct]
    outcomes = attack_examples(source, examples, labels, attack, cfg)

    clean = np.mean([pda.tensor.predict(target, x) == label for x, label in zip(examples, labels)])
    adversarial = np.mean([pda.tensor.predict(target, outcome.adversarial) == label
                           for outcome, label in zip(outcomes, labels)])
    success_rate = np.mean([outcome.success for outcome in outcomes])
    report = TransferReport(attack, len(labels), float(clean), float(adversarial), float(clean - adversarial),
                            float(success_rate))
    pda.io.log("Transfer {:s}: target accuracy {:.4f} -> {:.4f} ({:.2f} points) over {:d} examples".
               format(attack, report.clean_accuracy, report.adversarial_accuracy, report.accuracy_drop_pct,
                      report.n))
    if out is not None:
        pda.reports.write_transfer(report, out, suite_header(cfg, dataset, header))
    return report
