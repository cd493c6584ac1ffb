#!/usr/bin/env python3
"""Main entry point for the pydiaa package"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pydiaa as pda
import pydiaa.attacks
import pydiaa.datasets
import pydiaa.dtd
import pydiaa.errors
import pydiaa.harness
import pydiaa.io
import pydiaa.network
import pydiaa.reports
import pydiaa.training


def parse_int_grid(text: str) -> List[int]:
    """Parses '1..21' (inclusive range) or '1,5,9'"""
    try:
        if ".." in text:
            first, last = text.split("..")
            return list(range(int(first), int(last) + 1))
        return [int(value) for value in text.split(",")]
    except ValueError as error:
        raise pda.errors.ConfigError("Invalid integer grid '{:s}': {:s}".format(text, str(error)))


def parse_float_grid(text: str) -> List[float]:
    """Parses '0.1,0.5,1.0'"""
    try:
        return [float(value) for value in text.split(",")]
    except ValueError as error:
        raise pda.errors.ConfigError("Invalid grid '{:s}': {:s}".format(text, str(error)))


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    """Sets the dataset arguments shared by all subcommands"""
    parser.add_argument("--data", required=True, help="Dataset file (IDX images or CSV)", type=Path)
    parser.add_argument("--format", required=False, help="Dataset format (idx or csv), default from the suffix",
                        type=str, default=None, dest="data_format")
    parser.add_argument("--labels", required=False, help="IDX label file, default derived from --data",
                        type=Path, default=None)
    parser.add_argument("--classes", required=False, help="Number of classes m", type=int, default=None)


def add_attack_arguments(parser: argparse.ArgumentParser, target_flag: str = "--target") -> None:
    """Sets the attack configuration arguments"""
    parser.add_argument("--attack", required=False, help="Attack(s), comma separated: diaa, fgsm, bim, pgd",
                        type=str, default="diaa")
    parser.add_argument("--eps", required=False, help="DI-AA step (perturbation rate)", type=float, default=0.0032)
    parser.add_argument("--iters", required=False, help="DI-AA inner iterations T", type=int, default=21)
    parser.add_argument("--c", required=False, help="Constant c of the L2 term", type=float, default=1.0)
    parser.add_argument("--max-features", required=False, help="Outer-loop feature bound", type=int, default=None)
    parser.add_argument("--targeted", required=False, help="Targeted attack", action="store_true")
    parser.add_argument(target_flag, required=False, help="Target label", type=int, default=None, dest="target")
    parser.add_argument("--eps-ball", required=False, help="Baseline L-inf radius", type=float, default=0.1)
    parser.add_argument("--baseline-steps", required=False, help="BIM/PGD steps", type=int, default=40)
    parser.add_argument("--update", required=False, help="AEGen update (gradient or adam)", type=str,
                        default="gradient")
    parser.add_argument("--limit", required=False, help="Attack only the first N examples", type=int, default=None)
    parser.add_argument("--seed", required=False, help="Random seed", type=int, default=0)


def parse_arguments(argv: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """Sets the command-line arguments"""
    parser = argparse.ArgumentParser(description="pydiaa interface")
    parser.add_argument("--quiet", required=False, help="Silence log messages", action="store_true")
    commands = parser.add_subparsers(dest="command")
    commands.required = True

    train = commands.add_parser("train", help="Train a model, optionally adversarially")
    add_data_arguments(train)
    train.add_argument("--arch", required=False, help="Architecture (dense, convnet or kdd)", type=str,
                       default="dense")
    train.add_argument("--out", required=True, help="Output model JSON", type=Path)
    train.add_argument("--adv", required=False, help="PGD adversarial training", action="store_true")
    train.add_argument("--eps-ball", required=False, help="Adversarial training radius", type=float, default=0.1)
    train.add_argument("--steps", required=False, help="Adversarial training PGD steps", type=int, default=10)
    train.add_argument("--step-size", required=False, help="Adversarial training PGD step", type=float,
                       default=0.025)
    train.add_argument("--epochs", required=False, help="Training epochs", type=int, default=10)
    train.add_argument("--batch-size", required=False, help="Minibatch size", type=int, default=32)
    train.add_argument("--lr", required=False, help="Learning rate", type=float, default=1e-3)
    train.add_argument("--optimizer", required=False, help="sgd or adam", type=str, default="adam")
    train.add_argument("--seed", required=False, help="Random seed", type=int, default=0)
    train.add_argument("--test-data", required=False, help="Held-out dataset for accuracy", type=Path,
                       default=None)

    attack = commands.add_parser("attack", help="Run an attack suite")
    attack.add_argument("--model", required=True, help="Model JSON", type=Path)
    add_data_arguments(attack)
    add_attack_arguments(attack)
    attack.add_argument("--out", required=True, help="Report name (writes .csv and .json)", type=Path)

    sweep = commands.add_parser("sweep", help="DI-AA hyperparameter sweep")
    sweep.add_argument("--model", required=True, help="Model JSON", type=Path)
    add_data_arguments(sweep)
    sweep.add_argument("--t-grid", required=False, help="T values, e.g. 1..21", type=str, default="1..21")
    sweep.add_argument("--eps-grid", required=False, help="Step values, e.g. 0.001,0.0032", type=str,
                       default="0.0032")
    sweep.add_argument("--c-grid", required=False, help="c values, e.g. 0.1,0.5,1.0", type=str, default="1.0")
    sweep.add_argument("--slice", required=False, help="Leading fraction of the dataset", type=float, default=0.1)
    sweep.add_argument("--seed", required=False, help="Random seed", type=int, default=0)
    sweep.add_argument("--out", required=True, help="Sweep name (writes .csv and .json)", type=Path)

    performance = commands.add_parser("performance", help="Clean and PGD accuracy of one or more models")
    performance.add_argument("--model", required=True, help="Model JSON file(s), comma separated", type=str)
    add_data_arguments(performance)
    performance.add_argument("--eps-ball", required=False, help="PGD L-inf radius", type=float, default=0.1)
    performance.add_argument("--baseline-steps", required=False, help="PGD steps", type=int, default=40)
    performance.add_argument("--limit", required=False, help="Use only the first N examples", type=int,
                             default=None)
    performance.add_argument("--seed", required=False, help="Random seed", type=int, default=0)
    performance.add_argument("--out", required=True, help="Report name (writes .csv and .json)", type=Path)

    transfer = commands.add_parser("transfer", help="Transfer evaluation between two models")
    transfer.add_argument("--source", required=True, help="Source model JSON", type=Path)
    transfer.add_argument("--target-model", "--target", dest="target_model", required=True,
                          help="Target model JSON", type=Path)
    add_data_arguments(transfer)
    add_attack_arguments(transfer, target_flag="--target-label")
    transfer.add_argument("--out", required=True, help="Report name (writes .csv and .json)", type=Path)

    explain = commands.add_parser("explain", help="Export the saliency map of one example")
    explain.add_argument("--model", required=True, help="Model JSON", type=Path)
    add_data_arguments(explain)
    explain.add_argument("--index", required=False, help="Example index", type=int, default=0)
    explain.add_argument("--class-index", required=False, help="Class to explain, default the label", type=int,
                         default=None)
    explain.add_argument("--out-prefix", required=True, help="Output prefix (writes .csv and .pgm)", type=Path)

    return vars(parser.parse_args(argv))


def load_data(args: Dict[str, Any], path: Optional[Path] = None) -> 'pda.datasets.Dataset':
    """Loads the dataset named on the command line"""
    path = args["data"] if path is None else path
    data_format = args["data_format"]
    if data_format is None:
        data_format = "csv" if path.suffix == ".csv" else "idx"
    labels = args["labels"] if path == args["data"] else None
    return pda.datasets.load_dataset(path, data_format, labels, args["classes"])


def attack_config(args: Dict[str, Any]) -> 'pda.attacks.AttackConfig':
    """Maps the attack arguments onto an attack configuration"""
    return pda.attacks.AttackConfig(step=args["eps"], iterations=args["iters"], c=args["c"],
                                    max_features=args["max_features"], targeted=args["targeted"],
                                    target=args["target"], epsilon_ball=args["eps_ball"],
                                    baseline_iterations=args["baseline_steps"], update=args["update"],
                                    seed=args["seed"])


def command_train(args: Dict[str, Any]) -> None:
    """Trains a model and stores it"""
    dataset = load_data(args)
    cfg = pda.training.TrainConfig(epochs=args["epochs"], batch_size=args["batch_size"], learning_rate=args["lr"],
                                   optimizer=args["optimizer"], seed=args["seed"], adversarial=args["adv"],
                                   eps_ball=args["eps_ball"], adv_steps=args["steps"],
                                   adv_step_size=args["step_size"])
    network = pda.network.build_network(args["arch"], dataset.shape, dataset.classes, seed=args["seed"])
    if cfg.adversarial:
        network = pda.training.adversarial_train(network, dataset, cfg)
    else:
        network = pda.training.train(network, dataset, cfg)
    pda.io.save_model(network, args["out"])
    if args["test_data"] is not None:
        test_set = load_data(args, args["test_data"])
        pgd_cfg = pda.attacks.AttackConfig(epsilon_ball=args["eps_ball"], seed=args["seed"])
        pda.harness.model_performance({str(args["out"]): network}, test_set, pgd_cfg)


def command_attack(args: Dict[str, Any]) -> None:
    """Runs the attack suite and writes the reports"""
    network = pda.io.load_model(args["model"])
    dataset = load_data(args)
    header = {"model": str(args["model"]), "model_sha256": pda.io.file_hash(args["model"])}
    pda.harness.run_attack_suite(network, dataset, args["attack"].split(","), attack_config(args),
                                 limit=args["limit"], out=args["out"], header=header)


def command_sweep(args: Dict[str, Any]) -> None:
    """Runs the DI-AA hyperparameter sweep"""
    network = pda.io.load_model(args["model"])
    dataset = load_data(args)
    base_cfg = pda.attacks.AttackConfig(seed=args["seed"])
    header = {"model": str(args["model"]), "model_sha256": pda.io.file_hash(args["model"])}
    pda.harness.hyperparameter_sweep(network, dataset, parse_int_grid(args["t_grid"]),
                                     parse_float_grid(args["eps_grid"]), parse_float_grid(args["c_grid"]),
                                     base_cfg=base_cfg, slice_fraction=args["slice"], out=args["out"],
                                     header=header)


def command_performance(args: Dict[str, Any]) -> None:
    """Tabulates clean and PGD accuracy per model"""
    paths = [Path(name) for name in args["model"].split(",")]
    networks = {str(path): pda.io.load_model(path) for path in paths}
    dataset = load_data(args)
    cfg = pda.attacks.AttackConfig(epsilon_ball=args["eps_ball"], baseline_iterations=args["baseline_steps"],
                                   seed=args["seed"])
    header = {"models": {str(path): pda.io.file_hash(path) for path in paths}}
    pda.harness.model_performance(networks, dataset, cfg, limit=args["limit"], out=args["out"], header=header)


def command_transfer(args: Dict[str, Any]) -> None:
    """Crafts examples on the source model and evaluates them on the target model"""
    source = pda.io.load_model(args["source"])
    target = pda.io.load_model(args["target_model"])
    dataset = load_data(args)
    header = {"source": str(args["source"]), "source_sha256": pda.io.file_hash(args["source"]),
              "target": str(args["target_model"]), "target_sha256": pda.io.file_hash(args["target_model"])}
    pda.harness.transfer_evaluate(source, target, dataset, args["attack"], attack_config(args),
                                  limit=args["limit"], out=args["out"], header=header)


def command_explain(args: Dict[str, Any]) -> None:
    """Exports the deep Taylor saliency map of one example"""
    network = pda.network.fold_batchnorm(pda.io.load_model(args["model"]))
    dataset = load_data(args)
    if not 0 <= args["index"] < len(dataset):
        raise pda.errors.ConfigError("Example index {:d} outside the {:d} examples".format(args["index"],
                                                                                         len(dataset)))
    x = dataset.shaped_examples(network.input_shape)[args["index"]]
    class_index = int(dataset.labels[args["index"]]) if args["class_index"] is None else args["class_index"]
    relevance_map = pda.dtd.dtd_relevance(network, x, class_index)
    pda.reports.export_saliency(relevance_map, args["out_prefix"])


COMMANDS = {
    "train": command_train,
    "attack": command_attack,
    "sweep": command_sweep,
    "performance": command_performance,
    "transfer": command_transfer,
    "explain": command_explain,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs a subcommand; returns 0 on success, 2 on configuration errors and 3 on data errors"""
    args = parse_arguments(argv)
    pda.io.set_verbose(not args.pop("quiet"))
    try:
        COMMANDS[args.pop("command")](args)
    except pda.errors.DiaaError as error:
        pda.io.log("Error: {:s}".format(str(error)))
        return error.exit_code
    except OSError as error:
        pda.io.log("Error: {:s}".format(str(error)))
        return pda.errors.DATA_ERROR_EXIT_CODE
    return 0


if __name__ == "__main__":
    sys.exit(main())
