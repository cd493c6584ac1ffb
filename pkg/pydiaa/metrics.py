"""Perturbation norms and their summary statistics"""

from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np

import pydiaa as pda
import pydiaa.tensor

# Coordinates that moved by less than this are not counted by L0
L0_THRESHOLD = 1e-9
NORMS = ("l0", "l1", "l2")


class NormStats(NamedTuple):
    """The four statistics of a stacked error bar"""
    mean: float
    std: float
    min: float
    max: float


def lp_norms(x: np.ndarray, x_adv: np.ndarray) -> Tuple[float, float, float]:
    """L0, L1 and L2 size of the perturbation x_adv - x"""
    pda.tensor.check_shape(x_adv, x.shape, "adversarial example")
    difference = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(x_adv, dtype=np.float64)).reshape(-1)
    return (float(np.count_nonzero(difference > L0_THRESHOLD)), float(np.sum(difference)),
            float(np.sqrt(np.sum(difference * difference))))


def norm_stats(values: Sequence[float]) -> NormStats:
    """Mean, population standard deviation, minimum and maximum; all zero for an empty sequence"""
    if len(values) == 0:
        return NormStats(0.0, 0.0, 0.0, 0.0)
    array = np.asarray(values, dtype=np.float64)
    low, high = float(np.min(array)), float(np.max(array))
    mean = min(max(float(np.mean(array)), low), high)  # rounding can push the mean of equal values past them
    return NormStats(mean, float(np.std(array)), low, high)


def stats_by_norm(norms: Sequence[Tuple[float, float, float]]) -> Dict[str, NormStats]:
    """Statistics per norm over a list of (L0, L1, L2) tuples"""
    return {name: norm_stats([values[index] for values in norms]) for index, name in enumerate(NORMS)}
