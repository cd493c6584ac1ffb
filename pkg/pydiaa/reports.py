"""Module to write suite, sweep and transfer reports and to export saliency maps"""

import csv
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

import pydiaa as pda
import pydiaa.dtd
import pydiaa.errors
import pydiaa.io
import pydiaa.metrics

STAT_NAMES = ("mean", "std", "min", "max")
STAT_COLUMNS = ["{:s}_{:s}".format(norm, stat) for norm in pda.metrics.NORMS for stat in STAT_NAMES]
REPORT_COLUMNS = ["attack", "n", "sr"] + STAT_COLUMNS + ["wall_ms"]
SWEEP_COLUMNS = ["t", "eps", "c", "n", "sr"] + STAT_COLUMNS
TRANSFER_COLUMNS = ["attack", "n", "clean_accuracy", "adversarial_accuracy", "accuracy_drop_pct", "source_sr"]
FULL_SUCCESS_COLUMNS = ["t", "c", "eps", "n"] + STAT_COLUMNS
PERFORMANCE_COLUMNS = ["model", "n", "accuracy", "pgd_accuracy"]


def number(value: Any) -> str:
    """Exact, platform-independent text for a report cell"""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def stat_cells(report: Any) -> List[str]:
    """The twelve L0/L1/L2 statistics cells of a suite report"""
    return [number(getattr(report.stats[norm], stat)) for norm in pda.metrics.NORMS for stat in STAT_NAMES]


def write_csv(rows: Sequence[Sequence[str]], columns: Sequence[str], file_name: Path) -> None:
    """Writes a table with a header row"""
    with Path(file_name).open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def report_paths(out: Path) -> Tuple[Path, Path]:
    """The CSV table and the JSON document written for an output name"""
    out = Path(out)
    return out.with_suffix(".csv"), out.with_suffix(".json")


def write_suite_reports(reports: Sequence[Any], out: Path, header: Dict[str, Any]) -> None:
    """Writes the report table (CSV) and the header plus per-example outcome log (JSON)"""
    csv_path, json_path = report_paths(out)
    rows = [[report.attack, number(report.n), number(report.success_rate)] + stat_cells(report) +
            ["{:.3f}".format(report.wall_ms)] for report in reports]
    write_csv(rows, REPORT_COLUMNS, csv_path)
    document = {"header": header,
                "reports": [dict(zip(REPORT_COLUMNS, row)) for row in rows],
                "outcomes": {report.attack: [outcome.to_dict() for outcome in report.outcomes]
                             for report in reports}}
    pda.io.write_json(document, json_path)
    pda.io.log("Stored reports to {:s} and {:s}".format(str(csv_path), str(json_path)))


def write_sweep(rows: Sequence[Any], full_success: Sequence[Any], out: Path, header: Dict[str, Any]) -> None:
    """One CSV row per sweep grid point; the JSON document adds the header and the first full-success steps"""
    csv_path, json_path = report_paths(out)
    table = [[number(row.iterations), number(row.step), number(row.c), number(row.report.n),
              number(row.report.success_rate)] + stat_cells(row.report) for row in rows]
    write_csv(table, SWEEP_COLUMNS, csv_path)
    full_rows = []
    for row in full_success:
        cells = [number(row.iterations), number(row.c)]  # type: List[Optional[str]]
        if row.report is None:
            cells += [None] * (len(FULL_SUCCESS_COLUMNS) - 2)
        else:
            cells += [number(row.step), number(row.report.n)] + stat_cells(row.report)
        full_rows.append(dict(zip(FULL_SUCCESS_COLUMNS, cells)))
    document = {"header": header,
                "sweep": [dict(zip(SWEEP_COLUMNS, row)) for row in table],
                "full_success": full_rows}
    pda.io.write_json(document, json_path)
    pda.io.log("Stored sweep table to {:s} and {:s}".format(str(csv_path), str(json_path)))


def write_performance(rows: Sequence[Any], out: Path, header: Dict[str, Any]) -> None:
    """The model performance table (CSV) and its header (JSON)"""
    csv_path, json_path = report_paths(out)
    table = [[row.model, number(row.n), number(row.accuracy), number(row.pgd_accuracy)] for row in rows]
    write_csv(table, PERFORMANCE_COLUMNS, csv_path)
    pda.io.write_json({"header": header, "performance": [dict(zip(PERFORMANCE_COLUMNS, row)) for row in table]},
                      json_path)
    pda.io.log("Stored model performance to {:s}".format(str(csv_path)))


def write_transfer(report: Any, out: Path, header: Dict[str, Any]) -> None:
    """The accuracy-drop table (CSV) and its header (JSON)"""
    csv_path, json_path = report_paths(out)
    row = [report.attack, number(report.n), number(report.clean_accuracy), number(report.adversarial_accuracy),
           number(report.accuracy_drop_pct), number(report.source_success_rate)]
    write_csv([row], TRANSFER_COLUMNS, csv_path)
    pda.io.write_json({"header": header, "transfer": dict(zip(TRANSFER_COLUMNS, row))}, json_path)
    pda.io.log("Stored transfer report to {:s}".format(str(csv_path)))


def saliency_grid(scores: np.ndarray, width: Optional[int] = None) -> np.ndarray:
    """Arranges scores as a 2-D image: the last axis is the width unless the map is flat"""
    if scores.ndim >= 2 and width is None:
        return scores.reshape(-1, scores.shape[-1])
    flat = scores.reshape(-1)
    width = flat.size if width is None else width
    if width < 1 or flat.size % width != 0:
        raise pda.errors.ShapeError("Cannot lay out {:d} scores with width {:d}".format(flat.size, width))
    return flat.reshape(-1, width)


def to_gray(grid: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Min-max normalization to 0..255; a zero-range map is all 0"""
    low, high = float(np.min(grid)), float(np.max(grid))
    if high - low <= 0.0:
        return np.zeros(grid.shape, dtype=np.int64), low, high
    return np.rint((grid - low) / (high - low) * 255.0).astype(np.int64), low, high


def export_saliency(relevance_map: 'pda.dtd.RelevanceMap', prefix: Path,
                    width: Optional[int] = None) -> Tuple[Path, Path]:
    """Writes the raw scores as CSV and a plain-text (P2) PGM image; returns both paths"""
    prefix = Path(prefix)
    csv_path, pgm_path = Path(str(prefix) + ".csv"), Path(str(prefix) + ".pgm")
    grid = saliency_grid(np.asarray(relevance_map.scores, dtype=np.float64), width)
    pda.io.write_lines([",".join(number(value) for value in row) for row in grid], csv_path)

    pixels, low, high = to_gray(grid)
    contents = ["P2",
                "# class {:d} relevance {!r} min {!r} max {!r}".format(relevance_map.class_index,
                                                                     relevance_map.start_relevance, low, high),
                "{:d} {:d}".format(grid.shape[1], grid.shape[0]),
                "255"]
    contents += [" ".join(str(pixel) for pixel in row) for row in pixels]
    pda.io.write_lines(contents, pgm_path)
    pda.io.log("Stored saliency map to {:s} and {:s}".format(str(csv_path), str(pgm_path)))
    return csv_path, pgm_path
