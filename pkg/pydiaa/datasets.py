"""Datasets: IDX (MNIST-style) and CSV loaders with domain validation"""

import csv
import gzip
import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

import pydiaa as pda
import pydiaa.errors
import pydiaa.io

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
FORMATS = ("idx", "csv")
LABEL_COLUMN = "label"


class Dataset:
    """Examples in [0, 1]^n with integer labels in [0, m)"""

    def __init__(self, examples: np.ndarray, labels: np.ndarray, classes: int, name: str = "dataset") -> None:
        self.examples = np.asarray(examples, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        self.classes = int(classes)
        self.name = name
        self.validate()

    def validate(self) -> None:
        """Checks equal lengths, label range and the [0, 1] feature domain"""
        if self.examples.shape[0] != self.labels.shape[0]:
            raise pda.errors.ShapeError("{:d} examples but {:d} labels".
                                        format(self.examples.shape[0], self.labels.shape[0]))
        if self.labels.size > 0 and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            row = int(np.argmax((self.labels < 0) | (self.labels >= self.classes)))
            raise pda.errors.LabelError("Label {:d} in row {:d} outside [0, {:d})".
                                        format(int(self.labels[row]), row, self.classes))
        flat = self.examples.reshape(self.examples.shape[0], int(np.prod(self.examples.shape[1:])))
        invalid = ~np.isfinite(flat) | (flat < 0.0) | (flat > 1.0)
        if np.any(invalid):
            row, column = (int(index) for index in np.argwhere(invalid)[0])
            raise pda.errors.DomainError("Feature value {!r} in row {:d}, column {:d} outside [0, 1]".
                                         format(float(flat[row, column]), row, column))

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def shape(self) -> Tuple[int, ...]:
        """Shape of a single example"""
        return tuple(self.examples.shape[1:])

    @property
    def features(self) -> int:
        """Number of features n per example"""
        return int(np.prod(self.shape))

    def shaped_examples(self, shape: Sequence[int]) -> np.ndarray:
        """The examples reshaped (row-major) to a network's input shape"""
        shape = tuple(shape)
        if int(np.prod(shape)) != self.features:
            raise pda.errors.ShapeError("Dataset '{:s}' has {:d} features, the network expects {:s}".
                                        format(self.name, self.features, str(shape)))
        return self.examples.reshape((len(self),) + shape)

    def head(self, count: int) -> 'Dataset':
        """The first count examples"""
        return Dataset(self.examples[:count], self.labels[:count], self.classes, self.name)

    def fraction(self, fraction: float) -> 'Dataset':
        """The leading fraction of the examples, at least one"""
        return self.head(max(1, int(round(len(self) * fraction))))


def read_binary(file_name: Path) -> bytes:
    """Reads a plain or gzip-compressed file"""
    file_name = Path(file_name)
    if file_name.suffix == ".gz":
        with gzip.open(str(file_name), "rb") as handle:
            return handle.read()
    return file_name.read_bytes()


def parse_idx(data: bytes, expected_magic: int, file_name: Path) -> np.ndarray:
    """Parses a big-endian IDX file of unsigned bytes into an array with the declared dimensions"""
    if len(data) < 4:
        raise pda.errors.FormatError("File {:s} is too short for an IDX header".format(str(file_name)))
    magic = struct.unpack(">I", data[:4])[0]
    if magic != expected_magic:
        raise pda.errors.FormatError("Bad IDX magic 0x{:08x} in {:s}, expected 0x{:08x}".
                                     format(magic, str(file_name), expected_magic))
    dimensions = magic & 0xff
    header_size = 4 + 4 * dimensions
    if len(data) < header_size:
        raise pda.errors.FormatError("File {:s} is too short for an IDX header of {:d} dimensions".
                                     format(str(file_name), dimensions))
    shape = struct.unpack(">" + "I" * dimensions, data[4:header_size])
    values = np.frombuffer(data, dtype=np.uint8, offset=header_size)
    if values.size != int(np.prod(shape)):
        raise pda.errors.FormatError("IDX file {:s} holds {:d} values, header declares {:s}".
                                     format(str(file_name), values.size, str(shape)))
    return values.reshape(shape)


def default_labels_path(images_path: Path) -> Path:
    """MNIST naming: '...-images-idx3-ubyte' pairs with '...-labels-idx1-ubyte'"""
    name = Path(images_path).name
    if "images-idx3" not in name:
        raise pda.errors.FormatError("Cannot derive the label file for {:s}, pass it explicitly".
                                     format(str(images_path)))
    return Path(images_path).with_name(name.replace("images-idx3", "labels-idx1"))


def load_idx(images_path: Path, labels_path: Optional[Path] = None, classes: int = 10) -> Dataset:
    """Loads an IDX image/label pair; pixels are scaled to [0, 1] and shaped (1, rows, cols)"""
    labels_path = default_labels_path(images_path) if labels_path is None else labels_path
    images = parse_idx(read_binary(images_path), IDX_IMAGES_MAGIC, images_path)
    labels = parse_idx(read_binary(labels_path), IDX_LABELS_MAGIC, labels_path)
    examples = images.astype(np.float64)[:, None, :, :] / 255.0
    return Dataset(examples, labels, classes, name=Path(images_path).name)


def load_csv(file_name: Path, classes: Optional[int] = None) -> Dataset:
    """Loads a CSV file with a header, a 'label' column and numeric feature columns already in [0, 1]"""
    with Path(file_name).open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or LABEL_COLUMN not in rows[0]:
        raise pda.errors.FormatError("CSV file {:s} needs a header with a '{:s}' column".
                                     format(str(file_name), LABEL_COLUMN))
    header = [column.strip() for column in rows[0]]
    label_index = header.index(LABEL_COLUMN)
    feature_indices = [index for index in range(len(header)) if index != label_index]

    examples, labels = [], []
    for row_index, row in enumerate(rows[1:]):
        if not row:
            continue
        if len(row) != len(header):
            raise pda.errors.FormatError("Row {:d} has {:d} columns, expected {:d}".
                                         format(row_index, len(row), len(header)))
        try:
            labels.append(int(row[label_index]))
            examples.append([float(row[index]) for index in feature_indices])
        except ValueError as error:
            raise pda.errors.FormatError("Row {:d} of {:s}: {:s}".format(row_index, str(file_name), str(error)))

    labels_array = np.array(labels, dtype=np.int64)
    if classes is None:
        classes = int(labels_array.max()) + 1 if labels_array.size else 1
    examples_array = np.array(examples, dtype=np.float64).reshape(len(labels), len(feature_indices))
    return Dataset(examples_array, labels_array, classes, name=Path(file_name).name)


def load_dataset(path: Path, data_format: str, labels_path: Optional[Path] = None,
                 classes: Optional[int] = None) -> Dataset:
    """Loads a dataset in one of the supported formats"""
    if data_format == "idx":
        dataset = load_idx(Path(path), labels_path, 10 if classes is None else classes)
    elif data_format == "csv":
        dataset = load_csv(Path(path), classes)
    else:
        raise pda.errors.ConfigError("Invalid data format '{:s}', choose from {:s}".
                                     format(data_format, ", ".join(FORMATS)))
    pda.io.log("Loaded dataset '{:s}': {:d} examples of shape {:s}, {:d} classes".
               format(dataset.name, len(dataset), str(dataset.shape), dataset.classes))
    return dataset


def save_dataset_csv(dataset: Dataset, file_name: Path) -> None:
    """Writes a dataset in the CSV format; values use their exact shortest decimal form"""
    flat = dataset.examples.reshape(len(dataset), -1)
    with Path(file_name).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([LABEL_COLUMN] + ["f{:d}".format(index) for index in range(dataset.features)])
        for label, example in zip(dataset.labels, flat):
            writer.writerow([str(int(label))] + [repr(float(value)) for value in example])
