"""Exception types raised by pydiaa, grouped by the CLI exit code they map to"""

CONFIG_ERROR_EXIT_CODE = 2
DATA_ERROR_EXIT_CODE = 3


class DiaaError(ValueError):
    """Base class of all pydiaa errors"""
    exit_code = 1


class ConfigError(DiaaError):
    """Invalid settings: attack/train configuration, unknown names, incompatible models"""
    exit_code = CONFIG_ERROR_EXIT_CODE


class ClassIndexError(ConfigError):
    """A class index outside [0, m)"""


class DataError(DiaaError):
    """Invalid input data: tensors, datasets and model files"""
    exit_code = DATA_ERROR_EXIT_CODE


class ShapeError(DataError):
    """A tensor does not have the shape the operation expects"""


class DomainError(DataError):
    """Values outside their domain: non-finite numbers, features outside [0, 1], empty inputs"""


class FormatError(DataError):
    """A file that cannot be parsed: bad IDX magic, malformed model document"""


class LabelError(DataError):
    """A dataset label outside [0, m)"""


class ModelValidationError(DataError):
    """A model whose parameter sizes or layer shapes are inconsistent"""


class StructureError(ModelValidationError):
    """A layer stack that an operation cannot handle, e.g. a stray batchnorm layer"""
