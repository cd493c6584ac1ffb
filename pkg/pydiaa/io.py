"""I/O utilities, including logging, model files and JSON parsing"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable

import jsonschema

import pydiaa as pda
import pydiaa.errors
import pydiaa.network

_VERBOSE = True

MODEL_SCHEMA = {
    "$schema": "http://json-schema.org/draft-04/schema#",
    "type": "object",
    "required": ["input_shape", "classes", "layers"],
    "additionalProperties": False,
    "properties": {
        "input_shape": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "classes": {"type": "integer", "minimum": 1},
        "layers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["dense", "conv2d", "relu", "maxpool2d", "flatten", "dropout",
                                      "batchnorm-affine"]},
                    "in": {"type": "integer", "minimum": 1},
                    "out": {"type": "integer", "minimum": 1},
                    "in_channels": {"type": "integer", "minimum": 1},
                    "out_channels": {"type": "integer", "minimum": 1},
                    "channels": {"type": "integer", "minimum": 1},
                    "kernel": {"type": "array", "minItems": 2, "maxItems": 2,
                               "items": {"type": "integer", "minimum": 1}},
                    "window": {"type": "integer", "minimum": 1},
                    "stride": {"type": "integer", "minimum": 0},
                    "rate": {"type": "number", "minimum": 0},
                    "weights": {"type": "array", "items": {"type": "number"}},
                    "bias": {"type": "array", "items": {"type": "number"}},
                    "scale": {"type": "array", "items": {"type": "number"}},
                    "shift": {"type": "array", "items": {"type": "number"}},
                }
            }
        }
    }
}

LAYER_REQUIRED_KEYS = {
    "dense": ("in", "out", "weights", "bias"),
    "conv2d": ("in_channels", "out_channels", "kernel", "weights", "bias"),
    "maxpool2d": ("window",),
    "dropout": ("rate",),
    "batchnorm-affine": ("scale", "shift"),
}


def log(message: str) -> None:
    """Prints a log message to screen"""
    if _VERBOSE:
        print("[DIAA] " + message)


def set_verbose(verbose: bool) -> None:
    """Enables or silences log() and the progress bars"""
    global _VERBOSE  # pylint: disable=global-statement
    _VERBOSE = verbose


def is_verbose() -> bool:
    """Whether log messages are printed"""
    return _VERBOSE


def verify_schema(model_data: Dict) -> None:
    """Verifies that the model JSON is well-formed. If not, raises an error naming the offending layer"""
    try:
        jsonschema.validate(model_data, MODEL_SCHEMA)
    except jsonschema.ValidationError as error:
        path = list(error.absolute_path)
        where = "layer {:d}".format(path[1]) if len(path) >= 2 and path[0] == "layers" else "model"
        raise pda.errors.FormatError("Malformed model file at {:s}: {:s}".format(where, error.message)) from error

    for index, layer in enumerate(model_data["layers"]):
        missing = [key for key in LAYER_REQUIRED_KEYS.get(layer["kind"], ()) if key not in layer]
        if missing:
            raise pda.errors.FormatError("Malformed model file at layer {:d}: missing {:s}".
                                         format(index, ", ".join(missing)))


def model_from_dict(model_data: Dict) -> 'pda.network.Network':
    """Builds a network from a parsed model document"""
    verify_schema(model_data)
    layers = []
    for index, layer_data in enumerate(model_data["layers"]):
        layer_class = pda.network.get_layer_class(layer_data["kind"])
        try:
            layers.append(layer_class.from_dict(layer_data))
        except pda.errors.ModelValidationError as error:
            raise type(error)("Layer {:d} ({:s}): {:s}".format(index, layer_data["kind"], str(error))) from error
    return pda.network.Network(model_data["input_shape"], model_data["classes"], layers)


def model_to_dict(network: 'pda.network.Network') -> Dict[str, Any]:
    """Serializes a network to the model document"""
    return {"input_shape": list(network.input_shape), "classes": network.classes,
            "layers": [layer.to_dict() for layer in network.layers]}


def load_model(file_name: Path) -> 'pda.network.Network':
    """Reads and validates a model JSON file"""
    try:
        model_data = json.loads(Path(file_name).read_text())
    except json.JSONDecodeError as error:
        raise pda.errors.FormatError("Model file {:s} is not valid JSON: {:s}".format(str(file_name), str(error)))
    network = model_from_dict(model_data)
    log("Loaded model {:s}: {:d} layers, input {:s}, {:d} classes".
        format(str(file_name), len(network.layers), str(network.input_shape), network.classes))
    return network


def save_model(network: 'pda.network.Network', file_name: Path) -> None:
    """Writes a network to a model JSON file; floats use their shortest exact decimal form"""
    write_json(model_to_dict(network), file_name)
    log("Stored model to {:s}".format(str(file_name)))


def file_hash(file_name: Path) -> str:
    """SHA-256 of a file's contents, recorded in report headers"""
    return hashlib.sha256(Path(file_name).read_bytes()).hexdigest()


def write_lines(text: Iterable[str], file_name: Path) -> None:
    """Writes a list of items to file"""
    Path(file_name).write_text("\n".join(text) + "\n")


def write_json(data: Any, file_name: Path) -> None:
    """Writes a JSON document to file"""
    Path(file_name).write_text(json.dumps(data, indent=1) + "\n")
