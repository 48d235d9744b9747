"""JSON model files.

Layout::

    {"schema": "uavbeam.lrnet", "schema_version": 1,
     "sizes": {"input": 2, "hidden1": 50, "hidden2": 100, "output": 2},
     "window_l": 20, "normalization": "anchored-displacement",
     "gate_order": ["input", "forget", "candidate", "output"],
     "seed": 0, "prng": "...",
     "params": {"layer1.w_input": [[...], ...], ...}}

Parameter tensors are nested lists in row-major order. Python's float repr
round-trips float64 exactly, so save/load is bit-exact.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from ..errors import SchemaError, UavBeamError
from ..numerics import PRNG_NAME
from .lstm import LstmLayerParams
from .model import PARAM_NAMES, LrnetModel, NormalizationSpec

SCHEMA = "uavbeam.lrnet"
SCHEMA_VERSION = 1


class ModelParseError(UavBeamError, ValueError):
    exit_code = 2


def model_to_dict(model: LrnetModel, extra: dict | None = None) -> dict:
    h1, h2 = model.sizes
    doc = {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "sizes": {"input": 2, "hidden1": h1, "hidden2": h2, "output": 2},
        "window_l": model.window_l,
        "normalization": model.norm_spec.mode,
        "gate_order": ["input", "forget", "candidate", "output"],
        "seed": model.seed,
        "prng": PRNG_NAME,
        "params": {k: v.tolist() for k, v in model.parameters().items()},
    }
    if extra:
        doc["metadata"] = extra
    return doc


def save_model(model: LrnetModel, path, extra: dict | None = None) -> None:
    text = json.dumps(model_to_dict(model, extra))
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def model_from_dict(doc: dict) -> LrnetModel:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise SchemaError("not an LRNet model document")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        sizes = doc["sizes"]
        h1, h2 = int(sizes["hidden1"]), int(sizes["hidden2"])
        L = int(doc["window_l"])
        params = doc["params"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc
    if doc.get("normalization") != NormalizationSpec().mode:
        raise SchemaError(f"unsupported normalization {doc.get('normalization')!r}")
    if sizes.get("input") != 2 or sizes.get("output") != 2:
        raise SchemaError("input/output sizes must be 2")
    expected = {
        "layer1.w_input": (4 * h1, 2), "layer1.w_hidden": (4 * h1, h1), "layer1.bias": (4 * h1,),
        "layer2.w_input": (4 * h2, h1), "layer2.w_hidden": (4 * h2, h2), "layer2.bias": (4 * h2,),
        "fc_weight": (2, h2), "fc_bias": (2,),
    }
    if set(params) != set(PARAM_NAMES):
        raise SchemaError(f"parameter names {sorted(params)} do not match {list(PARAM_NAMES)}")
    arrs = {}
    for name, shape in expected.items():
        try:
            a = np.array(params[name], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{name}: {exc}") from exc
        if a.shape != shape:
            raise SchemaError(f"{name} has shape {a.shape}, expected {shape}")
        if not np.all(np.isfinite(a)):
            raise SchemaError(f"{name} has non-finite entries")
        arrs[name] = a
    return LrnetModel(
        LstmLayerParams(arrs["layer1.w_input"], arrs["layer1.w_hidden"], arrs["layer1.bias"]),
        LstmLayerParams(arrs["layer2.w_input"], arrs["layer2.w_hidden"], arrs["layer2.bias"]),
        arrs["fc_weight"], arrs["fc_bias"], L, NormalizationSpec(), doc.get("seed"),
    )


def load_model(path) -> LrnetModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: {exc}") from exc
    return model_from_dict(doc)
