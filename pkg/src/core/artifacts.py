# src/core/artifacts.py

"""
Artifact pipeline: JSON results, profile CSVs, sweep tables and their inputs.

Key Features:
- Versioned JSON documents (top-level "schema_version") with sorted keys
- Non-finite floats written as null
- Profiles and sweep tables written with pandas at 17 significant digits
- Input readers that raise InputFormatException on malformed files
"""

import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.core.radial import RadialFunction, RadialGrid
from src.core.solver import EigenResult, MinimizeResult, SweepOutcome
from src.utils.exceptions import InputFormatException

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"
PARAM_KEYS = ("N", "p", "q", "r", "mu", "sigma", "s")
SWEEP_COLUMNS = list(PARAM_KEYS) + [
    "rho", "c_sharp", "el_residual", "balance_residual", "converged", "error",
]

logger = logging.getLogger("ckn_toolkit.artifacts")

PathLike = Union[str, Path]


def to_serializable(value: Any) -> Any:
    """
    Recursively convert numpy scalars/arrays and non-finite floats into JSON-ready values.
    """
    if isinstance(value, dict):
        return {str(k): to_serializable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_serializable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_serializable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(payload: Dict[str, Any]) -> str:
    document = dict(payload)
    document["schema_version"] = SCHEMA_VERSION
    return json.dumps(to_serializable(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(payload: Dict[str, Any], path: Optional[PathLike] = None) -> None:
    """
    Write a versioned JSON document; None writes to stdout.
    """
    text = dumps(payload)
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("JSON artifact written", extra={"context": {"path": str(target)}})


def write_profile_csv(u: RadialFunction, path: PathLike) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"tau": np.asarray(u.grid.tau), "value": np.asarray(u.values)})
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
    logger.info("Profile written", extra={"context": {"path": str(target), "nodes": u.grid.n}})


def read_profile_csv(path: PathLike, grid: RadialGrid) -> RadialFunction:
    """
    Read a tau,value CSV back onto the given grid.

    Raises:
        InputFormatException: on a missing file, missing columns or mismatched nodes.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError:
        raise InputFormatException(f"Profile file not found: {path}", str(path))
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise InputFormatException(f"Profile file is not valid CSV: {e}", str(path))

    if not {"tau", "value"}.issubset(frame.columns):
        raise InputFormatException("Profile CSV needs columns tau,value", str(path))
    if len(frame) != grid.n:
        raise InputFormatException(f"Profile has {len(frame)} nodes, grid has {grid.n}", str(path))
    if not np.allclose(frame["tau"].to_numpy(dtype=float), grid.tau, rtol=0.0, atol=1e-9 * max(1.0, grid.h)):
        raise InputFormatException("Profile tau column does not match the grid nodes", str(path))
    values = frame["value"].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise InputFormatException("Profile contains non-finite values", str(path))
    return RadialFunction.from_values(grid, values)


def read_json_document(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise InputFormatException(f"File not found: {path}", str(path))
    except json.JSONDecodeError as e:
        raise InputFormatException(f"Invalid JSON: {e}", str(path))


def read_params_list(path: PathLike) -> List[Any]:
    """
    Read a JSON array of parameter objects. Entries are validated per tuple by the sweep,
    so one bad entry never rejects the whole file.
    """
    document = read_json_document(path)
    if not isinstance(document, list):
        raise InputFormatException("Sweep input must be a JSON array of parameter objects", str(path))
    return document


def read_config_file(path: PathLike) -> Dict[str, Any]:
    document = read_json_document(path)
    if not isinstance(document, dict):
        raise InputFormatException("Config file must hold a JSON object", str(path))
    return document


def minimize_payload(result: MinimizeResult, include_trace: bool = False) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "command": "solve",
        "params": result.params.as_dict(),
        "grid": result.profile.grid.to_dict(),
        "rho": result.rho,
        "c_sharp": result.c_sharp,
        "lagrange": result.lagrange,
        "el_residual": result.el_residual,
        "el_skipped": result.el_skipped,
        "balance_residual": result.balance_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "label": result.label,
        "breakdown": result.breakdown.to_dict(),
    }
    if include_trace:
        payload["energy_trace"] = list(result.energy_trace)
    return payload


def eigen_payload(result: EigenResult, include_trace: bool = False) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "command": "eigen",
        "grid": result.phi1.grid.to_dict(),
        "lambda1": result.lambda1,
        "constraint": result.constraint,
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
    }
    if include_trace:
        payload["energy_trace"] = list(result.energy_trace)
    return payload


def result_payload(result: Union[MinimizeResult, EigenResult], include_trace: bool = False) -> Dict[str, Any]:
    """
    JSON-ready dict for a solve or eigen result. Correlation ids stay in the logs so
    repeated runs produce identical documents.
    """
    if isinstance(result, MinimizeResult):
        return minimize_payload(result, include_trace)
    if isinstance(result, EigenResult):
        return eigen_payload(result, include_trace)
    raise TypeError(f"unsupported result type {type(result).__name__}")


def sweep_table(outcomes: Sequence[SweepOutcome]) -> pd.DataFrame:
    """
    One row per input tuple, in input order; failed tuples carry the error column.
    """
    rows = []
    for outcome in outcomes:
        row: Dict[str, Any] = {key: outcome.params.get(key) for key in PARAM_KEYS}
        result = outcome.result
        row.update({
            "rho": result.rho if result else None,
            "c_sharp": result.c_sharp if result else None,
            "el_residual": result.el_residual if result else None,
            "balance_residual": result.balance_residual if result else None,
            "converged": result.converged if result else False,
            "error": outcome.error or "",
        })
        rows.append(row)
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_table_csv(frame: pd.DataFrame, path: Optional[PathLike] = None) -> None:
    if path is None:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
    logger.info("Table written", extra={"context": {"path": str(target), "rows": len(frame)}})
