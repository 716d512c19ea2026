"""JSON document format for systems and abstraction parameters.

A system document is a single hand-editable JSON file:

.. code-block:: json

    {
      "name": "cruise",
      "modes": [
        {"id": 0, "label": "execute", "A": [[0.5]]},
        {"id": 1, "label": "skip",    "A": [[1.2]]}
      ],
      "disturbance_bound": 0.1,
      "cost_weight_Q": [[1.0]],
      "lipschitz": 1.2
    }

Only ``name`` and ``modes`` are required. Documents written by
:func:`save_system` re-parse to an identical :class:`SystemModel`
(floats round-trip exactly through JSON).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import AbstractionParams, SystemModel


class DocumentError(ValueError):
    """A document failed to parse or validate; the message names the field."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DocumentError(message)


def _as_matrix(value, context: str) -> list[list[float]]:
    _require(isinstance(value, list) and value, f"{context}: expected a non-empty matrix")
    rows = len(value)
    for i, row in enumerate(value):
        _require(isinstance(row, list) and len(row) == rows,
                 f"{context}: row {i} must be a list of {rows} numbers (square matrix)")
        for j, entry in enumerate(row):
            _require(isinstance(entry, (int, float)) and not isinstance(entry, bool),
                     f"{context}[{i}][{j}]: expected a number, got {entry!r}")
    return value


def system_from_document(doc: dict) -> SystemModel:
    """Validate a parsed document and build the system it describes."""
    _require(isinstance(doc, dict), "document root must be an object")
    name = doc.get("name", "system")
    _require(isinstance(name, str), "name: expected a string")
    raw_modes = doc.get("modes")
    _require(isinstance(raw_modes, list) and raw_modes,
             "modes: expected a non-empty list of mode objects")
    modes: dict[int, np.ndarray] = {}
    labels: dict[int, str] = {}
    for i, entry in enumerate(raw_modes):
        context = f"modes[{i}]"
        _require(isinstance(entry, dict), f"{context}: expected an object")
        _require("id" in entry, f"{context}: missing field 'id'")
        mode_id = entry["id"]
        _require(isinstance(mode_id, int) and not isinstance(mode_id, bool) and mode_id >= 0,
                 f"{context}.id: expected a non-negative integer, got {mode_id!r}")
        _require(mode_id not in modes, f"{context}.id: duplicate mode id {mode_id}")
        _require("A" in entry, f"{context}: missing field 'A'")
        modes[mode_id] = np.array(_as_matrix(entry["A"], f"{context}.A"), dtype=float)
        label = entry.get("label", f"mode-{mode_id}")
        _require(isinstance(label, str), f"{context}.label: expected a string")
        labels[mode_id] = label
    _require(0 in modes, "modes: mode id 0 (nominal execution) must be declared")
    n = modes[0].shape[0]
    for mode_id, A in modes.items():
        _require(A.shape == (n, n),
                 f"modes: mode {mode_id} matrix is {A.shape[0]}x{A.shape[1]}, expected {n}x{n}")
    bound = doc.get("disturbance_bound")
    if bound is not None:
        _require(isinstance(bound, (int, float)) and not isinstance(bound, bool) and bound >= 0,
                 f"disturbance_bound: expected a number >= 0, got {bound!r}")
    cost = doc.get("cost_weight_Q")
    cost_matrix = None
    if cost is not None:
        cost_matrix = np.array(_as_matrix(cost, "cost_weight_Q"), dtype=float)
        _require(cost_matrix.shape == (n, n),
                 f"cost_weight_Q: expected a {n}x{n} matrix, got {cost_matrix.shape}")
    lipschitz = doc.get("lipschitz")
    if lipschitz is not None:
        _require(isinstance(lipschitz, (int, float)) and not isinstance(lipschitz, bool)
                 and lipschitz >= 0,
                 f"lipschitz: expected a number >= 0, got {lipschitz!r}")
    try:
        return SystemModel(modes=modes, disturbance_bound=bound, cost_weight=cost_matrix,
                           lipschitz=lipschitz, name=name, labels=labels)
    except ValueError as exc:
        raise DocumentError(str(exc)) from None


def system_to_document(system: SystemModel) -> dict:
    doc: dict = {
        "name": system.name,
        "modes": [
            {
                "id": mode,
                "label": system.labels.get(mode, f"mode-{mode}"),
                "A": system.modes[mode].tolist(),
            }
            for mode in system.mode_ids()
        ],
    }
    if system.disturbance_bound is not None:
        doc["disturbance_bound"] = system.disturbance_bound
    if system.cost_weight is not None:
        doc["cost_weight_Q"] = system.cost_weight.tolist()
    if system.lipschitz is not None:
        doc["lipschitz"] = system.lipschitz
    return doc


def load_system(path) -> SystemModel:
    """Read and validate a system document from a JSON file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return system_from_document(doc)
    except DocumentError as exc:
        raise DocumentError(f"{path}: {exc}") from None


def save_system(system: SystemModel, path) -> None:
    Path(path).write_text(json.dumps(system_to_document(system), indent=2) + "\n")


def params_to_document(params: AbstractionParams) -> dict:
    doc: dict = {
        "alpha": params.alpha,
        "beta": params.beta,
        "rho": {str(mode): rate for mode, rate in sorted(params.rho.items())},
        "method": params.method,
    }
    if params.lyapunov_P is not None:
        doc["lyapunov_P"] = params.lyapunov_P.tolist()
    if params.diagnostics:
        doc["diagnostics"] = _plain(params.diagnostics)
    return doc


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    return value
