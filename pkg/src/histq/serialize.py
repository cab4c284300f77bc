"""JSON schemas and bit-exact round-tripping for the package's file formats."""

from __future__ import annotations

import json

import numpy as np

from .errors import ShapeError, ValidationError
from .historyspace import (
    DensityOperator,
    HistoryProjection,
    HomogeneousHistory,
    density_from_matrix,
    density_from_spectral,
    history_projection,
    homogeneous_history,
)


def matrix_to_json(m: np.ndarray) -> dict:
    """{"rows": n, "cols": m, "data": [[re, im], ...]} row-major."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError("only 2-d matrices are serialized")
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ValidationError("matrix JSON must be an object")
    try:
        rows = int(obj["rows"])
        cols = int(obj["cols"])
        data = obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {rows}x{cols}")
    if len(data) != rows * cols:
        raise ValidationError(
            f"matrix JSON has {len(data)} entries, expected {rows * cols}"
        )
    out = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(data):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ValidationError(f"entry {i} is not an [re, im] pair")
        out[i] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(out)):
        raise ValidationError("matrix JSON contains non-finite entries")
    return out.reshape(rows, cols)


def vector_to_json(v: np.ndarray) -> dict:
    return matrix_to_json(np.asarray(v, dtype=np.complex128).reshape(-1, 1))


def history_to_json(h: HomogeneousHistory) -> dict:
    return {
        "single_time_dim": h.single_dim,
        "order": h.order,
        "projections": [matrix_to_json(p.matrix) for p in h.projections],
    }


def history_from_json(obj, tol: float = 1e-8) -> HomogeneousHistory:
    try:
        d = int(obj["single_time_dim"])
        n = int(obj["order"])
        mats = obj["projections"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed history JSON: {exc}") from exc
    if len(mats) != n:
        raise ValidationError(f"history JSON lists {len(mats)} projections, order is {n}")
    h = homogeneous_history([matrix_from_json(m) for m in mats], tol=tol)
    if h.single_dim != d:
        raise ValidationError(
            f"history JSON declares dim {d}, projections have dim {h.single_dim}"
        )
    return h


def density_to_json(rho: DensityOperator) -> dict:
    return {
        "weights": [float(w) for w in rho.weights],
        "vectors": matrix_to_json(rho.vectors),
    }


def density_from_json(obj, tol: float = 1e-8) -> DensityOperator:
    if not isinstance(obj, dict):
        raise ValidationError("density JSON must be an object")
    if "matrix" in obj:
        return density_from_matrix(matrix_from_json(obj["matrix"]), tol=tol)
    if "weights" in obj and "vectors" in obj:
        return density_from_spectral(
            [float(w) for w in obj["weights"]],
            matrix_from_json(obj["vectors"]),
            tol=tol,
        )
    raise ValidationError('density JSON needs "matrix" or "weights"+"vectors"')


def tensor_sum_to_json(z) -> dict:
    return {
        "order": z.order,
        "dim": z.single_dim,
        "terms": [[matrix_to_json(f) for f in term] for term in z.terms],
    }


def tensor_sum_from_json(obj):
    from .quadform import simple_tensor_sum

    try:
        n = int(obj["order"])
        d = int(obj["dim"])
        terms = obj["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed tensor-sum JSON: {exc}") from exc
    parsed = []
    for term in terms:
        if len(term) != n:
            raise ValidationError(f"term has {len(term)} factors, order is {n}")
        parsed.append(tuple(matrix_from_json(f) for f in term))
    return simple_tensor_sum(parsed, order=n, single_dim=d)


def family_from_json(obj, cap: int = 64, tol: float = 1e-8):
    """Parse {"single_time_dim", "order", "members": [...]} into projections.

    Each member is either a homogeneous history object (embedded here) or
    {"matrix": matrix-json} giving the tensor-space projection directly.
    Returns (members, labels).
    """
    from .historyspace import embed_homogeneous

    try:
        d = int(obj["single_time_dim"])
        n = int(obj["order"])
        raw = obj["members"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed family JSON: {exc}") from exc
    members: list[HistoryProjection] = []
    for item in raw:
        if "projections" in item:
            inner = dict(item)
            inner.setdefault("single_time_dim", d)
            inner.setdefault("order", n)
            members.append(embed_homogeneous(history_from_json(inner, tol=tol), cap=cap, tol=tol))
        elif "matrix" in item:
            members.append(history_projection(matrix_from_json(item["matrix"]), n, d, tol=tol))
        else:
            raise ValidationError('family member needs "projections" or "matrix"')
    labels = obj.get("labels")
    if labels is None:
        labels = [f"g{i}" for i in range(len(members))]
    if len(labels) != len(members):
        raise ValidationError("labels do not match the number of members")
    return members, [str(x) for x in labels]


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read JSON from {path}: {exc}") from exc


def dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
