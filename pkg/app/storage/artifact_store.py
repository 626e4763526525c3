"""Artifact storage helpers.

Every file the pipeline writes goes through here so that floats are always
printed as the shortest round-trip decimal (Python's repr) and repeated runs
produce byte-identical files. Non-finite floats become the strings "inf",
"-inf" and "nan".
"""
import hashlib
import json
import math
import os
import shutil
from typing import Any, Iterable, List, Sequence

import numpy as np
import pandas as pd

from models.errors import MissingArtifactError


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def remove(path: str) -> bool:
    """Delete a file or a whole directory; False when nothing was there"""
    if os.path.isdir(path):
        shutil.rmtree(path)
        return True
    if os.path.isfile(path):
        os.remove(path)
        return True
    return False


def require(path: str) -> str:
    if not os.path.isfile(path):
        raise MissingArtifactError(path)
    return path


def format_float(value: float) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy values and non-finite floats for json.dumps"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else format_float(value)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: str, obj: Any) -> str:
    ensure_dir(os.path.dirname(path) or ".")
    text = json.dumps(to_jsonable(obj), indent=2, allow_nan=False, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")
    return path


def read_json(path: str) -> Any:
    with open(require(path), "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    ensure_dir(os.path.dirname(path) or ".")
    body = [[format_cell(v) for v in row] for row in rows]
    frame = pd.DataFrame(body, columns=list(columns), dtype=str)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(require(path), dtype=str, keep_default_na=False, encoding="utf-8")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(require(path), "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def list_files(root: str) -> List[str]:
    """Relative paths of every file under root, sorted"""
    found = []
    for base, _, files in os.walk(root):
        for name in files:
            found.append(os.path.relpath(os.path.join(base, name), root).replace(os.sep, "/"))
    return sorted(found)
