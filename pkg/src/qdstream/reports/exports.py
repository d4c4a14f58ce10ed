from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping

import pandas as pd


def _atomic_write(path: Path, text: str) -> None:
    """Write to a temp file in the target directory, then rename over the destination."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metadata_lines(meta: Mapping[str, Any] | None) -> str:
    if not meta:
        return ""
    return "".join(f"# {key}: {value}\n" for key, value in meta.items())


def write_json(path: Path, obj: Any) -> None:
    _atomic_write(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def write_csv(path: Path, df: pd.DataFrame, meta: Mapping[str, Any] | None = None) -> None:
    _atomic_write(path, metadata_lines(meta) + df.to_csv(index=False, lineterminator="\n", float_format="%.10g"))


def write_text(path: Path, text: str) -> None:
    _atomic_write(path, text if text.endswith("\n") else text + "\n")


def read_csv(path: Path) -> tuple[pd.DataFrame, Dict[str, str]]:
    """Inverse of write_csv: the table and its `# key: value` metadata."""
    meta: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
    return pd.read_csv(path, comment="#"), meta
