from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping

import yaml

from qdstream.emitter.params import EmitterParams
from qdstream.errors import InvalidArgumentError
from qdstream.validation.validators import ValidationIssue, run_all_validations


@dataclass
class ParsedConfig:
    path: Path | None
    values: Dict[str, str] = field(default_factory=dict)
    issues: List[ValidationIssue] = field(default_factory=list)


def _read_yaml(path: Path) -> Any:
    return yaml.safe_load(path.read_text(encoding="utf-8"))


def parse_config_text(text: str, path: Path | None = None) -> ParsedConfig:
    """Flat `key = value` lines; `#` starts a comment. Syntax and duplicate keys become issues."""
    parsed = ParsedConfig(path=path)
    where = str(path) if path else "<config>"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            parsed.issues.append(ValidationIssue("ERROR", "SYNTAX", f"{where}:{lineno}: expected 'key = value', got {raw.strip()!r}"))
            continue
        if key in parsed.values:
            parsed.issues.append(ValidationIssue("ERROR", "DUPLICATE_KEY", f"{where}:{lineno}: '{key}' set twice"))
            continue
        parsed.values[key] = value
    return parsed


def read_config(path: Path) -> ParsedConfig:
    path = Path(path)
    if not path.exists():
        parsed = ParsedConfig(path=path)
        parsed.issues.append(ValidationIssue("ERROR", "MISSING_FILE", f"config file not found: {path}"))
        return parsed
    return parse_config_text(path.read_text(encoding="utf-8"), path)


def validate_config(parsed: ParsedConfig, *, seed: Any = 0, workers: Any = 1) -> Dict[str, Any]:
    report = run_all_validations(parsed.values, defaults=EmitterParams().as_dict(), seed=seed, workers=workers)
    if parsed.issues:
        report["issues"] = [i.__dict__ for i in parsed.issues] + report["issues"]
        report["summary"]["errors"] += sum(1 for i in parsed.issues if i.severity == "ERROR")
        report["summary"]["warnings"] += sum(1 for i in parsed.issues if i.severity == "WARN")
    return report


def emitter_params_from_values(values: Mapping[str, Any], base: EmitterParams | None = None) -> EmitterParams:
    base = base or EmitterParams()
    try:
        changes = {key: float(value) for key, value in values.items()}
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"non-numeric config value: {e}") from e
    return base.with_values(**changes)


def emitter_params_from_text(text: str) -> EmitterParams:
    """Parse and validate; raises InvalidArgumentError listing every error."""
    parsed = parse_config_text(text)
    report = validate_config(parsed)
    if report["summary"]["errors"]:
        errors = [f"{i['code']}: {i['message']}" for i in report["issues"] if i["severity"] == "ERROR"]
        raise InvalidArgumentError("; ".join(errors))
    return emitter_params_from_values(parsed.values)


def load_figures(path: Path) -> Dict[str, Dict[str, Any]]:
    """Figure catalogue keyed by figure id."""
    data = _read_yaml(Path(path)) or {}
    items = data.get("figures", [])
    return {str(item["id"]): item for item in items}
