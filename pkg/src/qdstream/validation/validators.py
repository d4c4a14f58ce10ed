from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping

EMITTER_KEYS = (
    "t1",
    "gamma_pd",
    "sigma_omega",
    "tau_c",
    "omega_0",
    "rep_rate",
    "p1",
    "p2",
    "sigma_jitter",
    "eta_fiber",
    "eta_det",
    "purcell_ratio",
)
# accepted in config files in place of gamma_pd
DERIVED_KEYS = ("t2_hom",)

_POSITIVE = ("t1", "tau_c", "rep_rate", "purcell_ratio")
_NON_NEGATIVE = ("gamma_pd", "sigma_omega", "sigma_jitter")
_UNIT_INTERVAL = ("p1", "p2", "eta_fiber", "eta_det")


@dataclass
class ValidationIssue:
    severity: str  # ERROR/WARN
    code: str
    message: str


def validate_keys(raw: Mapping[str, Any], allowed: Iterable[str] = EMITTER_KEYS + DERIVED_KEYS) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    allowed_set = set(allowed)
    for key in raw:
        if key not in allowed_set:
            issues.append(ValidationIssue("ERROR", "UNKNOWN_KEY", f"Unknown config key '{key}'"))
    if "gamma_pd" in raw and "t2_hom" in raw:
        issues.append(ValidationIssue("ERROR", "GAMMA_AND_T2_BOTH_SET",
            "Set either gamma_pd or t2_hom, not both (t2_hom is derived from t1 and gamma_pd)."))
    return issues


def validate_numeric(raw: Mapping[str, Any]) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    for key, value in raw.items():
        try:
            v = float(value)
        except (TypeError, ValueError):
            issues.append(ValidationIssue("ERROR", "NOT_NUMERIC", f"{key} = {value!r} is not a number"))
            continue
        if not math.isfinite(v):
            issues.append(ValidationIssue("ERROR", "NOT_FINITE", f"{key} = {value!r} is not finite"))
    return issues


def _numbers(values: Mapping[str, Any]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for key, value in values.items():
        try:
            v = float(value)
        except (TypeError, ValueError):
            continue
        if math.isfinite(v):
            out[key] = v
    return out


def validate_ranges(values: Mapping[str, Any]) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    v = _numbers(values)
    for key in _POSITIVE:
        if key in v and v[key] <= 0:
            issues.append(ValidationIssue("ERROR", "NON_POSITIVE", f"{key} must be > 0, got {v[key]!r}"))
    for key in _NON_NEGATIVE:
        if key in v and v[key] < 0:
            code = "T2_EXCEEDS_TRANSFORM_LIMIT" if key == "gamma_pd" else "NEGATIVE_VALUE"
            issues.append(ValidationIssue("ERROR", code, f"{key} must be >= 0, got {v[key]!r}"))
    for key in _UNIT_INTERVAL:
        if key in v and not 0.0 <= v[key] <= 1.0:
            issues.append(ValidationIssue("ERROR", "OUT_OF_UNIT_INTERVAL", f"{key} must lie in [0, 1], got {v[key]!r}"))
    return issues


def validate_cross_field(values: Mapping[str, Any]) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    v = _numbers(values)

    if "p1" in v and "p2" in v:
        if v["p1"] + v["p2"] > 1.0:
            issues.append(ValidationIssue("ERROR", "PHOTON_PROBABILITY_SUM",
                f"p1 + p2 = {v['p1'] + v['p2']:.6g} exceeds 1"))
        elif v["p2"] > 0.1 * v["p1"]:
            issues.append(ValidationIssue("WARN", "P2_NOT_SMALL",
                f"p2 = {v['p2']:.4g} is not small against p1 = {v['p1']:.4g}; pair coalescence is routed independently"))

    t1 = v.get("t1")
    if t1 is not None and t1 > 0 and "t2_hom" in v:
        if v["t2_hom"] <= 0:
            issues.append(ValidationIssue("ERROR", "NON_POSITIVE", f"t2_hom must be > 0, got {v['t2_hom']!r}"))
        elif v["t2_hom"] > 2.0 * t1:
            issues.append(ValidationIssue("ERROR", "T2_EXCEEDS_TRANSFORM_LIMIT",
                f"t2_hom = {v['t2_hom']:.4g} s exceeds 2*t1 = {2.0 * t1:.4g} s"))

    if t1 is not None and "tau_c" in v and t1 > 0 and v["tau_c"] < 100.0 * t1:
        issues.append(ValidationIssue("WARN", "TIMESCALES_NOT_SEPARATED",
            f"tau_c = {v['tau_c']:.3g} s is within 100*t1; quasi-static noise treatment is inaccurate"))

    if "rep_rate" in v and v["rep_rate"] > 0 and "sigma_jitter" in v:
        if 6.0 * v["sigma_jitter"] >= 1.0 / v["rep_rate"]:
            issues.append(ValidationIssue("WARN", "JITTER_EXCEEDS_PERIOD",
                f"6*sigma_jitter = {6.0 * v['sigma_jitter']:.3g} s reaches the pulse period"))
    return issues


def validate_emitter_values(values: Mapping[str, Any]) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    issues += validate_numeric(values)
    issues += validate_ranges(values)
    issues += validate_cross_field(values)
    return issues


def validate_run_values(seed: Any, workers: Any) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    try:
        s = int(seed)
        if not 0 <= s < 2**64:
            issues.append(ValidationIssue("ERROR", "SEED_RANGE", f"seed must be an unsigned 64-bit integer, got {seed!r}"))
    except (TypeError, ValueError):
        issues.append(ValidationIssue("ERROR", "SEED_RANGE", f"seed must be an integer, got {seed!r}"))
    try:
        if int(workers) < 1:
            issues.append(ValidationIssue("ERROR", "WORKERS_RANGE", f"workers must be >= 1, got {workers!r}"))
    except (TypeError, ValueError):
        issues.append(ValidationIssue("ERROR", "WORKERS_RANGE", f"workers must be an integer, got {workers!r}"))
    return issues


def run_all_validations(
    raw: Mapping[str, Any],
    *,
    defaults: Mapping[str, Any] | None = None,
    seed: Any = 0,
    workers: Any = 1,
) -> Dict[str, Any]:
    """Validate a parsed config against the defaults it will be merged onto. Never raises."""
    merged: Dict[str, Any] = dict(defaults or {})
    if "t2_hom" in raw:
        merged.pop("gamma_pd", None)
    merged.update(raw)

    issues: List[ValidationIssue] = []
    issues += validate_keys(raw)
    issues += validate_emitter_values(merged)
    issues += validate_run_values(seed, workers)

    summary = {
        "errors": sum(1 for i in issues if i.severity == "ERROR"),
        "warnings": sum(1 for i in issues if i.severity == "WARN"),
    }
    return {
        "summary": summary,
        "issues": [i.__dict__ for i in issues],
    }
