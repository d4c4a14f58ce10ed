from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List

from qdstream.errors import InvalidArgumentError
from qdstream.validation.validators import validate_emitter_values

DEFAULT_T1 = 162e-12
DEFAULT_T2_HOM = 315e-12


@dataclass(frozen=True)
class EmitterParams:
    """
    Physical description of the pulsed resonance-fluorescence source. SI units throughout.

    t2_hom is derived from t1 and gamma_pd through 1/t2_hom = 1/(2 t1) + gamma_pd; use
    `EmitterParams.from_t2` to specify the coherence time instead of the dephasing rate.
    """

    t1: float = DEFAULT_T1
    gamma_pd: float = 1.0 / DEFAULT_T2_HOM - 1.0 / (2.0 * DEFAULT_T1)
    sigma_omega: float = 1.25e9
    tau_c: float = 0.7e-6
    omega_0: float = 0.0
    rep_rate: float = 76.4e6
    p1: float = 0.9965
    p2: float = 0.0035
    sigma_jitter: float = 0.0
    eta_fiber: float = 0.066
    eta_det: float = 0.331
    purcell_ratio: float = 3.8

    def __post_init__(self) -> None:
        errors = [i for i in validate_emitter_values(asdict(self)) if i.severity == "ERROR"]
        if errors:
            raise InvalidArgumentError("; ".join(f"{i.code}: {i.message}" for i in errors))

    @property
    def t2_hom(self) -> float:
        return 1.0 / (1.0 / (2.0 * self.t1) + self.gamma_pd)

    @property
    def period(self) -> float:
        return 1.0 / self.rep_rate

    @property
    def mean_photon_number(self) -> float:
        return self.p1 + 2.0 * self.p2

    @classmethod
    def from_t2(cls, t2_hom: float, **kwargs: Any) -> "EmitterParams":
        t1 = kwargs.get("t1", DEFAULT_T1)
        return cls(gamma_pd=1.0 / t2_hom - 1.0 / (2.0 * t1), **kwargs)

    @classmethod
    def voigt_linewidths(cls, **kwargs: Any) -> "EmitterParams":
        """Preset whose time-averaged spectrum has 1.01 GHz / 0.75 GHz Voigt components."""
        kwargs.setdefault("sigma_omega", 2.0e9)
        return cls(**kwargs)

    def with_values(self, **changes: Any) -> "EmitterParams":
        if "t2_hom" in changes:
            t2 = changes.pop("t2_hom")
            t1 = changes.get("t1", self.t1)
            changes["gamma_pd"] = 1.0 / t2 - 1.0 / (2.0 * t1)
        return replace(self, **changes)

    def to_config_text(self) -> str:
        lines = [f"{name} = {value!r}" for name, value in self.as_dict().items()]
        return "\n".join(lines) + "\n"

    def as_dict(self) -> Dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    def config_hash(self) -> str:
        return hashlib.sha1(self.to_config_text().encode("utf-8")).hexdigest()[:12]


def field_names() -> List[str]:
    return [f.name for f in fields(EmitterParams)]
