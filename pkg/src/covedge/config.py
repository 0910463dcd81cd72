"""Experiment configuration: strict JSON schema with fail-fast validation.

Unknown fields are rejected outright to protect experiment provenance; a
config that parses today will mean the same thing tomorrow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ensembles import ENTRY_KINDS, SIGMA_KINDS, SigmaModel
from .errors import ConfigError, InvalidModel
from .onatski import ALT_FAMILIES, SETTINGS, AlternativeSpec
from .spectral import PopulationSpectrum

__all__ = ["ExperimentConfig", "EXPERIMENTS"]

EXPERIMENTS = (
    "edge_params",
    "quantile_table",
    "onatski_null",
    "test_run",
    "size_power",
    "diagnostics",
)

_KNOWN_KEYS = {
    "experiment", "shapes", "replications", "seed", "sigma_model",
    "entry_dist", "beta", "level", "alt", "setting", "dim", "matrix_file",
    "null_table", "output",
}

_NULL_TABLE_KEYS = {"beta", "dim", "reps", "seed", "path"}


@dataclass
class ExperimentConfig:
    experiment: str
    shapes: tuple[tuple[int, int], ...] = ()
    replications: int = 2000
    seed: int = 0
    sigma_model: SigmaModel | None = None
    entry_dist: str | None = None
    beta: int | None = None
    level: float = 0.05
    alt: AlternativeSpec | None = None
    setting: str | None = None
    dim: int | None = None
    matrix_file: str | None = None
    null_table: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        for shape in self.shapes:
            if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
                raise ConfigError(f"bad shape {shape!r}; expected positive (M, N)")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0, 1)")
        if self.beta is not None and self.beta not in (1, 2):
            raise ConfigError("beta must be 1 or 2")
        if self.entry_dist is not None and self.entry_dist not in ENTRY_KINDS:
            raise ConfigError(f"unknown entry_dist {self.entry_dist!r}")
        if self.setting is not None and self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}")
        bad = set(self.null_table) - _NULL_TABLE_KEYS
        if bad:
            raise ConfigError(f"unknown null_table fields: {sorted(bad)}")
        self._check_experiment_requirements()

    def _check_experiment_requirements(self) -> None:
        exp = self.experiment
        if exp in ("quantile_table",):
            if not self.shapes:
                raise ConfigError(f"{exp} requires shapes")
            if self.sigma_model is None:
                raise ConfigError(f"{exp} requires sigma_model")
            if self.entry_dist is None:
                raise ConfigError(f"{exp} requires entry_dist")
        elif exp == "edge_params":
            if self.sigma_model is None:
                raise ConfigError("edge_params requires sigma_model")
            if not self.shapes:
                raise ConfigError("edge_params requires shapes (to fix M and d_n)")
        elif exp == "size_power":
            if not self.shapes:
                raise ConfigError("size_power requires shapes")
            if self.setting is None:
                raise ConfigError("size_power requires setting ('I' or 'II')")
        elif exp == "onatski_null":
            if self.dim is None or self.dim < 50:
                raise ConfigError("onatski_null requires dim >= 50")
        elif exp == "test_run":
            if not self.matrix_file:
                raise ConfigError("test_run requires matrix_file")
        elif exp == "diagnostics":
            if not self.shapes:
                raise ConfigError("diagnostics requires shapes (the size ladder)")

    @property
    def effective_beta(self) -> int:
        """Explicit beta, else inferred from the entry distribution."""
        if self.beta is not None:
            return self.beta
        if self.entry_dist is not None and "complex" in self.entry_dist:
            return 2
        return 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in raw:
            raise ConfigError("config must name an experiment")
        kwargs: dict = {"experiment": raw["experiment"]}
        if "shapes" in raw:
            try:
                kwargs["shapes"] = tuple((int(m), int(n)) for m, n in raw["shapes"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad shapes entry: {exc}") from exc
        for key in ("replications", "seed", "dim", "beta"):
            if key in raw and raw[key] is not None:
                try:
                    kwargs[key] = int(raw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{key} must be an integer") from exc
        if "level" in raw:
            kwargs["level"] = float(raw["level"])
        if "sigma_model" in raw and raw["sigma_model"] is not None:
            kwargs["sigma_model"] = _parse_sigma_model(raw["sigma_model"])
        if "entry_dist" in raw:
            kwargs["entry_dist"] = raw["entry_dist"]
        if "setting" in raw:
            kwargs["setting"] = raw["setting"]
        if "matrix_file" in raw:
            kwargs["matrix_file"] = raw["matrix_file"]
        if "output" in raw:
            kwargs["output"] = raw["output"]
        if "null_table" in raw and raw["null_table"] is not None:
            if not isinstance(raw["null_table"], dict):
                raise ConfigError("null_table must be an object")
            kwargs["null_table"] = dict(raw["null_table"])
        if "alt" in raw and raw["alt"] is not None:
            kwargs["alt"] = _parse_alt(raw["alt"], raw.get("setting"))
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)


def _parse_sigma_model(raw) -> SigmaModel:
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        raise ConfigError("sigma_model must be a kind string or an object")
    unknown = set(raw) - {"kind", "spike", "rotation_seed", "atoms"}
    if unknown:
        raise ConfigError(f"unknown sigma_model fields: {sorted(unknown)}")
    kind = raw.get("kind")
    if kind not in SIGMA_KINDS:
        raise ConfigError(f"unknown sigma_model kind {kind!r}")
    atoms = None
    if raw.get("atoms") is not None:
        try:
            atoms = PopulationSpectrum(tuple((float(v), float(w))
                                             for v, w in raw["atoms"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad atoms list: {exc}") from exc
    spike = raw.get("spike")
    try:
        return SigmaModel(kind=kind, spike=None if spike is None else float(spike),
                          atoms=atoms, rotation_seed=int(raw.get("rotation_seed", 0)))
    except InvalidModel as exc:
        raise ConfigError(str(exc)) from exc


def _parse_alt(raw, setting) -> AlternativeSpec:
    if not isinstance(raw, dict):
        raise ConfigError("alt must be an object")
    unknown = set(raw) - {"family", "tau", "setting"}
    if unknown:
        raise ConfigError(f"unknown alt fields: {sorted(unknown)}")
    family = raw.get("family")
    if family not in ALT_FAMILIES:
        raise ConfigError(f"unknown alternative family {family!r}")
    alt_setting = raw.get("setting", setting)
    if alt_setting is None:
        raise ConfigError("alternative needs a setting ('I' or 'II')")
    if setting is not None and raw.get("setting") is not None and raw["setting"] != setting:
        raise ConfigError("alt.setting disagrees with the top-level setting")
    try:
        tau = float(raw["tau"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("alt requires a numeric tau") from exc
    try:
        return AlternativeSpec(family=family, tau=tau, setting=alt_setting)
    except InvalidModel as exc:
        raise ConfigError(str(exc)) from exc
