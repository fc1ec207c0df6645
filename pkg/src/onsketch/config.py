"""Experiment configuration: defaults, key=value config files, validation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .accel_params import GammaMode
from .errors import InvalidConfig
from .models import DesignKind, DesignSpec, GroundTruth, ModelKind, default_ground_truth
from .newton import NewtonConfig, StepSchedule
from .sketching import SketchKind, SketchSpec

CHECKPOINT_FLOOR = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description; use :func:`make_config` to build one."""

    model: ModelKind
    d: int
    design: DesignKind
    r: float
    sigma2: float
    sketch: SketchKind
    columns: int
    tau: int | None  # None = exact Newton
    gamma_mode: GammaMode
    steps: int
    reps: int
    seed: int
    c_phi: float
    phi: float
    refresh_every: int
    mc_samples_mu_nu: int
    q: float
    checkpoints: tuple[int, ...]
    out: str | None

    def design_spec(self) -> DesignSpec:
        return DesignSpec(kind=self.design, d=self.d, r=self.r)

    def sketch_spec(self) -> SketchSpec | None:
        if self.tau is None:
            return None
        return SketchSpec(kind=self.sketch, columns=self.columns)

    def schedule(self) -> StepSchedule:
        return StepSchedule(c_phi=self.c_phi, phi=self.phi)

    def ground_truth(self) -> GroundTruth:
        return default_ground_truth(self.design_spec(), self.sigma2)

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(
            model=self.model,
            sketch=self.sketch_spec(),
            tau=self.tau,
            gamma_mode=self.gamma_mode,
            refresh_every=self.refresh_every,
            mc_samples_mu_nu=self.mc_samples_mu_nu,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "d": self.d,
            "design": self.design,
            "r": self.r,
            "sigma2": self.sigma2,
            "sketch": self.sketch,
            "columns": self.columns,
            "tau": "exact" if self.tau is None else self.tau,
            "gamma_mode": self.gamma_mode,
            "steps": self.steps,
            "reps": self.reps,
            "seed": self.seed,
            "c_phi": self.c_phi,
            "phi": self.phi,
            "refresh_every": self.refresh_every,
            "mc_samples_mu_nu": self.mc_samples_mu_nu,
            "q": self.q,
            "checkpoints": ",".join(str(t) for t in self.checkpoints),
            "out": self.out,
        }


def default_steps(d: int) -> int:
    return 200_000 if d <= 10 else 400_000


def default_checkpoints(steps: int) -> tuple[int, ...]:
    """Geometric schedule steps, steps/2, steps/4, ... down to a floor."""
    out = set()
    t = steps
    while t >= min(CHECKPOINT_FLOOR, steps):
        out.add(t)
        if t == 1:
            break
        t = -(-t // 2)  # ceil division
    return tuple(sorted(out))


_DEFAULTS: dict[str, Any] = {
    "model": "linear",
    "d": 2,
    "design": "identity",
    "r": 0.4,
    "sigma2": 1.0,
    "sketch": "kaczmarz",
    "columns": 1,
    "tau": 5,
    "gamma_mode": "estimated",
    "steps": None,
    "reps": 200,
    "seed": 1,
    "c_phi": 1.0,
    "phi": 0.501,
    "refresh_every": 1,
    "mc_samples_mu_nu": 200,
    "q": 0.05,
    "checkpoints": None,
    "out": None,
}

_CHOICES = {
    "model": ("linear", "logistic"),
    "design": ("identity", "toeplitz", "equicorr"),
    "sketch": ("kaczmarz", "gaussian"),
    "gamma_mode": ("estimated", "unit"),
}


def _coerce(key: str, value: Any) -> Any:
    """Convert a raw (usually string) value to the field's type."""
    if value is None:
        return None
    if key in ("model", "design", "sketch", "gamma_mode"):
        value = str(value).strip().lower()
        if value not in _CHOICES[key]:
            raise InvalidConfig(f"{key}: must be one of {_CHOICES[key]}, got {value!r}")
        return value
    if key == "tau":
        if isinstance(value, str):
            value = value.strip().lower()
            if value == "exact":
                return None
            try:
                value = int(value)
            except ValueError as exc:
                raise InvalidConfig(f"tau: expected an integer or 'exact', got {value!r}") from exc
        return None if value is None else int(value)
    if key == "checkpoints":
        if isinstance(value, str):
            parts = [p for p in value.replace(" ", "").split(",") if p]
            try:
                value = tuple(int(p) for p in parts)
            except ValueError as exc:
                raise InvalidConfig(f"checkpoints: expected integers, got {value!r}") from exc
        return tuple(int(t) for t in value)
    if key == "out":
        return str(value)
    if key in ("d", "columns", "steps", "reps", "seed", "refresh_every", "mc_samples_mu_nu"):
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"{key}: expected an integer, got {value!r}") from exc
    if key in ("r", "sigma2", "c_phi", "phi", "q"):
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"{key}: expected a number, got {value!r}") from exc
    raise InvalidConfig(f"unknown config key {key!r}")


def make_config(**kwargs: Any) -> ExperimentConfig:
    """Build a validated config; unspecified keys take documented defaults.

    ``tau`` accepts an integer or the string ``"exact"``; passing ``tau=None``
    directly also selects the exact solve.  ``steps=None`` and
    ``checkpoints=None`` select the d-dependent default horizon and the
    geometric checkpoint schedule.
    """
    values = dict(_DEFAULTS)
    for key, value in kwargs.items():
        if key not in values:
            raise InvalidConfig(f"unknown config key {key!r}")
        if value is None:
            if key == "tau":
                values[key] = None  # exact Newton
            continue  # None elsewhere keeps the default
        values[key] = _coerce(key, value)

    if values["d"] < 1:
        raise InvalidConfig("d: must be >= 1")
    if values["steps"] is None:
        values["steps"] = default_steps(values["d"])
    if values["steps"] < 1:
        raise InvalidConfig("steps: must be >= 1")
    if values["reps"] < 1:
        raise InvalidConfig("reps: must be >= 1")
    if values["seed"] < 0:
        raise InvalidConfig("seed: must be >= 0")
    if not (0.5 < values["phi"] <= 1.0):
        raise InvalidConfig(f"phi: must be in (0.5, 1], got {values['phi']}")
    if values["c_phi"] <= 0.0:
        raise InvalidConfig("c_phi: must be positive")
    if not (0.0 < values["q"] < 1.0):
        raise InvalidConfig(f"q: must be in (0, 1), got {values['q']}")
    if not (0.0 <= values["r"] < 1.0):
        raise InvalidConfig(f"r: must be in [0, 1), got {values['r']}")
    if values["sigma2"] <= 0.0:
        raise InvalidConfig("sigma2: must be positive")
    if values["tau"] is not None and values["tau"] < 0:
        raise InvalidConfig("tau: must be >= 0 or 'exact'")
    if values["columns"] < 1:
        raise InvalidConfig("columns: must be >= 1")
    if values["sketch"] == "kaczmarz" and values["columns"] != 1:
        raise InvalidConfig("columns: kaczmarz sketching requires columns = 1")
    if values["refresh_every"] < 1:
        raise InvalidConfig("refresh_every: must be >= 1")
    if values["mc_samples_mu_nu"] < 2:
        raise InvalidConfig("mc_samples_mu_nu: must be >= 2")
    if values["checkpoints"] is None:
        values["checkpoints"] = default_checkpoints(values["steps"])
    values["checkpoints"] = tuple(sorted(set(values["checkpoints"])))
    if values["checkpoints"][0] < 1 or values["checkpoints"][-1] > values["steps"]:
        raise InvalidConfig("checkpoints: must lie in [1, steps]")
    return ExperimentConfig(**values)


def parse_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> ExperimentConfig:
    """Read a key=value config file and apply CLI overrides on top."""
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise InvalidConfig(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _DEFAULTS:
                raise InvalidConfig(f"{path}:{lineno}: unknown config key {key!r}")
            raw[key] = value.strip()
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return make_config(**raw)
