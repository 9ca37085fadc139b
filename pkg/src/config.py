"""Configuration loader for Hemotrack."""

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from dotenv import load_dotenv

from src.core.errors import ConfigError

load_dotenv()

ENV_PREFIX = "HEMO_"

FLOW_BACKENDS = ("classical", "injected", "external")
OFFSET_NORMALIZATIONS = ("paper_hw", "background_count")
OFFSET_REGIONS = ("background", "foreground", "global")


@dataclass(frozen=True)
class ModelSection:
    """Architecture sizes."""
    window_size: int = 8
    input_resolution: int = 512
    channels: int = 256  # c, coarse sequence features
    channels_f2: int = 64  # c2, stride-8 map
    channels_f1: int = 32  # c1, stride-4 map
    num_heads: int = 8
    encoder_depth: int = 2
    memory_layers: int = 2
    decoder_depth: int = 2


@dataclass(frozen=True)
class GaborSection:
    """Gabor wavelet parameters for the edge generator."""
    wavelength: float = 4.0
    orientations: tuple[float, ...] = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
    phase: float = 0.0
    sigma: float = 2.0
    gamma: float = 0.5
    kernel_size: int = 7


@dataclass(frozen=True)
class LossSection:
    """Loss weights (region, edge, score, point) and loss constants."""
    region: float = 1.0
    edge: float = 1.0
    score: float = 1.0
    point: float = 0.5
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    dice_eps: float = 1.0


@dataclass(frozen=True)
class TrainSection:
    """Optimization schedule."""
    lr_encoder: float = 5e-6
    lr_other: float = 5e-4
    warmup_steps: Optional[int] = None  # None: 5% of total_steps
    total_steps: Optional[int] = None  # None: epochs x windows, capped by max_iterations
    epochs: int = 20
    max_iterations: Optional[int] = None
    teacher_forcing: float = 0.25  # fraction of steps using GT masks for the viewpoint offset
    log_every: int = 20


@dataclass(frozen=True)
class FlowSection:
    """Optical flow backend and viewpoint-offset options."""
    backend: str = "classical"
    offset_normalization: str = "paper_hw"
    offset_region: str = "background"
    pyramid_levels: int = 3
    warp_iterations: int = 5
    solver_iterations: int = 50
    smoothness: float = 0.05
    external: str = ""  # "module:callable" for the external backend


@dataclass(frozen=True)
class EvalSection:
    """Metric settings."""
    pck_thresholds: tuple[float, ...] = (0.02, 0.05, 0.10)
    existence_threshold: float = 0.5
    jobs: int = 1


@dataclass(frozen=True)
class AblationSection:
    """Component switches; everything on is the full detector."""
    edge_generator: bool = True
    laplacian_filter: bool = True
    highres_fusion: bool = True
    point_memory: bool = True
    point_prompt: bool = True
    mask_memory_in_point: bool = True
    temporal_embedding: bool = True


SECTIONS = {
    "model": ModelSection,
    "gabor": GaborSection,
    "loss": LossSection,
    "train": TrainSection,
    "flow": FlowSection,
    "eval": EvalSection,
    "ablation": AblationSection,
}

# Keys that change the network or its outputs; checkpoints must agree on them.
ARCHITECTURE_SECTIONS = ("model", "gabor", "ablation")


@dataclass(frozen=True)
class ModelConfig:
    """Main configuration."""
    model: ModelSection = field(default_factory=ModelSection)
    gabor: GaborSection = field(default_factory=GaborSection)
    loss: LossSection = field(default_factory=LossSection)
    train: TrainSection = field(default_factory=TrainSection)
    flow: FlowSection = field(default_factory=FlowSection)
    eval: EvalSection = field(default_factory=EvalSection)
    ablation: AblationSection = field(default_factory=AblationSection)
    seed: int = 0

    @property
    def window_size(self) -> int:
        return self.model.window_size

    @property
    def memory_capacity(self) -> int:
        """Banks hold the N-1 frames preceding the current one."""
        return self.model.window_size - 1

    @classmethod
    def load(cls, config_path: Union[str, Path] = "config.yaml") -> "ModelConfig":
        """Load configuration from a YAML file and HEMO_* environment variables."""
        config_file = Path(config_path)
        text = config_file.read_text() if config_file.exists() else ""
        return cls.from_text(text, source=str(config_file))

    @classmethod
    def from_text(cls, text: str, source: str = "<string>", use_env: bool = True) -> "ModelConfig":
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            problem = getattr(e, "problem", None) or str(e)
            raise ConfigError(f"{source}: parse error at line {line}: {problem}", line=line) from e

        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a mapping, got {type(data).__name__}")

        flat = _flatten(data)
        if use_env:
            flat.update(_env_overrides())
        return cls.from_flat(flat, source=source)

    @classmethod
    def from_flat(cls, flat: dict[str, Any], source: str = "<dict>") -> "ModelConfig":
        known = set(flat_keys())
        unknown = sorted(k for k in flat if k not in known and k != "model.memory_capacity")
        if unknown:
            raise ConfigError(f"{source}: unknown keys {unknown}", fields=unknown)

        errors: list[str] = []
        bad_fields: list[str] = []
        sections = {}
        for name, section_cls in SECTIONS.items():
            values = {}
            for f in dataclasses.fields(section_cls):
                key = f"{name}.{f.name}"
                if key in flat:
                    try:
                        values[f.name] = _coerce(flat[key], f.type, f.default)
                    except (TypeError, ValueError) as e:
                        errors.append(f"{key}: {e}")
                        bad_fields.append(key)
            sections[name] = section_cls(**values)

        seed = flat.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            errors.append(f"seed: expected integer, got {seed!r}")
            bad_fields.append("seed")
            seed = 0

        config = cls(**sections, seed=seed)

        capacity = flat.get("model.memory_capacity")
        if capacity is not None and capacity != config.memory_capacity:
            errors.append(
                f"model.memory_capacity: must equal window_size - 1 = {config.memory_capacity}, got {capacity}"
            )
            bad_fields.append("model.memory_capacity")

        validation = config.validate()
        errors.extend(validation)
        bad_fields.extend(e.split(":", 1)[0] for e in validation)
        if errors:
            raise ConfigError(f"{source}: invalid configuration: " + "; ".join(errors), fields=bad_fields, errors=errors)
        return config

    def validate(self) -> list[str]:
        """Validate configuration and return list of errors."""
        errors = []
        m = self.model

        if m.window_size < 2:
            errors.append("model.window_size: must be >= 2")
        if m.input_resolution < 16 or m.input_resolution % 16 != 0:
            errors.append("model.input_resolution: must be a positive multiple of 16")
        if m.channels < 8 or m.channels % 8 != 0:
            errors.append("model.channels: must be a positive multiple of 8")
        if m.num_heads < 1 or m.channels % m.num_heads != 0:
            errors.append("model.num_heads: must divide model.channels")
        for key in ("channels_f1", "channels_f2", "encoder_depth", "memory_layers", "decoder_depth"):
            if getattr(m, key) < 1:
                errors.append(f"model.{key}: must be >= 1")

        g = self.gabor
        if g.sigma <= 0:
            errors.append("gabor.sigma: must be > 0")
        if g.wavelength <= 0:
            errors.append("gabor.wavelength: must be > 0")
        if g.gamma <= 0:
            errors.append("gabor.gamma: must be > 0")
        if g.kernel_size < 3 or g.kernel_size % 2 == 0:
            errors.append("gabor.kernel_size: must be odd and >= 3")
        if not g.orientations:
            errors.append("gabor.orientations: at least one orientation required")

        for key in ("region", "edge", "score", "point", "focal_gamma"):
            if getattr(self.loss, key) < 0:
                errors.append(f"loss.{key}: must be >= 0")
        if not 0.0 <= self.loss.focal_alpha <= 1.0:
            errors.append("loss.focal_alpha: must be in [0, 1]")
        if self.loss.dice_eps <= 0:
            errors.append("loss.dice_eps: must be > 0")

        t = self.train
        if t.lr_encoder < 0:
            errors.append("train.lr_encoder: must be >= 0")
        if t.lr_other < 0:
            errors.append("train.lr_other: must be >= 0")
        if t.epochs < 1:
            errors.append("train.epochs: must be >= 1")
        if t.total_steps is not None and t.total_steps < 2:
            errors.append("train.total_steps: must be >= 2")
        if t.warmup_steps is not None:
            if t.warmup_steps < 1:
                errors.append("train.warmup_steps: must be >= 1")
            elif t.total_steps is not None and t.warmup_steps >= t.total_steps:
                errors.append("train.warmup_steps: must be < train.total_steps")
        if t.max_iterations is not None and t.max_iterations < 1:
            errors.append("train.max_iterations: must be >= 1")
        if not 0.0 <= t.teacher_forcing <= 1.0:
            errors.append("train.teacher_forcing: must be in [0, 1]")

        fl = self.flow
        if fl.backend not in FLOW_BACKENDS:
            errors.append(f"flow.backend: must be one of {FLOW_BACKENDS}")
        if fl.offset_normalization not in OFFSET_NORMALIZATIONS:
            errors.append(f"flow.offset_normalization: must be one of {OFFSET_NORMALIZATIONS}")
        if fl.offset_region not in OFFSET_REGIONS:
            errors.append(f"flow.offset_region: must be one of {OFFSET_REGIONS}")
        if fl.backend == "external" and ":" not in fl.external:
            errors.append("flow.external: 'module:callable' required for the external backend")
        for key in ("pyramid_levels", "warp_iterations", "solver_iterations"):
            if getattr(fl, key) < 1:
                errors.append(f"flow.{key}: must be >= 1")
        if fl.smoothness <= 0:
            errors.append("flow.smoothness: must be > 0")

        e = self.eval
        if not e.pck_thresholds or any(not 0.0 < k < 1.0 for k in e.pck_thresholds):
            errors.append("eval.pck_thresholds: every threshold must be in (0, 1)")
        if not 0.0 < e.existence_threshold < 1.0:
            errors.append("eval.existence_threshold: must be in (0, 1)")
        if e.jobs < 1:
            errors.append("eval.jobs: must be >= 1")

        return errors

    def to_flat(self) -> dict[str, Any]:
        """Canonical dotted-key form."""
        flat: dict[str, Any] = {"seed": self.seed}
        for name in SECTIONS:
            section = getattr(self, name)
            for f in dataclasses.fields(section):
                value = getattr(section, f.name)
                flat[f"{name}.{f.name}"] = list(value) if isinstance(value, tuple) else value
        return flat

    def architecture(self) -> dict[str, Any]:
        return {k: v for k, v in self.to_flat().items() if k.split(".", 1)[0] in ARCHITECTURE_SECTIONS}

    def replace(self, **flat_updates: Any) -> "ModelConfig":
        """Copy with dotted-key updates (keyword form uses '__' for '.')."""
        flat = self.to_flat()
        flat.update({k.replace("__", "."): v for k, v in flat_updates.items()})
        return ModelConfig.from_flat(flat, source="<replace>")


def flat_keys() -> list[str]:
    keys = ["seed"]
    for name, section_cls in SECTIONS.items():
        keys.extend(f"{name}.{f.name}" for f in dataclasses.fields(section_cls))
    return keys


def load_config(path: Union[str, Path]) -> ModelConfig:
    """Parse and validate a config file; absent keys take their defaults."""
    config_file = Path(path)
    if not config_file.exists():
        raise ConfigError(f"Config file not found: {config_file}")
    return ModelConfig.load(config_file)


def dump_config(config: ModelConfig) -> str:
    """Nested YAML text that parses back to an equal config."""
    nested: dict[str, Any] = {"seed": config.seed}
    for key, value in config.to_flat().items():
        if "." in key:
            section, name = key.split(".", 1)
            nested.setdefault(section, {})[name] = value
    return yaml.safe_dump(nested, sort_keys=False)


def config_hash(config: ModelConfig) -> str:
    canonical = json.dumps(config.to_flat(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _flatten(data: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _env_overrides() -> dict[str, Any]:
    overrides = {}
    for key in flat_keys() + ["model.memory_capacity"]:
        env_name = ENV_PREFIX + key.upper().replace(".", "_")
        raw = os.getenv(env_name)
        if raw is not None:
            overrides[key] = yaml.safe_load(raw)
    return overrides


def _coerce(value: Any, annotation: Any, default: Any) -> Any:
    """Convert a YAML value to the field's type, raising ValueError with a reason."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"expected boolean, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ValueError(f"expected a list, got {value!r}")
        return tuple(_number(v) for v in value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValueError(f"expected string, got {value!r}")
        return value
    if default is None or "Optional" in str(annotation):
        if value is None:
            return None
        return _integer(value)
    if isinstance(default, int):
        return _integer(value)
    if isinstance(default, float):
        return _number(value)
    return value


def _integer(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ValueError(f"expected integer, got {value!r}")
    return int(value)


def _number(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected number, got {value!r}")
    if isinstance(value, str):
        # YAML 1.1 reads "5e-4" (no dot) as a string
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"expected number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ValueError(f"expected number, got {value!r}")
    return float(value)
