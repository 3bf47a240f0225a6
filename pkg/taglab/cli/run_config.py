"""
Resolved settings of one command-line run.

Values come from the built-in defaults, then an optional TOML file, then the
flags actually given on the command line, each overriding the previous.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
import tomllib
from typing import Any, Literal, Optional

from taglab.architectures.crf import CrfConfig
from taglab.architectures.neural import NeuralConfig
from taglab.config import logger
from taglab.data.storage import Storage
from taglab.errors import UsageError
from taglab.modeling.train import TrainConfig

type ModelKind = Literal["major", "memo", "crf", "neural"]

MODEL_KINDS = ("major", "memo", "crf", "neural")

NEURAL_ONLY = frozenset(
    {
        "encoder",
        "predictor",
        "features",
        "dropout",
        "filter_widths",
        "lowercase_mode",
        "word_min",
        "affix_min",
    }
)
CRF_ONLY = frozenset({"l2", "feature_cutoff"})
TRAINED_ONLY = frozenset({"window", "lr", "batch_size", "clip", "epochs"})

# Per-kind defaults for settings whose default differs between model families.
KIND_DEFAULTS: dict[str, dict[str, Any]] = {
    "crf": {"window": "1", "lr": "0.05", "epochs": 50},
    "neural": {"window": "2", "lr": "0.001", "epochs": 200},
}

# Grids `tune` searches when the setting is not given explicitly.
TUNE_DEFAULTS: dict[str, dict[str, str]] = {
    "crf": {"l2": "0.0001,0.001,0.01,0.1,1"},
    "neural": {"lr": "0.001,0.0005,0.0001", "dropout": "0.2,0.5", "filter_widths": "2,3,4,5"},
}


def split_values(value: Any) -> list[str]:
    """Candidates of a grid-valued setting: a list, or a comma-separated string."""
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [part.strip() for part in str(value).split(",") if part.strip()]


@dataclass(frozen=True)
class RunConfig:
    command: str
    corpus: Optional[str] = None
    split: Optional[str] = None
    fold: int = 0
    k: int = 5
    model: Optional[str] = None
    input: Optional[str] = None
    out: Optional[str] = None
    model_kind: ModelKind = "neural"
    encoder: str = "bilstm"
    predictor: str = "crf"
    features: str = "words,prefix,suffix,chars"
    window: Optional[str] = None
    l2: str = "0.01"
    lr: Optional[str] = None
    dropout: str = "0.5"
    filter_widths: str = "3"
    lowercase_mode: str = "lookups"
    word_min: int = 2
    affix_min: int = 5
    feature_cutoff: int = 1
    batch_size: int = 8
    clip: float = 1.0
    epochs: Optional[int] = None
    seed: int = 0
    std: Literal["sample", "population"] = "sample"
    explicit: frozenset[str] = field(default=frozenset(), compare=False)

    def __post_init__(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise UsageError(f"Unknown model kind {self.model_kind!r}; choose from {MODEL_KINDS}")
        if self.batch_size < 1:
            raise UsageError(f"--batch-size must be >= 1, got {self.batch_size}")
        if not self.clip > 0:
            raise UsageError(f"--clip must be > 0, got {self.clip}")
        if self.k < 2:
            raise UsageError(f"--k must be >= 2, got {self.k}")
        if self.lowercase_mode not in ("lookups", "none-with-chars"):
            raise UsageError(f"Unknown --lowercase-mode {self.lowercase_mode!r}")
        if self.std not in ("sample", "population"):
            raise UsageError(f"Unknown --std {self.std!r}")

        for name, value in KIND_DEFAULTS.get(self.model_kind, KIND_DEFAULTS["neural"]).items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)

        if self.command == "tune":
            for name, grid in TUNE_DEFAULTS.get(self.model_kind, {}).items():
                if name == "filter_widths" and "chars" not in split_values(self.features):
                    continue
                if name not in self.explicit:
                    object.__setattr__(self, name, grid)

    # ------------------------------------------------------------------ #

    @classmethod
    def resolve(
        cls,
        command: str,
        flags: dict[str, Any],
        config_file: Optional[str] = None,
    ) -> "RunConfig":
        """
        Merge defaults, the TOML file at ``config_file`` and the given flags.

        ``flags`` holds only options given on the command line; ``None`` values
        are ignored.

        Raises
        ------
        UsageError
            On unknown TOML keys or options inconsistent with the model kind.
        """
        settings: dict[str, Any] = {}
        if config_file is not None:
            settings.update(load_toml(config_file))
        settings.update({k: v for k, v in flags.items() if v is not None})

        known = {f.name for f in fields(cls)} - {"command", "explicit"}
        unknown = sorted(set(settings) - known)
        if unknown:
            raise UsageError(f"Unknown setting(s): {', '.join(unknown)}")

        for name in ("window", "l2", "lr", "dropout", "filter_widths", "features"):
            if name in settings and isinstance(settings[name], (list, tuple)):
                settings[name] = ",".join(str(v) for v in settings[name])
            elif name in settings:
                settings[name] = str(settings[name])

        config = cls(command=command, explicit=frozenset(settings), **settings)
        config.check_consistency()
        logger.debug(f"Resolved run configuration: {config.to_dict()}")
        return config

    def check_consistency(self) -> None:
        """
        Raises
        ------
        UsageError
            If an option was given that the chosen model kind does not use.
        """
        match self.model_kind:
            case "major" | "memo":
                unused = self.explicit & (NEURAL_ONLY | CRF_ONLY | TRAINED_ONLY)
            case "crf":
                unused = self.explicit & NEURAL_ONLY
            case "neural":
                unused = self.explicit & CRF_ONLY
        if unused:
            raise UsageError(
                f"Option(s) {', '.join(sorted(unused))} do not apply to "
                f"--model-kind {self.model_kind}"
            )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        del data["explicit"]
        return data

    # ------------------------------------------------------------------ #

    def single(self, name: str) -> str:
        values = split_values(getattr(self, name))
        if len(values) != 1:
            flag = name.replace("_", "-")
            raise UsageError(f"--{flag} takes one value outside tune, got {values}")
        return values[0]

    def grid(self, name: str) -> list[str]:
        values = split_values(getattr(self, name))
        if not values:
            raise UsageError(f"--{name.replace('_', '-')} has no values")
        return values

    def crf_config(self) -> CrfConfig:
        try:
            return CrfConfig(
                window=int(self.single("window")),
                l2=float(self.single("l2")),
                lr=float(self.single("lr")),
                max_epochs=int(self.epochs),
                seed=self.seed,
                feature_cutoff=self.feature_cutoff,
                batch_size=self.batch_size,
                clip_norm=self.clip,
            )
        except ValueError as e:
            raise UsageError(str(e)) from e

    def neural_config(self) -> NeuralConfig:
        try:
            config = NeuralConfig(
                encoder=self.single("encoder"),
                predictor=self.single("predictor"),
                window=int(self.single("window")),
                dropout=float(self.single("dropout")),
                filter_widths=tuple(int(w) for w in self.grid("filter_widths")),
                lowercase_mode=self.lowercase_mode,
                seed=self.seed,
            )
            return config.with_features(self.features)
        except ValueError as e:
            raise UsageError(str(e)) from e

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                batch_size=self.batch_size,
                clip_norm=self.clip,
                initial_lr=float(self.single("lr")),
                seed=self.seed,
                max_epochs=int(self.epochs),
            )
        except ValueError as e:
            raise UsageError(str(e)) from e

    def with_fold(self, fold: int) -> "RunConfig":
        return replace(self, fold=fold)


def load_toml(path: str) -> dict[str, Any]:
    """
    Read settings from a TOML file; dashes in keys become underscores.

    Raises
    ------
    StorageError
        If the file does not exist.
    UsageError
        If it is not valid TOML.
    """
    file_path = Storage.validate_file(Path(path))
    try:
        with file_path.open("rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"Invalid config file {path}: {e}") from e

    return {key.replace("-", "_"): value for key, value in data.items()}
