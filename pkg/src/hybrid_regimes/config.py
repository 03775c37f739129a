"""Run configuration. Defaults reproduce the published setup: 90% variance
threshold, k searched over 2..6, 100 k-means restarts, 10 CV folds and a
train/test split on 2013-12-31."""
from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .classify.models import HyperParams, Kind
from .errors import ConfigError
from .synth import SynthConfig

ALL_KINDS = [k.value for k in Kind]
PUBLISHED_DEFAULTS = {
    "split_date": "2013-12-31",
    "variance_threshold": 0.90,
    "k_min": 2,
    "k_max": 6,
    "n_init": 100,
    "cv_folds": 10,
    "classifiers": ALL_KINDS,
}

# fields that cannot change any artifact
_NOT_HASHED = ("threads", "out_dir")
_PATH_FIELDS = ("panel_path", "assets_path", "truth_path", "out_dir")


@dataclass
class RunConfig:
    panel_path: str = "panel.csv"
    assets_path: str = "assets.csv"
    truth_path: str = "truth.csv"
    out_dir: str = "out"
    date_column: str = "date"
    split_date: str = "2013-12-31"
    fill_leading: bool = False
    variance_threshold: float = 0.90
    k_min: int = 2
    k_max: int = 6
    n_init: int = 100
    max_iter: int = 300
    cv_folds: int = 10
    cv_mode: str = "block"
    classifiers: list[str] = field(default_factory=lambda: list(ALL_KINDS))
    hyper: HyperParams = field(default_factory=HyperParams)
    tail_hedge_assets: list[str] = field(default_factory=lambda: ["sp500", "crude"])
    tactical: bool = True
    excess_kurtosis: bool = False
    seed: int = 0
    threads: int = 1
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        self.validate()

    @property
    def split(self) -> dt.date:
        return dt.date.fromisoformat(self.split_date)

    def validate(self) -> None:
        try:
            dt.date.fromisoformat(self.split_date)
        except (TypeError, ValueError):
            raise ConfigError(f"split_date {self.split_date!r} is not YYYY-MM-DD") from None
        if not 0 < self.variance_threshold <= 1:
            raise ConfigError("variance_threshold must be in (0, 1]")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(f"bad k range {self.k_min}..{self.k_max}")
        if self.k_max < 2:
            raise ConfigError("k_max must be at least 2")
        if self.n_init < 1 or self.max_iter < 1:
            raise ConfigError("n_init and max_iter must be positive")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if self.cv_mode not in ("block", "shuffled"):
            raise ConfigError(f"cv_mode must be 'block' or 'shuffled', not {self.cv_mode!r}")
        bad = [k for k in self.classifiers if k not in ALL_KINDS]
        if bad or not self.classifiers:
            raise ConfigError(f"unknown classifier(s) {bad}; choose from {ALL_KINDS}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        try:
            if "hyper" in d:
                d["hyper"] = HyperParams(**d["hyper"])
            if "synth" in d:
                d["synth"] = SynthConfig(**d["synth"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hashed_dict(self) -> dict:
        """The fields that can influence an artifact."""
        return {k: v for k, v in self.to_dict().items() if k not in _NOT_HASHED}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.hashed_dict(), sort_keys=True).encode()).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.out_dir) / f"run-{self.digest()}"

    def with_published_defaults(self) -> "RunConfig":
        return dataclasses.replace(self, **{**PUBLISHED_DEFAULTS, "classifiers": list(ALL_KINDS)})


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON config. Relative paths, defaults included, are taken
    relative to the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    cfg = RunConfig.from_dict(raw)
    base = path.resolve().parent
    for key in _PATH_FIELDS:
        value = getattr(cfg, key)
        if not Path(value).is_absolute():
            setattr(cfg, key, str(base / value))
    return cfg
