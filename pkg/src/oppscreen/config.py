"""Run configuration: TOML file, ``OPPSCREEN_*`` environment overrides, CLI flags.

Precedence, lowest first: bundled defaults, the ``--config`` file,
environment variables, command-line flags.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .features import GramConfig
from .learners import TrainConfig
from .preprocess.resources import BUNDLED, data_path

ENV_PREFIX = "OPPSCREEN_"
LEXICON_KEYS = ("polarity", "emotion", "emoji", "adverbs")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int
    dataset: Path
    dataset_format: str | None = None
    out: Path = Path("out")
    k: int = 10
    train: TrainConfig = TrainConfig("rf")
    # optional per-layer overrides for the cascade command
    layers: tuple[TrainConfig, ...] = ()
    depth: float = 0.75
    percentile: float = 100.0
    use_dense: bool = True
    grams: tuple[GramConfig, ...] = ()
    protocols: tuple[int, ...] = (1, 4)
    resources: Mapping[str, Path] = field(default_factory=dict)
    lexicons: Mapping[str, Path] = field(default_factory=dict)
    grid: Mapping[str, tuple] = field(default_factory=dict)
    grid_metric: str = "precision"
    grid_folds: int = 3

    def validate(self) -> "RunConfig":
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if self.k < 2:
            raise ConfigError("k (folds) must be at least 2")
        if not 0.0 <= self.depth <= 1.0:
            raise ConfigError("depth must lie in [0, 1]")
        if not 0.0 < self.percentile <= 100.0:
            raise ConfigError("percentile must lie in (0, 100]")
        if self.layers and len(self.layers) != 3:
            raise ConfigError("layers needs exactly three entries")
        bad = [p for p in self.protocols if p not in (1, 2, 3, 4)]
        if bad:
            raise ConfigError(f"unknown protocol(s) {bad}; expected 1-4")
        for name, path in [("dataset", self.dataset), *self.resources.items(), *self.lexicons.items()]:
            if not Path(path).exists():
                raise ConfigError(f"{name}: path {path} does not exist")
        return self


def default_config_path() -> Path:
    return data_path("default_config.toml")


def _resolve(base: Path, value: str | os.PathLike) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def _train_config(table: Mapping[str, Any], seed: int) -> TrainConfig:
    if "algorithm" not in table:
        raise ConfigError("train table needs an algorithm")
    return TrainConfig(str(table["algorithm"]), dict(table.get("params", {})), seed)


def _switches_algorithm(old: Mapping, new: Mapping) -> bool:
    return "algorithm" in new and new["algorithm"] != old.get("algorithm")


def _merge(base: dict, override: Mapping) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key == "train" and isinstance(value, Mapping) and _switches_algorithm(out.get(key, {}), value):
            # hyperparameters of a different learner do not carry over
            out[key] = dict(value)
        elif isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = _merge(dict(out[key]), value)
        else:
            out[key] = value
    return out


def read_toml(path: Path, resolve_paths: bool = True) -> dict:
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _absolutize(data, path.parent) if resolve_paths else data


def _absolutize(data: dict, base: Path) -> dict:
    """Resolve relative paths against the directory of the file they came from."""
    data = dict(data)
    if "out" in data:
        data["out"] = str(_resolve(base, data["out"]))
    if isinstance(data.get("dataset"), Mapping) and data["dataset"].get("path"):
        data["dataset"] = {**data["dataset"], "path": str(_resolve(base, data["dataset"]["path"]))}
    for section in ("resources", "lexicons"):
        if isinstance(data.get(section), Mapping):
            data[section] = {k: str(_resolve(base, v)) for k, v in data[section].items()}
    return data


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict[str, Any] = {}
    get = lambda name: environ.get(ENV_PREFIX + name)  # noqa: E731
    if get("SEED") is not None:
        out["seed"] = int(get("SEED"))
    if get("FOLDS") is not None:
        out["k"] = int(get("FOLDS"))
    if get("DEPTH") is not None:
        out.setdefault("cascade", {})["depth"] = float(get("DEPTH"))
    if get("OUT") is not None:
        out["out"] = get("OUT")
    if get("DATASET") is not None:
        out["dataset"] = {"path": get("DATASET")}
    if get("ALGORITHM") is not None:
        out["train"] = {"algorithm": get("ALGORITHM")}
    return out


def build_config(data: Mapping[str, Any]) -> RunConfig:
    if "seed" not in data:
        raise ConfigError("seed is required")
    try:
        seed = int(data["seed"])
        dataset = data.get("dataset", {})
        train = _train_config(data.get("train", {}), seed)
        layers = tuple(_train_config(t, seed) for t in data.get("layers", ()))
        cascade = data.get("cascade", {})
        grams = tuple(
            GramConfig(
                analyzer=g.get("analyzer", "char"),
                ngram_range=tuple(g.get("ngram_range", (1, 7))),
                max_df=float(g.get("max_df", 0.5)),
                min_df=float(g.get("min_df", 0.001)),
                max_features=g.get("max_features"),
            )
            for g in data.get("grams", ())
        )
        grid_table = dict(data.get("grid", {}))
        metric = grid_table.pop("metric", "precision")
        grid_folds = int(grid_table.pop("folds", 3))
        resources = {k: Path(v) for k, v in data.get("resources", {}).items()}
        lexicons = {k: Path(v) for k, v in data.get("lexicons", {}).items()}
        unknown = (set(resources) - set(BUNDLED)) | (set(lexicons) - set(LEXICON_KEYS))
        if unknown:
            raise ConfigError(f"unknown resource key(s): {sorted(unknown)}")
        config = RunConfig(
            seed=seed,
            dataset=Path(dataset.get("path") or data_path("synthetic_corpus.jsonl")),
            dataset_format=dataset.get("format"),
            out=Path(data.get("out", "out")),
            k=int(data.get("k", 10)),
            train=train,
            layers=layers,
            depth=float(cascade.get("depth", 0.75)),
            percentile=float(cascade.get("percentile", 100.0)),
            use_dense=bool(cascade.get("use_dense", True)),
            grams=grams or (GramConfig("char"), GramConfig("char_word_boundary"), GramConfig("word", (1, 3))),
            protocols=tuple(int(p) for p in data.get("protocols", (1, 4))),
            resources=resources,
            lexicons=lexicons,
            grid={k: tuple(v) for k, v in grid_table.items()},
            grid_metric=metric,
            grid_folds=grid_folds,
        )
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return config


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge defaults, file, environment and flag overrides, then validate."""
    # bundled defaults stay relative to the working directory
    data = read_toml(default_config_path(), resolve_paths=False)
    if path is not None:
        data = _merge(data, read_toml(Path(path)))
    data = _merge(data, env_overrides(environ))
    data = _merge(data, overrides or {})
    return build_config(data).validate()

