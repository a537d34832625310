"""Flat, typed key=value run configuration.

Precedence: command-line overrides > config file > defaults.  Unknown keys
are rejected; the resolved configuration is echoed into every run
directory so an experiment can be replayed from its own record.
"""

from __future__ import annotations

import os


class ConfigError(Exception):
    pass


# key -> (type, default).  bool values accept true/false/1/0/yes/no.
SCHEMA: dict[str, tuple[type, object]] = {
    # dataset
    "data_dir": (str, "data"),
    "train_file": (str, ""),
    "validation_file": (str, ""),
    "test_file": (str, ""),
    "file_format": (str, "csv"),
    "id_column": (str, "id"),
    "text_column": (str, "tweet"),
    "label_column": (str, "label"),
    "synthetic": (int, 0),          # >0: generate a synthetic corpus this big
    # preprocessing
    "drop_numeric": (bool, True),
    "stoplist_path": (str, ""),
    # featurization
    "min_df": (int, 1),
    "l2_normalize": (bool, False),
    "embedding_path": (str, ""),
    "embedding_url": (str, ""),
    "embedding_sha256": (str, ""),
    "embedding_dim": (int, 50),
    "max_len": (int, 128),
    "rnn_max_len": (int, 64),       # reduced-budget profile for recurrent runs
    "chunk_size": (int, 100),
    # training
    "seed": (int, 0),
    "epochs": (int, 10),
    "batch_size": (int, 64),
    "learning_rate": (float, 1e-3),
    "dtype": (str, "float64"),
    "dropout": (float, 0.25),
    "paper_scale": (bool, False),
    # model hyperparameters
    "dnn_widths": (str, "512,256,128,64"),
    "cnn_filters": (int, 64),
    "cnn_kernel_widths": (str, "3,4,5,6,7,8"),
    "rnn_hidden": (int, 64),
    "rnn_layers": (int, 4),
    "nb_alpha": (float, 1.0),
    "knn_k": (int, 6),
    "rf_trees": (int, 64),
    "gb_estimators": (int, 100),
    "gb_learning_rate": (float, 0.1),
    "gb_max_depth": (int, 3),
    # ensemble
    "rmdl_models_per_family": (int, 3),
    "rmdl_epochs": (int, 8),
    "rmdl_node_range": (str, "32,256"),
    "rmdl_dnn_layers": (str, "2,5"),
    "rmdl_cnn_branches": (str, "2,4"),
    "rmdl_rnn_layers": (str, "1,3"),
    # execution
    "output_dir": (str, "runs"),
    "run_name": (str, ""),
    "workers": (int, 1),
}


def _coerce(key: str, raw, target: type):
    if isinstance(raw, target) and not (target is bool and isinstance(raw, int)):
        return raw
    text = str(raw).strip()
    if target is bool:
        low = text.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return target(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {target.__name__}, got {raw!r}") from exc


class RunConfig:
    def __init__(self, values: dict | None = None):
        self._values = {k: default for k, (_t, default) in SCHEMA.items()}
        for k, v in (values or {}).items():
            self.set(k, v)

    def set(self, key: str, value) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key: {key!r}")
        self._values[key] = _coerce(key, value, SCHEMA[key][0])

    def __getattr__(self, key: str):
        values = object.__getattribute__(self, "_values")
        if key in values:
            return values[key]
        raise AttributeError(key)

    def int_list(self, key: str) -> tuple[int, ...]:
        raw = self._values[key]
        try:
            return tuple(int(p) for p in str(raw).split(",") if p.strip() != "")
        except ValueError as exc:
            raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from exc

    def int_range(self, key: str) -> tuple[int, int]:
        parts = self.int_list(key)
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected 'low,high', got {self._values[key]!r}")
        return parts

    def echo(self) -> str:
        lines = [f"{k} = {self._values[k]}" for k in sorted(self._values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path: str | None = None, overrides: dict | None = None) -> "RunConfig":
        cfg = cls()
        if path:
            if not os.path.exists(path):
                raise ConfigError(f"config file not found: {path}")
            with open(path, encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    text = line.split("#", 1)[0].strip()
                    if not text:
                        continue
                    if "=" not in text:
                        raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
                    key, _, value = text.partition("=")
                    cfg.set(key.strip(), value.strip())
        for k, v in (overrides or {}).items():
            cfg.set(k, v)
        return cfg
