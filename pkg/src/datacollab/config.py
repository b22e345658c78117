"""Experiment configuration and its flat key-value file format.

A config file is lines of ``key = value`` with ``#`` comments; every key
maps 1:1 onto an :class:`ExperimentConfig` field (the ridge penalty is
spelled ``lambda`` in files). Unknown keys are errors, and a config
round-trips losslessly through ``to_text`` / ``parse_text``.
"""

from dataclasses import dataclass, fields

__all__ = ["ExperimentConfig", "parse_text", "parse_file"]

# file key -> attribute (only where they differ)
_KEY_TO_ATTR = {"lambda": "ridge_lambda"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass
class ExperimentConfig:
    """Every knob of the two experiment drivers, with desk-scale defaults.

    MNIST-scale reference values: parties=4, n_per_party=50,
    intermediate_dim=25, anchor_rows=2000, lambda=0.1 for the accuracy
    experiment; parties=10, n_per_party=100 for the privacy trade-off.
    """

    dataset: str = "synthetic"  # synthetic | mnist
    mnist_images: str = ""
    mnist_labels: str = ""
    mnist_test_images: str = ""
    mnist_test_labels: str = ""
    synthetic_classes: int = 10
    synthetic_per_class: int = 60
    synthetic_dim: int = 64
    synthetic_separation: float = 6.0
    synthetic_test_per_class: int = 40
    parties: int = 4
    n_per_party: int = 50
    intermediate_dim: int = 10
    collab_dim: int = 0  # 0 means: same as intermediate_dim
    anchor_rows: int = 200
    ridge_lambda: float = 0.1
    knn_k: int = 7
    trials: int = 20
    zero_eps_trials: int = 10
    epsilon_min: float = 1e-6
    epsilon_max: float = 1e-2
    epsilon_grid: str = "0,0.0001,0.001,0.01,0.1,0.2,0.3,0.4,0.5"
    test_size: int = 1000
    anchor_auto: bool = True
    anchor_lo: float = 0.0
    anchor_hi: float = 1.0
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.dataset not in ("synthetic", "mnist"):
            raise ValueError(f"dataset must be synthetic or mnist, got {self.dataset!r}")
        for name in (
            "synthetic_classes", "synthetic_per_class", "synthetic_dim",
            "parties", "n_per_party", "intermediate_dim", "anchor_rows",
            "knn_k", "trials", "test_size", "workers",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.collab_dim < 0:
            raise ValueError("collab_dim must be nonnegative (0 = intermediate_dim)")
        if self.ridge_lambda <= 0:
            raise ValueError("lambda must be positive")
        if not 0 < self.epsilon_min < self.epsilon_max:
            raise ValueError("need 0 < epsilon_min < epsilon_max")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")

    @property
    def effective_collab_dim(self) -> int:
        return self.collab_dim or self.intermediate_dim

    def epsilon_grid_values(self) -> tuple:
        try:
            values = tuple(float(v) for v in self.epsilon_grid.split(","))
        except ValueError as exc:
            raise ValueError(f"bad epsilon_grid {self.epsilon_grid!r}: {exc}") from None
        if any(v < 0 for v in values):
            raise ValueError("epsilon_grid entries must be nonnegative")
        return values

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            key = _ATTR_TO_KEY.get(f.name, f.name)
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _convert(field, raw: str):
    if field.type is bool or isinstance(field.default, bool):
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError(f"{field.name}: expected true/false, got {raw!r}")
        return low == "true"
    kind = type(field.default)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def parse_text(text: str) -> ExperimentConfig:
    """Parse config file content; unknown keys and bad values are errors."""
    by_key = {}
    for f in fields(ExperimentConfig):
        by_key[_ATTR_TO_KEY.get(f.name, f.name)] = f
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in by_key:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        field = by_key[key]
        try:
            values[field.name] = _convert(field, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ExperimentConfig(**values)


def parse_file(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())
