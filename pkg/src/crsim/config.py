"""Scenario configuration and the plain-text ``key=value`` config format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values or violated scenario invariants."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario constants of one primary/cognitive link setup.

    Powers are linear. ``zeta`` (interference-temperature threshold) and
    ``chi1`` (the per-symbol power cap coefficient derived from it) are
    alternatives: supply exactly one. ``trials`` and ``seed`` are run
    controls carried along so a config file fully determines an experiment.
    """

    mp: int = 2
    m1: int = 4
    m2: int = 4
    alpha: float = 0.5
    sigma_s2: float = 100.0
    sigma_n1_2: float = 1.0
    sigma_n2_2: float = 1.0
    n_frame: int = 1000
    power_total: float = 20000.0
    zeta: float | None = None
    chi1: float | None = 0.16
    trials: int = 500
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def k1(self) -> int:
        return self.m1 - self.mp

    @property
    def k2(self) -> int:
        return self.m2 - self.mp

    def validate(self) -> None:
        if self.mp < 1:
            raise ConfigError("mp must be >= 1")
        if self.m1 <= self.mp:
            raise ConfigError(f"m1 must exceed mp (m1={self.m1}, mp={self.mp})")
        if self.m2 <= self.mp:
            raise ConfigError(f"m2 must exceed mp (m2={self.m2}, mp={self.mp})")
        if self.k1 > self.k2:
            raise ConfigError(f"requires m1 <= m2 so that K1 <= K2 (m1={self.m1}, m2={self.m2})")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("sigma_s2", "sigma_n1_2", "sigma_n2_2", "power_total"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.n_frame < self.k1 + 2:
            raise ConfigError(
                f"n_frame must be >= K1 + 2 = {self.k1 + 2}, got {self.n_frame}")
        if (self.zeta is None) == (self.chi1 is None):
            raise ConfigError("exactly one of zeta or chi1 must be given")
        if self.zeta is not None and not self.zeta > 0.0:
            raise ConfigError(f"zeta must be > 0, got {self.zeta}")
        if self.chi1 is not None and not self.chi1 > 0.0:
            raise ConfigError(f"chi1 must be > 0, got {self.chi1}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def replace(self, **changes) -> "SystemConfig":
        if "zeta" in changes and changes["zeta"] is not None and "chi1" not in changes:
            changes["chi1"] = None
        if "chi1" in changes and changes["chi1"] is not None and "zeta" not in changes:
            changes["zeta"] = None
        return dataclasses.replace(self, **changes)


#: Parameters of the running numerical example (4x4 CR terminals, 2-antenna PR,
#: 20 dB PR power, N = 1000, P = 20000, chi1 = 0.16).
DEFAULT_CONFIG = SystemConfig()

_INT_KEYS = ("mp", "m1", "m2", "n_frame", "trials", "seed")
_FLOAT_KEYS = ("alpha", "power_total", "chi1", "zeta")
_DB_KEYS = {"sigma_s_db": "sigma_s2", "sigma_n1_db": "sigma_n1_2", "sigma_n2_db": "sigma_n2_2"}
REQUIRED_KEYS = ("mp", "m1", "m2", "alpha", "sigma_s_db", "sigma_n1_db",
                 "sigma_n2_db", "n_frame", "power_total")
KNOWN_KEYS = frozenset(_INT_KEYS) | frozenset(_FLOAT_KEYS) | frozenset(_DB_KEYS)


def parse_config(text: str, source: str = "<string>") -> SystemConfig:
    """Parse ``key=value`` lines (``#`` starts a comment) into a :class:`SystemConfig`.

    Every key of ``REQUIRED_KEYS`` must be present, plus exactly one of
    ``chi1`` / ``zeta``; ``trials`` and ``seed`` are optional.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")
    if ("chi1" in raw) == ("zeta" in raw):
        raise ConfigError(f"{source}: exactly one of 'chi1' or 'zeta' is required")

    kwargs: dict[str, object] = {"chi1": None, "zeta": None}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                kwargs[_DB_KEYS[key]] = db_to_linear(float(value))
        except ValueError:
            raise ConfigError(f"{source}: malformed value for {key!r}: {value!r}") from None
    return SystemConfig(**kwargs)


def load_config(path: str | Path) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def format_config(cfg: SystemConfig) -> str:
    """Inverse of :func:`parse_config` (dB keys written with full precision)."""
    lines = [
        f"mp={cfg.mp}",
        f"m1={cfg.m1}",
        f"m2={cfg.m2}",
        f"alpha={cfg.alpha!r}",
        f"sigma_s_db={linear_to_db(cfg.sigma_s2)!r}",
        f"sigma_n1_db={linear_to_db(cfg.sigma_n1_2)!r}",
        f"sigma_n2_db={linear_to_db(cfg.sigma_n2_2)!r}",
        f"n_frame={cfg.n_frame}",
        f"power_total={cfg.power_total!r}",
    ]
    if cfg.chi1 is not None:
        lines.append(f"chi1={cfg.chi1!r}")
    else:
        lines.append(f"zeta={cfg.zeta!r}")
    lines += [f"trials={cfg.trials}", f"seed={cfg.seed}"]
    return "\n".join(lines) + "\n"
