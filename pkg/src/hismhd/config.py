"""Run configuration: flat key = value text files with '#' comments.

Unknown keys are errors; every physical constraint is validated with the
offending field named. Command-line flags override file values.
"""

from dataclasses import dataclass, fields

from .initdata import ParamsError, SimParams
from .integrator import IntegratorConfig


class ConfigError(ValueError):
    pass


_INT_KEYS = {"n", "seed", "scheme_order", "threads"}
_PARAM_KEYS = [
    "nu", "mu", "sigma", "kappa", "alpha", "m0", "m1", "m2",
    "delta", "alpha1", "alpha2", "seed", "small_budget",
]
_INTEGRATOR_KEYS = [
    "scheme_order", "dt_init", "dt_min", "dt_max", "tolerance",
    "cfl_safety", "t_end", "checkpoint_interval", "diagnostics_interval",
]


@dataclass
class RunConfig:
    n: int = 32
    box_length: float = 6.0
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 0.5
    kappa: float = 0.1
    alpha: float = 2.0
    m0: float = 1.0
    m1: float = 1.0
    m2: float = 1.0
    delta: float = 0.25
    alpha1: float = 1.0
    alpha2: float = 1.0
    seed: int = 0
    small_budget: float | None = None
    scheme_order: int = 3
    dt_init: float = 1e-2
    dt_min: float = 1e-8
    dt_max: float = 0.25
    tolerance: float = 1e-7
    cfl_safety: float = 0.3
    t_end: float = 1.0
    checkpoint_interval: float = 1.0
    diagnostics_interval: float = 0.1
    out_dir: str = "."
    threads: int = 1

    def sim_params(self) -> SimParams:
        try:
            return SimParams(**{k: getattr(self, k) for k in _PARAM_KEYS})
        except ParamsError as exc:
            raise ConfigError(str(exc)) from exc

    def integrator_config(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(**{k: getattr(self, k) for k in _INTEGRATOR_KEYS})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        if self.n < 8 or self.n & (self.n - 1) != 0:
            raise ConfigError(f"n: grid size must be a power of two >= 8, got {self.n}")
        if self.box_length <= 0:
            raise ConfigError(f"box_length: must be positive, got {self.box_length}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be at least 1, got {self.threads}")
        self.sim_params()
        self.integrator_config()
        return self

    def dump(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def parse_config_text(text, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        _assign(cfg, key, value, where=f"line {lineno}")
    cfg.validate()
    return cfg


def _assign(cfg, key, value, where=""):
    if key not in _FIELD_NAMES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    if key == "out_dir":
        setattr(cfg, key, value)
        return
    try:
        parsed = int(value) if key in _INT_KEYS else float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: {key}: cannot parse {value!r}") from exc
    setattr(cfg, key, parsed)


def load_config(path, overrides=None) -> RunConfig:
    with open(path) as fh:
        cfg = parse_config_text(fh.read())
    if overrides:
        for key, value in overrides.items():
            _assign(cfg, key, str(value), where="override")
        cfg.validate()
    return cfg
