"""Run configuration: JSON key-value files with per-case defaults.

A config is a flat JSON object. Only the keys below are accepted; omitted
keys take the defaults of the named case. Rendering emits every key with
shortest round-trip float text, so parse(render(cfg)) == cfg and identical
configs serialize byte-identically.
"""

import dataclasses
import json
import math

CASES = (
    "patch_vertical",
    "patch_horizontal",
    "patch_inclined",
    "transport_hole",
    "reaction_uniform",
    "reaction_explicit",
    "custom",
)


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    case: str
    seed: int = 0
    hidden_layers: tuple = (30, 30, 30)
    epochs: int = 5000
    learning_rate: float = 1.0e-3
    lr_decay: float = 0.5
    lr_stages: int = 5
    weight_pde: float = 1.0
    weight_bc: float = 10.0
    k1: float = 1.0
    k2: float = 10.0
    alpha_l: float = 1.0
    alpha_t: float = 1.0e-5
    d_m: float = 1.0e-6
    theta: float = math.pi / 6.0
    lam1: float = 1.0e4
    lam2: float = 1.0
    n_a: float = 1.0
    n_b: float = 2.0
    n_c: float = 1.0
    grid_n: int = 100
    oracle_n: int = 129
    out_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        _validate(self)


# (field, required python type, constraint, description of the constraint)
_INT_KEYS = ("seed", "epochs", "lr_stages", "grid_n", "oracle_n")
_FLOAT_KEYS = (
    "learning_rate",
    "lr_decay",
    "weight_pde",
    "weight_bc",
    "k1",
    "k2",
    "alpha_l",
    "alpha_t",
    "d_m",
    "theta",
    "lam1",
    "lam2",
    "n_a",
    "n_b",
    "n_c",
)
_STR_KEYS = ("case", "out_dir")
_ALL_KEYS = set(_INT_KEYS) | set(_FLOAT_KEYS) | set(_STR_KEYS) | {"hidden_layers"}


def _fail(key: str, message: str):
    raise ConfigError(f"config key '{key}': {message}")


def _validate(cfg: "RunConfig") -> None:
    if not cfg.case:
        _fail("case", "must not be empty")
    if cfg.case not in CASES:
        _fail("case", f"unknown case {cfg.case!r}; expected one of {', '.join(CASES)}")
    if cfg.seed < 0:
        _fail("seed", "must be >= 0")
    if not cfg.hidden_layers or any(w < 1 for w in cfg.hidden_layers):
        _fail("hidden_layers", "need a non-empty list of positive widths")
    if cfg.epochs < 1:
        _fail("epochs", "must be >= 1")
    if cfg.learning_rate <= 0.0:
        _fail("learning_rate", "must be > 0")
    if not 0.0 < cfg.lr_decay <= 1.0:
        _fail("lr_decay", "must lie in (0, 1]")
    if cfg.lr_stages < 1:
        _fail("lr_stages", "must be >= 1")
    if cfg.weight_pde <= 0.0 or cfg.weight_bc <= 0.0:
        _fail("weight_pde/weight_bc", "loss weights must be > 0")
    if cfg.k1 <= 0.0 or cfg.k2 <= 0.0:
        _fail("k1/k2", "permeabilities must be > 0")
    if cfg.alpha_t < 0.0 or cfg.alpha_l < cfg.alpha_t:
        _fail("alpha_l/alpha_t", "need alpha_l >= alpha_t >= 0")
    if cfg.d_m < 0.0:
        _fail("d_m", "must be >= 0")
    if cfg.lam2 <= 0.0 or cfg.lam1 < cfg.lam2:
        _fail("lam1/lam2", "need lam1 >= lam2 > 0")
    if cfg.n_a <= 0.0 or cfg.n_b <= 0.0 or cfg.n_c <= 0.0:
        _fail("n_a/n_b/n_c", "stoichiometric coefficients must be > 0")
    if cfg.grid_n < 4:
        _fail("grid_n", "must be >= 4")
    if cfg.oracle_n < 17:
        _fail("oracle_n", "must be >= 17")
    if not cfg.out_dir:
        _fail("out_dir", "must not be empty")


_CASE_DEFAULTS = {
    "patch_vertical": dict(
        hidden_layers=(30, 30, 30), epochs=8000, learning_rate=2.0e-3, grid_n=100, oracle_n=129
    ),
    "patch_horizontal": dict(
        hidden_layers=(30, 30, 30), epochs=8000, learning_rate=2.0e-3, grid_n=100, oracle_n=129
    ),
    "patch_inclined": dict(
        hidden_layers=(40, 40, 40), epochs=7000, learning_rate=2.0e-3, grid_n=100, oracle_n=257
    ),
    "transport_hole": dict(
        hidden_layers=(30, 30, 30), epochs=6000, learning_rate=2.0e-3, grid_n=150, oracle_n=151
    ),
    "reaction_uniform": dict(hidden_layers=(30, 30, 30), epochs=4000, grid_n=100, oracle_n=129),
    "reaction_explicit": dict(hidden_layers=(30, 30, 30), epochs=4000, grid_n=100, oracle_n=129),
    "custom": dict(hidden_layers=(16, 16), epochs=200, grid_n=40, oracle_n=33),
}


def default_config(case: str) -> RunConfig:
    if case not in CASES:
        _fail("case", f"unknown case {case!r}; expected one of {', '.join(CASES)}")
    over = dict(_CASE_DEFAULTS[case])
    over["out_dir"] = f"out/{case}"
    return RunConfig(case=case, **over)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; omitted keys take case defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _ALL_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    case = raw.get("case")
    if case is None:
        _fail("case", "is required")
    if not isinstance(case, str):
        _fail("case", "must be a string")
    if not case:
        _fail("case", "must not be empty")
    if case not in CASES:
        _fail("case", f"unknown case {case!r}; expected one of {', '.join(CASES)}")

    merged = dataclasses.asdict(default_config(case))
    for key, value in raw.items():
        if key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                _fail(key, f"expected an integer, got {value!r}")
        elif key in _FLOAT_KEYS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                _fail(key, f"expected a number, got {value!r}")
            value = float(value)
        elif key in _STR_KEYS:
            if not isinstance(value, str):
                _fail(key, f"expected a string, got {value!r}")
        elif key == "hidden_layers":
            if (
                not isinstance(value, list)
                or not value
                or any(isinstance(w, bool) or not isinstance(w, int) for w in value)
            ):
                _fail(key, f"expected a non-empty list of integers, got {value!r}")
            value = tuple(value)
        merged[key] = value
    merged["hidden_layers"] = tuple(merged["hidden_layers"])
    return RunConfig(**merged)


def render_config(cfg: RunConfig) -> str:
    """Canonical JSON text (sorted keys); parse_config inverts it exactly."""
    data = dataclasses.asdict(cfg)
    data["hidden_layers"] = list(cfg.hidden_layers)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"
