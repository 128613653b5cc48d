"""Plain ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored.  ``alpha`` and ``beta`` take the
literal ``inf``.  Lists are comma separated.  :func:`format_config` writes
the canonical form, which parses back to the same config and formats to the
same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .ensemble import ExperimentConfig, ScheduleUnit, StopKind, StopRule
from .errors import ConfigError, InvalidParameterError
from .exchange import InitialWealth, ModelParams, QssConfig
from .rng import MAX_SEED

REQUIRED = ("n_traders", "alpha", "beta")


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _real(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None
    if math.isnan(v) or math.isinf(v):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _exponent(text: str) -> float:
    if text == "inf":
        return math.inf
    v = _real(text)
    if v < 0:
        raise ValueError(f"exponent must be >= 0 or inf, got {text}")
    return v


def _optional(parse):
    return lambda t: None if t == "none" else parse(t)


def _list(parse):
    return lambda t: tuple(parse(p.strip()) for p in t.split(",")) if t.strip() else ()


def _pair(t: str) -> tuple[float, float]:
    v = _list(_real)(t)
    if len(v) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {t!r}")
    return v


def _choice(enum_cls):
    def parse(t):
        try:
            return enum_cls(t)
        except ValueError:
            names = ", ".join(e.value for e in enum_cls)
            raise ValueError(f"expected one of {names}, got {t!r}") from None
    return parse


def fmt_real(v: float) -> str:
    if math.isinf(v):
        return "inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


@dataclass(frozen=True)
class _Key:
    parse: Callable
    default: object = None


KEYS: dict[str, _Key] = {
    "n_traders": _Key(_int),
    "alpha": _Key(_exponent),
    "beta": _Key(_exponent),
    "initial_wealth": _Key(_choice(InitialWealth), InitialWealth.EQUAL),
    "mean_wealth": _Key(_real, 1.0),
    "fixed_lambda": _Key(_optional(_real), None),
    "qss_window": _Key(_int, 100),
    "qss_rel_tol": _Key(_real, 1e-3),
    "qss_stride": _Key(_optional(_int), None),
    "qss_stride_per_trader": _Key(_real, 10.0),
    "qss_max_trades": _Key(_int, 2_000_000_000),
    "n_lambda_sets": _Key(_int, 1),
    "networks_per_set": _Key(_int, 1),
    "stop_rule": _Key(_choice(StopKind), StopKind.MEAN_DEGREE),
    "target_degree": _Key(_optional(_real), 1.0),
    "checkpoints": _Key(_list(_real), ()),
    "checkpoint_unit": _Key(_choice(ScheduleUnit), ScheduleUnit.RHO),
    "master_seed": _Key(_int, 0),
    "bins_per_decade": _Key(_int, 10),
    "network_gap": _Key(_real, 0.0),
    "max_growth_trades": _Key(_int, 10**12),
    "sizes": _Key(_list(_int), ()),
    "alphas": _Key(_list(_exponent), ()),
    "eta_range": _Key(_pair, (0.5, 3.0)),
    "zeta_range": _Key(_pair, (0.2, 1.5)),
}


def _split(line: str, where: str):
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    if "=" not in body:
        raise ConfigError(f"{where}expected 'key = value', got {body!r}")
    key, value = (p.strip() for p in body.split("=", 1))
    if key not in KEYS:
        raise ConfigError(f"{where}unknown key {key!r}")
    return key, value


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    """Validated config from file text plus ``key=value`` overrides applied last."""
    raw: dict[str, tuple[str, int | str]] = {}
    for no, line in enumerate(text.splitlines(), start=1):
        kv = _split(line, f"line {no}: ")
        if kv is None:
            continue
        if kv[0] in raw:
            raise ConfigError(f"duplicate key {kv[0]!r} (first on line {raw[kv[0]][1]})", no)
        raw[kv[0]] = (kv[1], no)
    for item in overrides:
        kv = _split(item, f"override {item!r}: ")
        if kv is None:
            raise ConfigError(f"empty override {item!r}")
        raw[kv[0]] = (kv[1], item)
    values = {}
    for key, (value, no) in raw.items():
        try:
            values[key] = KEYS[key].parse(value)
        except ValueError as exc:
            raise _located(f"{key}: {exc}", no) from None
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    v = {k: values.get(k, spec.default) for k, spec in KEYS.items()}
    try:
        return _build(v)
    except InvalidParameterError as exc:
        key = _blame(str(exc), raw)
        raise _located(str(exc), raw[key][1] if key else None) from None


def _located(message: str, source) -> ConfigError:
    # source is a line number or the override text that set the value
    if isinstance(source, str):
        return ConfigError(f"override {source!r}: {message}")
    return ConfigError(message, source)


def _blame(message: str, raw) -> str | None:
    for key in raw:
        if key in message:
            return key
    return None


def _build(v) -> ExperimentConfig:
    if v["n_traders"] < 2:
        raise InvalidParameterError(f"n_traders must be >= 2, got {v['n_traders']}")
    if not 0 <= v["master_seed"] <= MAX_SEED:
        raise InvalidParameterError("master_seed must fit in 64 unsigned bits")
    model = ModelParams(v["n_traders"], v["alpha"], v["beta"], v["initial_wealth"], v["mean_wealth"])
    qss = QssConfig(v["qss_window"], v["qss_rel_tol"], v["qss_stride"], v["qss_max_trades"],
                    v["qss_stride_per_trader"])
    kind = v["stop_rule"]
    target = v["target_degree"] if kind is StopKind.MEAN_DEGREE else None
    return ExperimentConfig(
        model=model, qss=qss, n_lambda_sets=v["n_lambda_sets"],
        networks_per_set=v["networks_per_set"], stop_rule=StopRule(kind, target),
        snapshot_schedule=v["checkpoints"], schedule_unit=v["checkpoint_unit"],
        master_seed=v["master_seed"], bins_per_decade=v["bins_per_decade"],
        fixed_lambda=v["fixed_lambda"], network_gap=v["network_gap"],
        max_growth_trades=v["max_growth_trades"], sweep_sizes=v["sizes"],
        sweep_alphas=v["alphas"], eta_range=v["eta_range"], zeta_range=v["zeta_range"])


def config_values(cfg: ExperimentConfig) -> dict[str, str]:
    m, q = cfg.model, cfg.qss
    lst = lambda vals: ", ".join(fmt_real(x) for x in vals)
    return {
        "n_traders": str(m.n_traders),
        "alpha": fmt_real(m.alpha),
        "beta": fmt_real(m.beta),
        "initial_wealth": m.initial_wealth.value,
        "mean_wealth": fmt_real(m.mean_wealth),
        "fixed_lambda": "none" if cfg.fixed_lambda is None else fmt_real(cfg.fixed_lambda),
        "qss_window": str(q.window),
        "qss_rel_tol": fmt_real(q.rel_tol),
        "qss_stride": "none" if q.sample_stride is None else str(q.sample_stride),
        "qss_stride_per_trader": fmt_real(q.stride_per_trader),
        "qss_max_trades": str(q.max_trades),
        "n_lambda_sets": str(cfg.n_lambda_sets),
        "networks_per_set": str(cfg.networks_per_set),
        "stop_rule": cfg.stop_rule.kind.value,
        "target_degree": "none" if cfg.stop_rule.target is None else fmt_real(cfg.stop_rule.target),
        "checkpoints": lst(cfg.snapshot_schedule),
        "checkpoint_unit": cfg.schedule_unit.value,
        "master_seed": str(cfg.master_seed),
        "bins_per_decade": str(cfg.bins_per_decade),
        "network_gap": fmt_real(cfg.network_gap),
        "max_growth_trades": str(cfg.max_growth_trades),
        "sizes": ", ".join(str(s) for s in cfg.sweep_sizes),
        "alphas": lst(cfg.sweep_alphas),
        "eta_range": lst(cfg.eta_range),
        "zeta_range": lst(cfg.zeta_range),
    }


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text: every key, fixed order, one per line."""
    return "".join(f"{k} = {v}".rstrip() + "\n" for k, v in config_values(cfg).items())


def load_config(path, overrides=()) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
