"""Scenario configuration: dataclasses, a line-oriented ``key = value`` format, presets.

File format (``#`` starts a comment, blank lines ignored)::

    num_steps = 600
    meas_noise_std = 0.75
    sensor.2.detection_prob = 0.8        # per-sensor override of a nominal value
    disturbance = 1 100 200 noise_scale 4   # sensor start end kind value (repeatable)

Keys are listed in :data:`SCALAR_KEYS`; anything else is rejected with the
offending line number.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

DISTURBANCE_KINDS = ("noise_scale", "clutter_scale", "pd_set")
REFERENCE_KINDS = ("nn", "closed_form")
FOV_ANCHORS = ("ego", "fixed")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class Disturbance:
    sensor_id: int
    start: int
    end: int  # inclusive
    kind: str
    value: float

    def active(self, step: int) -> bool:
        return self.start <= step <= self.end


@dataclass(frozen=True)
class SensorParams:
    """Nominal parameters of one sensor; the tracker always assumes these."""

    detection_prob: float = 0.9
    clutter_mean: float = 4.0
    meas_noise_std: float = 0.75


@dataclass(frozen=True)
class SAParams:
    """Self-assessment settings shared by every sensor.

    ``n_st`` short-term window length, ``p_td`` trust-discount probability,
    ``alpha`` confidence level of the conflict threshold, ``bins`` number of
    equiprobable chi-square bins, ``gate_prob`` association gate,
    ``nis_window`` length of the time-average NIS baseline, ``reference``
    either ``nn`` (gated nearest-neighbour outcome weights) or ``closed_form``
    (closed-form clutter-density weights).  Defaults were picked with
    ``scripts/sweep_sa_params.py``.
    """

    n_st: int = 30
    p_td: float = 0.9995
    alpha: float = 0.8
    bins: int = 3
    gate_prob: float = 0.999
    nis_window: int | None = 100  # None -> n_st
    reference: str = "nn"

    @property
    def effective_nis_window(self) -> int:
        return self.n_st if self.nis_window is None else self.nis_window


@dataclass(frozen=True)
class ScenarioConfig:
    num_steps: int = 600
    dt: float = 1.0
    num_sensors: int = 3
    sensor: SensorParams = field(default_factory=SensorParams)
    sensor_overrides: tuple[tuple[int, str, float], ...] = ()
    accel_std: float = 0.2
    initial_speed: tuple[float, float] = (15.0, 0.0)
    initial_speed_std: float = 1.0
    fov: tuple[float, float, float, float] = (-100.0, 100.0, -50.0, 50.0)
    fov_anchor: str = "ego"
    disturbances: tuple[Disturbance, ...] = ()
    mc_runs: int = 200
    seed: int = 20211
    divergence_trace: float = 1.0e4
    divergence_misses: int = 20
    sa: SAParams = field(default_factory=SAParams)

    def __post_init__(self):
        validate(self)

    @property
    def fov_volume(self) -> float:
        x0, x1, y0, y1 = self.fov
        return (x1 - x0) * (y1 - y0)

    def sensor_params(self, sensor_id: int) -> SensorParams:
        params = self.sensor
        for sid, name, value in self.sensor_overrides:
            if sid == sensor_id:
                params = dataclasses.replace(params, **{name: value})
        return params

    def true_params(self, sensor_id: int, step: int) -> SensorParams:
        """Ground-truth parameters of a sensor at a step, disturbances applied."""
        p = self.sensor_params(sensor_id)
        pd, lam, std = p.detection_prob, p.clutter_mean, p.meas_noise_std
        for d in self.disturbances:
            if d.sensor_id != sensor_id or not d.active(step):
                continue
            if d.kind == "noise_scale":
                std *= d.value
            elif d.kind == "clutter_scale":
                lam *= d.value
            else:
                pd = d.value
        return SensorParams(pd, lam, std)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_sa(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, sa=dataclasses.replace(self.sa, **changes))


def validate(cfg: ScenarioConfig) -> None:
    if cfg.num_steps < 1:
        raise ConfigError("num_steps must be >= 1", key="num_steps")
    if not cfg.dt > 0:
        raise ConfigError("dt must be positive", key="dt")
    if cfg.num_sensors < 1:
        raise ConfigError("num_sensors must be >= 1", key="num_sensors")
    if cfg.mc_runs < 1:
        raise ConfigError("mc_runs must be >= 1", key="mc_runs")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
    x0, x1, y0, y1 = cfg.fov
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("fov must be xmin xmax ymin ymax with positive extent", key="fov")
    if cfg.fov_anchor not in FOV_ANCHORS:
        raise ConfigError(f"fov_anchor must be one of {FOV_ANCHORS}", key="fov_anchor")
    if cfg.accel_std < 0 or cfg.initial_speed_std < 0:
        raise ConfigError("standard deviations must be non-negative", key="accel_std")
    for sid in range(1, cfg.num_sensors + 1):
        _check_sensor(cfg.sensor_params(sid), sid)
    for sid, name, _ in cfg.sensor_overrides:
        if not 1 <= sid <= cfg.num_sensors:
            raise ConfigError(f"sensor {sid} does not exist", key=f"sensor.{sid}.{name}")
    for d in cfg.disturbances:
        if not 1 <= d.sensor_id <= cfg.num_sensors:
            raise ConfigError(f"disturbance refers to unknown sensor {d.sensor_id}", key="disturbance")
        if not 0 <= d.start <= d.end < cfg.num_steps:
            raise ConfigError(f"disturbance interval [{d.start}, {d.end}] outside [0, {cfg.num_steps})", key="disturbance")
        if d.kind not in DISTURBANCE_KINDS:
            raise ConfigError(f"unknown disturbance kind {d.kind!r}", key="disturbance")
        if d.kind == "pd_set" and not 0.0 <= d.value <= 1.0:
            raise ConfigError(f"pd_set value {d.value!r} outside [0, 1]", key="disturbance")
        if d.kind != "pd_set" and not d.value > 0.0:
            raise ConfigError(f"{d.kind} value {d.value!r} must be positive", key="disturbance")
    sa = cfg.sa
    if sa.n_st < 1:
        raise ConfigError("n_st must be >= 1", key="n_st")
    if not 0.0 <= sa.p_td <= 1.0:
        raise ConfigError("p_td must lie in [0, 1]", key="p_td")
    if not 0.0 < sa.alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)", key="alpha")
    if sa.bins < 2:
        raise ConfigError("bins must be >= 2", key="bins")
    if not 0.0 < sa.gate_prob < 1.0:
        raise ConfigError("gate_prob must lie in (0, 1)", key="gate_prob")
    if sa.nis_window is not None and sa.nis_window < 1:
        raise ConfigError("nis_window must be >= 1", key="nis_window")
    if sa.reference not in REFERENCE_KINDS:
        raise ConfigError(f"reference must be one of {REFERENCE_KINDS}", key="reference")


def _check_sensor(p: SensorParams, sid: int) -> None:
    if not 0.0 <= p.detection_prob <= 1.0:
        raise ConfigError(f"sensor {sid}: detection_prob outside [0, 1]", key="detection_prob")
    if not p.clutter_mean > 0.0:
        raise ConfigError(f"sensor {sid}: clutter_mean must be positive", key="clutter_mean")
    if not p.meas_noise_std > 0.0:
        raise ConfigError(f"sensor {sid}: meas_noise_std must be positive", key="meas_noise_std")


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _floats(n: int):
    def parse(text: str) -> tuple[float, ...]:
        parts = text.split()
        if len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {len(parts)}")
        return tuple(float(p) for p in parts)

    return parse


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "") else _int(text)


# key -> (section, field, parser)
SCALAR_KEYS = {
    "num_steps": (None, "num_steps", _int),
    "dt": (None, "dt", float),
    "num_sensors": (None, "num_sensors", _int),
    "accel_std": (None, "accel_std", float),
    "initial_speed": (None, "initial_speed", _floats(2)),
    "initial_speed_std": (None, "initial_speed_std", float),
    "fov": (None, "fov", _floats(4)),
    "fov_anchor": (None, "fov_anchor", str),
    "mc_runs": (None, "mc_runs", _int),
    "seed": (None, "seed", _int),
    "divergence_trace": (None, "divergence_trace", float),
    "divergence_misses": (None, "divergence_misses", _int),
    "detection_prob": ("sensor", "detection_prob", float),
    "clutter_mean": ("sensor", "clutter_mean", float),
    "meas_noise_std": ("sensor", "meas_noise_std", float),
    "n_st": ("sa", "n_st", _int),
    "p_td": ("sa", "p_td", float),
    "alpha": ("sa", "alpha", float),
    "bins": ("sa", "bins", _int),
    "gate_prob": ("sa", "gate_prob", float),
    "nis_window": ("sa", "nis_window", _opt_int),
    "reference": ("sa", "reference", str),
}
SENSOR_FIELDS = ("detection_prob", "clutter_mean", "meas_noise_std")


def _parse_disturbance(text: str) -> Disturbance:
    parts = text.split()
    if len(parts) != 5:
        raise ValueError("expected: <sensor> <start> <end> <kind> <value>")
    sid, start, end, kind, value = parts
    if kind not in DISTURBANCE_KINDS:
        raise ValueError(f"unknown disturbance kind {kind!r}, expected one of {DISTURBANCE_KINDS}")
    v = float(value)
    if kind == "pd_set" and not 0.0 <= v <= 1.0:
        raise ValueError(f"pd_set value {v!r} outside [0, 1]")
    if kind != "pd_set" and not v > 0.0:
        raise ValueError(f"{kind} value {v!r} must be positive")
    return Disturbance(_int(sid), _int(start), _int(end), kind, v)


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    top: dict = {}
    sensor: dict = {}
    sa: dict = {}
    overrides: list[tuple[int, str, float]] = []
    disturbances: list[Disturbance] = []
    preset = None
    key_lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key_lines[key] = lineno
        try:
            if key == "preset":
                if preset is not None or top or sensor or sa or overrides or disturbances:
                    raise ValueError("preset must be the first setting and appear once")
                preset = value
                base = get_preset(value)
            elif key == "disturbance":
                disturbances.append(_parse_disturbance(value))
            elif key.startswith("sensor."):
                _, sid, name = (key.split(".") + ["", ""])[:3]
                if name not in SENSOR_FIELDS or not sid.isdigit():
                    raise KeyError(key)
                overrides.append((int(sid), name, float(value)))
            elif key in SCALAR_KEYS:
                section, name, parse = SCALAR_KEYS[key]
                target = {None: top, "sensor": sensor, "sa": sa}[section]
                if name in target:
                    raise ValueError("duplicate key")
                target[name] = parse(value)
            else:
                raise KeyError(key)
        except KeyError:
            raise ConfigError("unknown key", line=lineno, key=key) from None
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lineno, key=key) from None
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, key=key) from None

    fields_ = {} if base is None else {f.name: getattr(base, f.name) for f in dataclasses.fields(ScenarioConfig)}
    base_sensor = fields_.get("sensor", SensorParams())
    base_sa = fields_.get("sa", SAParams())
    fields_.update(top)
    fields_["sensor"] = dataclasses.replace(base_sensor, **sensor)
    fields_["sa"] = dataclasses.replace(base_sa, **sa)
    if overrides:
        fields_["sensor_overrides"] = tuple(fields_.get("sensor_overrides", ())) + tuple(overrides)
    if disturbances:
        fields_["disturbances"] = tuple(fields_.get("disturbances", ())) + tuple(disturbances)
    try:
        return ScenarioConfig(**fields_)
    except ConfigError as exc:
        if exc.line is None and exc.key in key_lines:
            raise ConfigError(str(exc).split(": ", 1)[-1], line=key_lines[exc.key], key=exc.key) from None
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path: str | Path) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text())


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ScenarioConfig, notes: Iterable[str] = ()) -> str:
    """Full effective configuration in the parseable format."""
    lines = [f"# {n}" for n in notes]
    for key, (section, name, _) in SCALAR_KEYS.items():
        obj = cfg if section is None else getattr(cfg, section)
        lines.append(f"{key} = {_fmt(getattr(obj, name))}")
    for sid, name, value in cfg.sensor_overrides:
        lines.append(f"sensor.{sid}.{name} = {_fmt(value)}")
    for d in cfg.disturbances:
        lines.append(f"disturbance = {d.sensor_id} {d.start} {d.end} {d.kind} {_fmt(d.value)}")
    return "\n".join(lines) + "\n"


def paper_scenario() -> ScenarioConfig:
    """Three sensors; sensor 1 is disturbed in noise, clutter rate and detection probability."""
    return ScenarioConfig(
        disturbances=(
            Disturbance(1, 100, 200, "noise_scale", 4.0),
            Disturbance(1, 300, 350, "clutter_scale", 0.5),
            Disturbance(1, 450, 500, "pd_set", 0.6),
        ),
        mc_runs=200,
    )


PRESETS = {"paper_scenario": paper_scenario, "nominal": ScenarioConfig}

PRESET_NOTES = {
    "paper_scenario": (
        "disturbance schedule, sigma_w, clutter mean, p_D and 200 runs follow the published experiment;",
        "trajectory, FOV, sampling period, step count and SA parameters are choices of this package.",
    ),
}


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
