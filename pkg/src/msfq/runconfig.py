"""Run-configuration files for the CLI.

One INI-style file per run with sections [model], [trigger], [simulation],
[sweep], [phase.N], [output]; keys mirror the library's field names. Unknown
sections or keys are hard errors so typos cannot silently change a run.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .engine import Estimator
from .errors import ConfigError
from .metastable import MsfMode, TriggerScenario
from .model import ModelConfig
from .scenario import Phase

_MODEL_KEYS = ("arrival_rate", "service_rate", "timeout", "retry_rate", "disable_retries")
_MODEL_REQUIRED = ("arrival_rate", "service_rate", "timeout")

_BOOL_STATES = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


@dataclass
class OutputOptions:
    directory: str | None = None
    prefix: str = ""


@dataclass
class SimulateRun:
    model: ModelConfig
    duration: float
    seed: int = 0
    estimator: Estimator = Estimator.SOJOURN_TIME
    state_cap: int = 500
    burn_in: float = 0.0
    trajectory_stride: int | None = None
    windows: int = 10
    growth_factor: float = 2.0
    workers: int = 1
    output: OutputOptions = field(default_factory=OutputOptions)


@dataclass
class TimelineRun:
    model: ModelConfig
    phases: list[Phase]
    seed: int = 0
    window_length: float = 10.0
    estimator: Estimator = Estimator.SOJOURN_TIME
    state_cap: int = 500
    output: OutputOptions = field(default_factory=OutputOptions)


@dataclass
class SweepRun:
    model: ModelConfig
    grid: list[ModelConfig]
    per_point_duration: float
    replications: int = 3
    seed: int = 0
    windows: int = 10
    growth_factor: float = 2.0
    burn_in: float = 0.1
    state_cap: int = 500
    workers: int = 1
    output: OutputOptions = field(default_factory=OutputOptions)


@dataclass
class MsfRun:
    scenario: TriggerScenario
    per_state_duration: float = 500.0
    trigger_replications: int = 200
    replications: int = 3
    mode: MsfMode = MsfMode.REPLICATION
    seed: int = 0
    windows: int = 10
    growth_factor: float = 2.0
    burn_in: float = 0.1
    state_cap: int = 500
    workers: int = 1
    output: OutputOptions = field(default_factory=OutputOptions)


def _read_file(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return parser


class _Section:
    """One section's keys with strict typing and unknown-key detection."""

    def __init__(self, name: str, raw: dict[str, str]):
        self.name = name
        self.raw = dict(raw)
        self.seen: set[str] = set()

    def _fetch(self, key, convert, default, required):
        if key not in self.raw:
            if required:
                raise ConfigError(f"[{self.name}] is missing required key '{key}'")
            return default
        self.seen.add(key)
        text = self.raw[key].strip()
        try:
            return convert(text)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{self.name}] key '{key}': cannot parse {text!r}") from exc

    def get_float(self, key, default=None, required=False):
        return self._fetch(key, float, default, required)

    def get_int(self, key, default=None, required=False):
        return self._fetch(key, lambda s: int(s, 10), default, required)

    def get_bool(self, key, default=None, required=False):
        return self._fetch(key, lambda s: _BOOL_STATES[s.lower()], default, required)

    def get_str(self, key, default=None, required=False):
        return self._fetch(key, str, default, required)

    def get_float_list(self, key, default=None, required=False):
        def conv(text: str) -> list[float]:
            parts = [p for chunk in text.split(",") for p in chunk.split()]
            if not parts:
                raise ValueError("empty list")
            return [float(p) for p in parts]

        return self._fetch(key, conv, default, required)

    def finish(self) -> None:
        unknown = set(self.raw) - self.seen
        if unknown:
            raise ConfigError(
                f"[{self.name}] has unknown key(s): {', '.join(sorted(unknown))}"
            )


class _File:
    def __init__(self, path: str | Path, allowed_sections: set[str], phase_sections: bool = False):
        parser = _read_file(path)
        self.sections: dict[str, _Section] = {}
        for name in parser.sections():
            ok = name in allowed_sections or (phase_sections and name.startswith("phase."))
            if not ok:
                raise ConfigError(f"unknown section [{name}] in {path}")
            self.sections[name] = _Section(name, dict(parser.items(name)))

    def section(self, name: str, required: bool = False) -> _Section:
        if name not in self.sections:
            if required:
                raise ConfigError(f"missing required section [{name}]")
            self.sections[name] = _Section(name, {})
        return self.sections[name]

    def phase_names(self) -> list[str]:
        names = [n for n in self.sections if n.startswith("phase.")]
        indices = []
        for n in names:
            suffix = n.split(".", 1)[1]
            try:
                indices.append(int(suffix))
            except ValueError:
                raise ConfigError(f"phase section [{n}] must be named phase.<number>")
        indices.sort()
        if indices != list(range(1, len(indices) + 1)):
            raise ConfigError("phase sections must be numbered contiguously from phase.1")
        return [f"phase.{k}" for k in indices]

    def finish(self) -> None:
        for section in self.sections.values():
            section.finish()


def _model_raw(section: _Section, required: bool = True) -> dict:
    raw = {
        "arrival_rate": section.get_float("arrival_rate", required=required),
        "service_rate": section.get_float("service_rate", required=required),
        "timeout": section.get_float("timeout", required=required),
        "retry_rate": section.get_float("retry_rate"),
        "disable_retries": section.get_bool("disable_retries", default=False),
    }
    return raw


def _build_model(raw: dict) -> ModelConfig:
    return ModelConfig(
        arrival_rate=raw["arrival_rate"],
        service_rate=raw["service_rate"],
        timeout=raw["timeout"],
        retry_rate=raw["retry_rate"],
        disable_retries=raw["disable_retries"],
    )


def _estimator(section: _Section) -> Estimator:
    text = section.get_str("estimator", default="sojourn")
    try:
        return Estimator(text)
    except ValueError:
        raise ConfigError(
            f"[{section.name}] estimator must be 'sojourn' or 'visit', got {text!r}"
        )


def _output(f: _File) -> OutputOptions:
    section = f.section("output")
    return OutputOptions(
        directory=section.get_str("directory"),
        prefix=section.get_str("prefix", default=""),
    )


def parse_simulate(path: str | Path) -> SimulateRun:
    f = _File(path, {"model", "simulation", "output"})
    model = _build_model(_model_raw(f.section("model", required=True)))
    sim = f.section("simulation")
    run = SimulateRun(
        model=model,
        duration=sim.get_float("duration", required=True),
        seed=sim.get_int("seed", default=0),
        estimator=_estimator(sim),
        state_cap=sim.get_int("state_cap", default=500),
        burn_in=sim.get_float("burn_in", default=0.0),
        trajectory_stride=sim.get_int("trajectory_stride"),
        windows=sim.get_int("windows", default=10),
        growth_factor=sim.get_float("growth_factor", default=2.0),
        workers=sim.get_int("workers", default=1),
        output=_output(f),
    )
    f.finish()
    return run


def parse_timeline(path: str | Path) -> TimelineRun:
    f = _File(path, {"model", "simulation", "output"}, phase_sections=True)
    base_raw = _model_raw(f.section("model", required=True))
    phase_names = f.phase_names()
    if not phase_names:
        raise ConfigError("timeline config needs at least one [phase.N] section")
    phases = []
    for name in phase_names:
        section = f.section(name)
        raw = dict(base_raw)
        override = _model_raw(section, required=False)
        for key in _MODEL_KEYS:
            if key in section.seen:
                raw[key] = override[key]
        duration = section.get_float("duration", required=True)
        phases.append(Phase(config=_build_model(raw), duration=duration))
    sim = f.section("simulation")
    run = TimelineRun(
        model=_build_model(base_raw),
        phases=phases,
        seed=sim.get_int("seed", default=0),
        window_length=sim.get_float("window_length", default=10.0),
        estimator=_estimator(sim),
        state_cap=sim.get_int("state_cap", default=500),
        output=_output(f),
    )
    f.finish()
    return run


def parse_sweep(path: str | Path) -> SweepRun:
    f = _File(path, {"model", "sweep", "simulation", "output"})
    base_raw = _model_raw(f.section("model", required=True))
    sweep = f.section("sweep", required=True)
    arrival_rates = sweep.get_float_list("arrival_rates", required=True)
    service_rates = sweep.get_float_list("service_rates", default=[base_raw["service_rate"]])
    grid = []
    for mu in service_rates:
        for lam in arrival_rates:
            raw = dict(base_raw)
            raw["arrival_rate"] = lam
            raw["service_rate"] = mu
            grid.append(_build_model(raw))
    sim = f.section("simulation")
    run = SweepRun(
        model=_build_model(base_raw),
        grid=grid,
        per_point_duration=sim.get_float("per_point_duration", required=True),
        replications=sim.get_int("replications", default=3),
        seed=sim.get_int("seed", default=0),
        windows=sim.get_int("windows", default=10),
        growth_factor=sim.get_float("growth_factor", default=2.0),
        burn_in=sim.get_float("burn_in", default=0.1),
        state_cap=sim.get_int("state_cap", default=500),
        workers=sim.get_int("workers", default=1),
        output=_output(f),
    )
    f.finish()
    return run


def parse_msf(path: str | Path) -> MsfRun:
    f = _File(path, {"model", "trigger", "simulation", "output"})
    base_raw = _model_raw(f.section("model", required=True))
    trig_section = f.section("trigger", required=True)
    trig_raw = dict(base_raw)
    override = _model_raw(trig_section, required=False)
    for key in _MODEL_KEYS:
        if key in trig_section.seen:
            trig_raw[key] = override[key]
    trigger_duration = trig_section.get_float("duration", required=True)
    scenario = TriggerScenario(
        base=_build_model(base_raw),
        trigger=_build_model(trig_raw),
        trigger_duration=trigger_duration,
    )
    sim = f.section("simulation")
    mode_text = sim.get_str("mode", default="replication")
    try:
        mode = MsfMode(mode_text)
    except ValueError:
        raise ConfigError(
            f"[simulation] mode must be 'replication' or 'paper-literal', got {mode_text!r}"
        )
    run = MsfRun(
        scenario=scenario,
        per_state_duration=sim.get_float("per_state_duration", default=500.0),
        trigger_replications=sim.get_int("trigger_replications", default=200),
        replications=sim.get_int("replications", default=3),
        mode=mode,
        seed=sim.get_int("seed", default=0),
        windows=sim.get_int("windows", default=10),
        growth_factor=sim.get_float("growth_factor", default=2.0),
        burn_in=sim.get_float("burn_in", default=0.1),
        state_cap=sim.get_int("state_cap", default=500),
        workers=sim.get_int("workers", default=1),
        output=_output(f),
    )
    f.finish()
    return run
