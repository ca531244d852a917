"""Experiment configuration: parsing, validation and canonical serialization.

A config file holds ``key = value`` lines; ``#`` starts a comment.  Keys are
the :class:`ExperimentConfig` field names; calibration overrides use
``calib.<name> = value``.  Command-line flags override file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

from .calibration import DEFAULT, Calibration
from .errors import ConfigError

COMMANDS = (
    "kernel-dump",
    "survey-cancel",
    "sop",
    "moments",
    "bilinear",
    "trilinear",
    "holder",
    "nu",
    "goursat",
    "selftest",
    "acceptance",
)


def _int_list(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    kernel: Optional[str] = None
    q: Optional[int] = None
    schedule: Optional[tuple] = None
    a: int = 1
    b: int = 1
    c: int = 1
    l: int = 2
    m: int = 1
    d: int = 1
    n_ext: int = 1
    M: Optional[int] = None
    N: Optional[int] = None
    J: Optional[int] = None
    U: Optional[int] = None
    V: Optional[int] = None
    mexp: Optional[float] = None
    nexp: Optional[float] = None
    samples: int = 500
    seed: int = 0
    mode: Optional[str] = None
    kind: str = "I"
    coeffs: str = "ones"
    iters: int = 200
    conv: str = "direct"
    demo: str = "all"
    quick: bool = False
    out: Optional[str] = None
    format: str = "csv"
    workers: int = 1
    calib: tuple = ()  # sorted (name, value) overrides

    # -- derived -----------------------------------------------------------

    @property
    def calibration(self) -> Calibration:
        return DEFAULT.override(**dict(self.calib))

    def primes(self) -> tuple:
        if self.schedule:
            return tuple(self.schedule)
        if self.q is not None:
            return (self.q,)
        return ()

    # -- validation and serialization --------------------------------------

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", field="command")
        needs_kernel = {"kernel-dump", "survey-cancel", "sop", "moments", "bilinear", "trilinear", "holder"}
        if self.command in needs_kernel and not self.kernel:
            raise ConfigError("a kernel identifier is required", field="kernel")
        needs_q = needs_kernel | {"nu"}
        if self.command in needs_q and not self.primes():
            raise ConfigError("q or schedule is required", field="q")
        if self.format not in ("csv", "json", "binary"):
            raise ConfigError(f"unknown format {self.format!r}", field="format")
        if self.kind not in ("I", "II"):
            raise ConfigError("kind must be I or II", field="kind")
        if self.conv not in ("direct", "fft"):
            raise ConfigError("conv must be direct or fft", field="conv")
        if self.coeffs not in ("ones", "sign", "unit", "singular"):
            raise ConfigError(f"unknown coefficient generator {self.coeffs!r}", field="coeffs")
        modes = {"survey-cancel": (None, "sample", "exhaustive"), "bilinear": (None, "opnorm", "type1", "type2")}
        if self.mode not in modes.get(self.command, (None, self.mode)):
            raise ConfigError(f"mode {self.mode!r} is not valid for {self.command}", field="mode")
        for name in ("l", "m", "d", "n_ext", "samples", "iters", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", field=name)
        known = {f.name for f in fields(Calibration)}
        for name, _ in self.calib:
            if name not in known:
                raise ConfigError("unknown calibration constant", field=f"calib.{name}")
        return self

    def canonical(self) -> str:
        """One ``key = value`` line per non-default field, sorted by key."""
        lines = [f"command = {self.command}"]
        defaults = ExperimentConfig(command=self.command)
        for f in fields(self):
            if f.name in ("command", "calib"):
                continue
            val = getattr(self, f.name)
            if val == getattr(defaults, f.name):
                continue
            lines.append(f"{f.name} = {_fmt(val)}")
        for name, val in self.calib:
            lines.append(f"calib.{name} = {_fmt(val)}")
        return "\n".join([lines[0]] + sorted(lines[1:])) + "\n"


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ",".join(str(x) for x in val)
    return str(val)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(name: str, raw: str, line: Optional[int] = None):
    if name.startswith("calib."):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}", field=name, line=line) from None
    if name not in _FIELD_TYPES or name == "calib":
        raise ConfigError("unknown field", field=name, line=line)
    typ = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if name == "schedule":
            return _int_list(raw)
        if typ == "bool":
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        if "int" in typ:
            return int(raw)
        if "float" in typ:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {typ}", field=name, line=line) from None


def parse_text(text: str, command: Optional[str] = None) -> dict:
    """Parse ``key = value`` lines into a dict of converted values."""
    out: dict = {}
    calib: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        conv = _convert(key, val, lineno)
        if key.startswith("calib."):
            calib[key[len("calib."):]] = conv
        else:
            out[key] = conv
    if calib:
        out["calib"] = tuple(sorted(calib.items()))
    if command is not None:
        out.setdefault("command", command)
    return out


def from_text(text: str, command: Optional[str] = None) -> ExperimentConfig:
    values = parse_text(text, command)
    if "command" not in values:
        raise ConfigError("missing command", field="command")
    return ExperimentConfig(**values).validate()


def merge(base: dict, overrides: dict) -> ExperimentConfig:
    values = dict(base)
    calib = dict(values.pop("calib", ()))
    calib.update(dict(overrides.pop("calib", ())))
    values.update({k: v for k, v in overrides.items() if v is not None})
    if calib:
        values["calib"] = tuple(sorted(calib.items()))
    if "command" not in values:
        raise ConfigError("missing command", field="command")
    try:
        return ExperimentConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def replace(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return dataclasses.replace(cfg, **kw)
