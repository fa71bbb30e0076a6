"""Run configuration: a JSON object describing one computation."""

import json
from dataclasses import dataclass, field

from . import expr as ex
from .averaging import TimelikeField
from .lagrangians import Lagrangian, MODES, LORENTZIAN, PRESETS, preset
from .quadrature import QuadratureConfig


class ConfigError(ValueError):
    pass


DEFAULT_TOLERANCES = {
    "structure": 1e-10,
    "causal": 1e-12,
    "timelike": 1e-12,
    "degenerate": 1e-12,
}

_KEYS = {
    "n", "mode", "lagrangian", "timelike_field", "points", "direction",
    "quadrature", "tolerances", "output", "verify_resolution", "reference_field",
}


@dataclass
class RunConfig:
    n: int
    mode: str
    lagrangian: dict
    timelike_field: list
    points: list
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "table"
    direction: list = None
    verify_resolution: int = 8
    reference_field: list = None  # back-transform field V; None means V = X

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            n = int(data["n"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("config needs an integer dimension 'n'") from None
        if n < 2:
            raise ConfigError("dimension n must be at least 2")

        lag = data.get("lagrangian")
        if not isinstance(lag, dict) or (("preset" in lag) == ("expression" in lag)):
            raise ConfigError("'lagrangian' needs exactly one of 'preset' or 'expression'")
        if "preset" in lag and lag["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {lag['preset']!r}; choose from {sorted(PRESETS)}")
        mode = data.get("mode")
        if mode is None:
            mode = "positive" if lag.get("preset") == "randers-positive" else LORENTZIAN
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        lag = {"preset": lag["preset"], "params": dict(lag.get("params") or {})} if "preset" in lag \
            else {"expression": str(lag["expression"])}

        field_src = data.get("timelike_field") or ["1"] + ["0"] * (n - 1)
        if not isinstance(field_src, list) or len(field_src) != n:
            raise ConfigError(f"'timelike_field' must list {n} component expressions")
        points = data.get("points")
        if not isinstance(points, list) or not points:
            raise ConfigError("'points' must be a non-empty list of base points")
        try:
            points = [[float(v) for v in p] for p in points]
        except (TypeError, ValueError):
            raise ConfigError("base points must be lists of numbers") from None
        if any(len(p) != n for p in points):
            raise ConfigError(f"every base point needs {n} coordinates")
        direction = data.get("direction")
        if direction is not None:
            direction = [float(v) for v in direction]
        tolerances = dict(DEFAULT_TOLERANCES)
        extra = data.get("tolerances") or {}
        if set(extra) - set(DEFAULT_TOLERANCES):
            raise ConfigError(f"unknown tolerance keys: {sorted(set(extra) - set(DEFAULT_TOLERANCES))}")
        tolerances.update({k: float(v) for k, v in extra.items()})
        output = data.get("output", "table")
        if output not in ("table", "json"):
            raise ConfigError("output must be 'table' or 'json'")
        try:
            quad = QuadratureConfig.from_dict(data.get("quadrature"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        ref = data.get("reference_field")
        if ref is not None and (not isinstance(ref, list) or len(ref) != n):
            raise ConfigError(f"'reference_field' must list {n} component expressions")
        cfg = cls(
            n, mode, lag, [str(c) for c in field_src], points, quad, tolerances, output,
            direction, int(data.get("verify_resolution", 8)),
            None if ref is None else [str(c) for c in ref],
        )
        cfg.build_lagrangian()
        cfg.build_field()
        cfg.build_reference_field()
        return cfg

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def build_lagrangian(self):
        """Parse errors propagate as :class:`~finsleravg.expr.ExprError`."""
        if "preset" in self.lagrangian:
            try:
                lag = preset(self.lagrangian["preset"], self.n, **self.lagrangian["params"])
            except TypeError as exc:
                raise ConfigError(f"bad preset parameters: {exc}") from None
            if lag.mode != self.mode:
                lag = Lagrangian(lag.expr, lag.n, self.mode, lag.source, lag.name, lag.params)
            return lag
        return Lagrangian.from_text(self.lagrangian["expression"], self.n, self.mode)

    def build_reference_field(self):
        if self.reference_field is None:
            return None
        return self._field(self.reference_field)

    def build_field(self):
        return self._field(self.timelike_field)

    def _field(self, components):
        try:
            return TimelikeField(components, self.n)
        except ex.ExprError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        """Effective configuration with every default resolved."""
        return {
            "n": self.n,
            "mode": self.mode,
            "lagrangian": self.lagrangian,
            "timelike_field": self.timelike_field,
            "points": self.points,
            "direction": self.direction,
            "quadrature": self.quadrature.to_dict(),
            "tolerances": self.tolerances,
            "output": self.output,
            "verify_resolution": self.verify_resolution,
            "reference_field": self.reference_field,
        }
