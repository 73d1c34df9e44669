"""Run configuration: YAML file -> validated :class:`RunConfig`.

Example::

    temperature: 300
    materials:
      silica: {kind: lorentz, oscillators: [{strength: 1.1, resonance: 2.0e16}]}
      water:  {kind: constant, epsilon: 1.77}
    stack:
      left: silica
      layers:
        - {material: vacuum, thickness_nm: 10}
      right: silica
    sweep: {layer: 1, min_nm: 1, max_nm: 100, points: 10, spacing: log}
    numerics:
      matsubara: {rel_tol: 1.0e-9}
      quadrature: {rel_tol: 1.0e-10}

``vacuum`` is predefined.  Thicknesses are in nanometres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .em_core import Layer, Stack
from .kernel import MatsubaraSpec, QuadratureSpec
from .materials import VACUUM, MaterialModel, OscillatorTerm


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    layer: int
    min_nm: float
    max_nm: float
    points: int
    spacing: str = "log"

    def thicknesses_m(self) -> list[float]:
        import numpy as np

        if self.spacing == "log":
            grid = np.logspace(math.log10(self.min_nm), math.log10(self.max_nm), self.points)
        else:
            grid = np.linspace(self.min_nm, self.max_nm, self.points)
        grid[0], grid[-1] = self.min_nm, self.max_nm
        return [float(v) * 1e-9 for v in grid]


@dataclass(frozen=True)
class RunConfig:
    temperature: float
    materials: dict[str, MaterialModel]
    stack: Stack
    sweep: SweepSpec | None = None
    matsubara: MatsubaraSpec = field(default_factory=MatsubaraSpec)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)


class _Loader:
    """Turns a composed YAML tree into Python values, remembering line numbers."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines: dict[str, int] = {}
        try:
            node = yaml.compose(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
            raise ConfigError(f"{source}: malformed YAML at {where}: {exc.problem}") from None
        self.data = self._build(node, "") if node is not None else {}

    def _build(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = str(k.value)
                out[key] = self._build(v, f"{path}.{key}" if path else key)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._build(v, f"{path}[{i}]") for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def error(self, path: str, message: str) -> ConfigError:
        # a missing field has no node of its own: report its parent's line
        anchor = path
        line = self.lines.get(anchor)
        while line is None and anchor:
            anchor = anchor.rsplit(".", 1)[0] if "." in anchor else ""
            line = self.lines.get(anchor)
        where = f" (line {line})" if line else ""
        return ConfigError(f"{self.source}{where}: {path or '<root>'}: {message}")


def _num(loader: _Loader, value: Any, path: str, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or value is None:
        raise loader.error(path, f"expected a number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise loader.error(path, f"expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise loader.error(path, f"must be finite, got {value!r}")
    if positive and not x > 0:
        raise loader.error(path, f"must be > 0, got {value!r}")
    if nonneg and not x >= 0:
        raise loader.error(path, f"must be >= 0, got {value!r}")
    if integer:
        if x != int(x):
            raise loader.error(path, f"must be an integer, got {value!r}")
        return int(x)
    return x


def _mapping(loader, value, path, allowed=None, required=()):
    if not isinstance(value, dict):
        raise loader.error(path, "expected a mapping")
    for key in required:
        if key not in value:
            raise loader.error(path, f"missing required field '{key}'")
    if allowed is not None:
        for key in value:
            if key not in allowed:
                raise loader.error(f"{path}.{key}" if path else key, f"unknown field (allowed: {', '.join(sorted(allowed))})")
    return value


_MATERIAL_FIELDS = {
    "vacuum": {"kind"},
    "constant": {"kind", "epsilon", "static_offset", "permeability"},
    "lorentz": {"kind", "static_offset", "oscillators", "permeability"},
    "drude": {"kind", "plasma_frequency", "damping", "static_offset", "oscillators", "permeability"},
}


def _material(loader, name, spec, path) -> MaterialModel:
    spec = _mapping(loader, spec, path, required=("kind",))
    kind = spec["kind"]
    if kind not in _MATERIAL_FIELDS:
        raise loader.error(f"{path}.kind", f"unknown kind {kind!r} (expected one of {', '.join(_MATERIAL_FIELDS)})")
    _mapping(loader, spec, path, allowed=_MATERIAL_FIELDS[kind])
    mu = _num(loader, spec.get("permeability", 1.0), f"{path}.permeability", positive=True)
    offset = _num(loader, spec.get("static_offset", 0.0), f"{path}.static_offset", nonneg=True)
    oscs = []
    for i, o in enumerate(spec.get("oscillators", []) or []):
        opath = f"{path}.oscillators[{i}]"
        o = _mapping(loader, o, opath, allowed={"strength", "resonance", "damping"}, required=("strength", "resonance"))
        oscs.append(
            OscillatorTerm(
                _num(loader, o["strength"], f"{opath}.strength", nonneg=True),
                _num(loader, o["resonance"], f"{opath}.resonance", positive=True),
                _num(loader, o.get("damping", 0.0), f"{opath}.damping", nonneg=True),
            )
        )
    try:
        if kind == "vacuum":
            return MaterialModel.vacuum()
        if kind == "constant":
            if "epsilon" in spec:
                if "static_offset" in spec:
                    raise loader.error(path, "give either 'epsilon' or 'static_offset', not both")
                eps = _num(loader, spec["epsilon"], f"{path}.epsilon")
                if eps < 1:
                    raise loader.error(f"{path}.epsilon", f"must be >= 1, got {eps}")
                offset = eps - 1.0
            return MaterialModel("constant", offset, permeability=mu, name=name)
        if kind == "lorentz":
            return MaterialModel("lorentz", offset, tuple(oscs), permeability=mu, name=name)
        return MaterialModel(
            "drude",
            offset,
            tuple(oscs),
            plasma_frequency=_num(loader, spec.get("plasma_frequency"), f"{path}.plasma_frequency", positive=True),
            drude_damping=_num(loader, spec.get("damping", 0.0), f"{path}.damping", nonneg=True),
            permeability=mu,
            name=name,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise loader.error(path, str(exc)) from None


def _material_ref(loader, materials, value, path) -> MaterialModel:
    if not isinstance(value, str):
        raise loader.error(path, f"expected a material name, got {value!r}")
    if value not in materials:
        raise loader.error(path, f"unknown material '{value}' (defined: {', '.join(sorted(materials))})")
    return materials[value]


def load_config_text(text: str, source: str = "<config>") -> RunConfig:
    loader = _Loader(text, source)
    data = _mapping(loader, loader.data, "", allowed={"temperature", "materials", "stack", "sweep", "numerics"}, required=("stack",))

    temperature = _num(loader, data.get("temperature", 300.0), "temperature", positive=True)

    materials: dict[str, MaterialModel] = {"vacuum": VACUUM}
    for name, spec in _mapping(loader, data.get("materials", {}) or {}, "materials").items():
        materials[name] = _material(loader, name, spec, f"materials.{name}")

    st = _mapping(loader, data["stack"], "stack", allowed={"left", "layers", "right"}, required=("left", "right"))
    layers = []
    raw_layers = st.get("layers", []) or []
    if not isinstance(raw_layers, list):
        raise loader.error("stack.layers", "expected a list")
    for i, item in enumerate(raw_layers):
        lpath = f"stack.layers[{i}]"
        item = _mapping(loader, item, lpath, allowed={"material", "thickness_nm"}, required=("material", "thickness_nm"))
        mat = _material_ref(loader, materials, item["material"], f"{lpath}.material")
        t = _num(loader, item["thickness_nm"], f"{lpath}.thickness_nm", positive=True)
        layers.append(Layer(mat, t * 1e-9))
    stack = Stack(
        _material_ref(loader, materials, st["left"], "stack.left"),
        tuple(layers),
        _material_ref(loader, materials, st["right"], "stack.right"),
    )

    sweep = None
    if data.get("sweep") is not None:
        sw = _mapping(
            loader, data["sweep"], "sweep",
            allowed={"layer", "min_nm", "max_nm", "points", "spacing"},
            required=("min_nm", "max_nm", "points"),
        )
        layer = _num(loader, sw.get("layer", 1), "sweep.layer", integer=True)
        if not 1 <= layer <= len(layers):
            raise loader.error("sweep.layer", f"layer index {layer} out of range 1..{len(layers)}")
        lo = _num(loader, sw["min_nm"], "sweep.min_nm", positive=True)
        hi = _num(loader, sw["max_nm"], "sweep.max_nm", positive=True)
        if not lo < hi:
            raise loader.error("sweep", f"min_nm ({lo}) must be < max_nm ({hi})")
        points = _num(loader, sw["points"], "sweep.points", integer=True)
        if points < 2:
            raise loader.error("sweep.points", "need at least 2 points")
        spacing = sw.get("spacing", "log")
        if spacing not in ("log", "linear"):
            raise loader.error("sweep.spacing", f"expected 'log' or 'linear', got {spacing!r}")
        sweep = SweepSpec(layer, lo, hi, points, spacing)

    num = _mapping(loader, data.get("numerics", {}) or {}, "numerics", allowed={"matsubara", "quadrature"})
    ms = _mapping(loader, num.get("matsubara", {}) or {}, "numerics.matsubara", allowed={"rel_tol", "min_terms", "max_terms"})
    qs = _mapping(
        loader, num.get("quadrature", {}) or {}, "numerics.quadrature",
        allowed={"rel_tol", "abs_tol", "max_depth", "tail_cutoff"},
    )
    try:
        dm, dq = MatsubaraSpec(), QuadratureSpec()
        mats = MatsubaraSpec(
            temperature,
            _num(loader, ms.get("rel_tol", dm.rel_tol), "numerics.matsubara.rel_tol", positive=True),
            _num(loader, ms.get("min_terms", dm.min_terms), "numerics.matsubara.min_terms", integer=True),
            _num(loader, ms.get("max_terms", dm.max_terms), "numerics.matsubara.max_terms", integer=True),
        )
        quad = QuadratureSpec(
            _num(loader, qs.get("rel_tol", dq.rel_tol), "numerics.quadrature.rel_tol", positive=True),
            _num(loader, qs.get("abs_tol", dq.abs_tol), "numerics.quadrature.abs_tol", positive=True),
            _num(loader, qs.get("max_depth", dq.max_depth), "numerics.quadrature.max_depth", integer=True),
            _num(loader, qs.get("tail_cutoff", dq.tail_cutoff), "numerics.quadrature.tail_cutoff", positive=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise loader.error("numerics", str(exc)) from None

    return RunConfig(temperature, materials, stack, sweep, mats, quad)


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return load_config_text(text, str(path))
