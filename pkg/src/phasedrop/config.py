"""Run configuration: strict key=value parsing and initial data synthesis.

The format is deliberately plain: bracketed sections, ``key = value`` lines,
``#`` comments.  Parsing is strict; an unknown key is a fatal error, because
a silently ignored typo in epsilon or alpha invalidates an experiment.

Initial conditions:

* ``disk``: the signed-distance tanh profile
  phi0 = (1 + tanh(d / (2 sqrt(2) eps))) / 2 with d > 0 inside, the standing
  wave of the eps-scaled equation, guaranteeing 0 < phi0 < 1 strictly.
* ``stripe``: a band of width L/2 centered on a coordinate plane, i.e. the
  same tanh profile of the band's signed distance (two flat interfaces).
* concentration ``const`` or ``sine``; the sine amplitude must stay below
  the mean so the concentration starts positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Grid, ScalarField, make_grid
from .physics import ModelParams, SimState, Variant, initial_state
from .stepping import StepPolicy, UScheme

__all__ = [
    "PhiInit",
    "UInit",
    "OutputOptions",
    "CompareOptions",
    "RunConfig",
    "parse_config",
    "parse_config_file",
    "apply_overrides",
    "build_phi0",
    "build_u0",
    "build_initial_state",
]


@dataclass(frozen=True)
class PhiInit:
    kind: str                       # "disk" | "stripe"
    center: tuple[float, ...] = (0.5, 0.5)
    radius: float = 0.3
    axis: int = 0
    position: float = 0.5


@dataclass(frozen=True)
class UInit:
    kind: str                       # "const" | "sine"
    value: float = 0.5
    axis: int = 0
    mean: float = 0.5
    amplitude: float = 0.0


@dataclass(frozen=True)
class OutputOptions:
    snapshots: str = "none"         # "none" | "vtk"
    snapshot_every: int = 0         # extra snapshots every N records; 0 = final only
    fields: tuple[str, ...] = ("phi", "u")


@dataclass(frozen=True)
class CompareOptions:
    oracle: str = "auto"            # "auto" | "mcf" | "forced" | "coupled"
    tolerance: float = 0.02
    r_max: float = 0.0              # 0 = choose 3.2 * R0 automatically
    dr: float = 0.0                 # 0 = R0 / 60
    dt: float = 0.0                 # 0 = 1e-5


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: ModelParams
    phi_init: PhiInit
    u_init: UInit
    policy: StepPolicy
    t_end: float
    cadence: int
    output: OutputOptions = OutputOptions()
    compare: CompareOptions = CompareOptions()


# -- raw text parsing ---------------------------------------------------------

def _parse_lines(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    """Sections of key -> (raw value, line number); strict syntax."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if not current:
                raise ConfigError(f"line {lineno}: empty section name")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key '{current}.{key}'")
        sections[current][key.lower()] = (value, lineno)
    return sections


def _as_float(raw: str, where: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {where} must be a number, got {raw!r}")


def _as_int(raw: str, where: str, lineno: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {where} must be an integer, got {raw!r}")


def _as_list(raw: str, conv, where: str, lineno: int) -> list:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"line {lineno}: {where} must be a comma list")
    return [conv(s, where, lineno) for s in items]


_SECTION_KEYS = {
    "grid": {"dims", "lengths"},
    "model": {
        "epsilon", "tau", "sigma", "alpha", "k", "gamma0", "u1", "m",
        "variant", "gamma_const",
    },
    "init": {
        "phi", "phi_center", "phi_radius", "phi_axis", "phi_position",
        "u", "u_value", "u_axis", "u_mean", "u_amplitude",
    },
    "stepping": {"cfl_safety", "u_scheme", "dt_override", "t_end", "cadence"},
    "output": {"snapshots", "snapshot_every", "fields"},
    "compare": {"oracle", "tolerance", "r_max", "dr", "dt"},
}

_PHI_KIND_KEYS = {
    "disk": {"phi_center", "phi_radius"},
    "stripe": {"phi_axis", "phi_position"},
}
_U_KIND_KEYS = {
    "const": {"u_value"},
    "sine": {"u_axis", "u_mean", "u_amplitude"},
}


class _Section:
    """Typed access to one parsed section."""

    def __init__(self, name: str, data: dict[str, tuple[str, int]]):
        self.name = name
        self.data = data

    def get(self, key: str, conv, default=None, required: bool = False):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing required key '{self.name}.{key}'")
            return default
        raw, lineno = self.data[key]
        return conv(raw, f"{self.name}.{key}", lineno)

    def line_of(self, key: str) -> int:
        return self.data[key][1]


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a run configuration."""
    sections = _parse_lines(text)

    unknown_sections = set(sections) - set(_SECTION_KEYS)
    if unknown_sections:
        raise ConfigError(f"unknown section(s): {sorted(unknown_sections)}")
    for name, keys in sections.items():
        bad = set(keys) - _SECTION_KEYS[name]
        if bad:
            key = sorted(bad)[0]
            raise ConfigError(
                f"line {keys[key][1]}: unknown key '{name}.{key}'"
            )

    def section(name: str) -> _Section:
        return _Section(name, sections.get(name, {}))

    # grid
    g = section("grid")
    dims = g.get("dims", lambda r, w, l: _as_list(r, _as_int, w, l), required=True)
    lengths = g.get(
        "lengths", lambda r, w, l: _as_list(r, _as_float, w, l),
        default=[1.0] * len(dims),
    )
    try:
        grid = make_grid(dims, lengths)
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc

    # model
    m = section("model")
    raw_variant = m.get("variant", lambda r, w, l: r.strip().lower(), default="stilde")
    try:
        variant = Variant(raw_variant)
    except ValueError:
        raise ConfigError(
            f"model.variant must be one of {[v.value for v in Variant]}, "
            f"got {raw_variant!r}"
        )
    try:
        params = ModelParams(
            epsilon=m.get("epsilon", _as_float, required=True),
            tau=m.get("tau", _as_float, default=1.0),
            sigma=m.get("sigma", _as_float, default=1.0),
            alpha=m.get("alpha", _as_float, default=0.0),
            k=m.get("k", _as_float, default=1.0),
            gamma0=m.get("gamma0", _as_float, default=0.1),
            u1=m.get("u1", _as_float, default=1.0),
            m=m.get("m", _as_int, default=2),
            variant=variant,
            gamma_const=m.get("gamma_const", _as_float, default=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc

    # init
    ini = section("init")
    phi_kind = ini.get("phi", lambda r, w, l: r.strip().lower(), default="disk")
    if phi_kind not in _PHI_KIND_KEYS:
        raise ConfigError(f"init.phi must be 'disk' or 'stripe', got {phi_kind!r}")
    u_kind = ini.get("u", lambda r, w, l: r.strip().lower(), default="const")
    if u_kind not in _U_KIND_KEYS:
        raise ConfigError(f"init.u must be 'const' or 'sine', got {u_kind!r}")
    allowed = {"phi", "u"} | _PHI_KIND_KEYS[phi_kind] | _U_KIND_KEYS[u_kind]
    for key in ini.data:
        if key not in allowed:
            raise ConfigError(
                f"line {ini.line_of(key)}: key 'init.{key}' does not apply to "
                f"phi='{phi_kind}', u='{u_kind}'"
            )

    center = tuple(
        ini.get(
            "phi_center", lambda r, w, l: _as_list(r, _as_float, w, l),
            default=[ell / 2.0 for ell in grid.lengths],
        )
    )
    if phi_kind == "disk" and len(center) != grid.ndim:
        raise ConfigError(
            f"init.phi_center needs {grid.ndim} coordinates, got {len(center)}"
        )
    phi_init = PhiInit(
        kind=phi_kind,
        center=center,
        radius=ini.get("phi_radius", _as_float, default=0.3),
        axis=ini.get("phi_axis", _as_int, default=0),
        position=ini.get("phi_position", _as_float, default=0.5),
    )
    if phi_init.kind == "disk" and not phi_init.radius > 0.0:
        raise ConfigError(f"init.phi_radius must be positive, got {phi_init.radius}")
    if phi_init.kind == "stripe" and not 0 <= phi_init.axis < grid.ndim:
        raise ConfigError(f"init.phi_axis out of range for {grid.ndim}D grid")

    u_init = UInit(
        kind=u_kind,
        value=ini.get("u_value", _as_float, default=0.5),
        axis=ini.get("u_axis", _as_int, default=0),
        mean=ini.get("u_mean", _as_float, default=0.5),
        amplitude=ini.get("u_amplitude", _as_float, default=0.0),
    )
    if u_init.kind == "const" and not u_init.value > 0.0:
        raise ConfigError("u0 positivity violated: init.u_value must be > 0")
    if u_init.kind == "sine":
        if not 0 <= u_init.axis < grid.ndim:
            raise ConfigError(f"init.u_axis out of range for {grid.ndim}D grid")
        if not abs(u_init.amplitude) < u_init.mean:
            raise ConfigError(
                "u0 positivity violated: require |init.u_amplitude| < init.u_mean"
            )

    # stepping
    st = section("stepping")
    try:
        policy = StepPolicy(
            cfl_safety=st.get("cfl_safety", _as_float, default=0.5),
            u_scheme=UScheme(
                st.get("u_scheme", lambda r, w, l: r.strip().lower(),
                       default="explicit")
            ),
            dt_override=st.get("dt_override", _as_float, default=None),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid stepping policy: {exc}") from exc
    t_end = st.get("t_end", _as_float, required=True)
    if t_end < 0.0:
        raise ConfigError(f"stepping.t_end must be nonnegative, got {t_end}")
    cadence = st.get("cadence", _as_int, default=1)
    if cadence < 1:
        raise ConfigError(f"stepping.cadence must be >= 1, got {cadence}")

    # output
    out = section("output")
    snapshots = out.get("snapshots", lambda r, w, l: r.strip().lower(),
                        default="none")
    if snapshots not in ("none", "vtk"):
        raise ConfigError(f"output.snapshots must be 'none' or 'vtk', got {snapshots!r}")
    snapshot_every = out.get("snapshot_every", _as_int, default=0)
    if snapshot_every < 0:
        raise ConfigError("output.snapshot_every must be >= 0")
    fields = tuple(
        out.get(
            "fields",
            lambda r, w, l: [s.strip().lower() for s in r.split(",") if s.strip()],
            default=["phi", "u"],
        )
    )
    for f in fields:
        if f not in ("phi", "u", "measure"):
            raise ConfigError(f"output.fields entries must be phi|u|measure, got {f!r}")
    output = OutputOptions(snapshots=snapshots, snapshot_every=snapshot_every,
                           fields=fields)

    # compare
    cmp_sec = section("compare")
    oracle = cmp_sec.get("oracle", lambda r, w, l: r.strip().lower(), default="auto")
    if oracle not in ("auto", "mcf", "forced", "coupled"):
        raise ConfigError(
            f"compare.oracle must be auto|mcf|forced|coupled, got {oracle!r}"
        )
    compare = CompareOptions(
        oracle=oracle,
        tolerance=cmp_sec.get("tolerance", _as_float, default=0.02),
        r_max=cmp_sec.get("r_max", _as_float, default=0.0),
        dr=cmp_sec.get("dr", _as_float, default=0.0),
        dt=cmp_sec.get("dt", _as_float, default=0.0),
    )
    if compare.tolerance <= 0.0:
        raise ConfigError("compare.tolerance must be positive")

    return RunConfig(
        grid=grid, params=params, phi_init=phi_init, u_init=u_init,
        policy=policy, t_end=t_end, cadence=cadence, output=output,
        compare=compare,
    )


def parse_config_file(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def apply_overrides(text: str, overrides) -> str:
    """Apply repeatable ``section.key=value`` overrides to raw config text.

    Overriding rewrites the text rather than the parsed object so that the
    strict parser remains the single source of validation.
    """
    amended = text
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} must look like section.key=value")
        dotted, value = ov.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override {ov!r} must name section.key")
        sec, key = (s.strip().lower() for s in dotted.split(".", 1))
        if sec not in _SECTION_KEYS or key not in _SECTION_KEYS[sec]:
            raise ConfigError(f"override names unknown key '{sec}.{key}'")
        amended = _rewrite_key(amended, sec, key, value.strip())
    return amended


def _rewrite_key(text: str, sec: str, key: str, value: str) -> str:
    lines = text.splitlines()
    out: list[str] = []
    current = None
    replaced = False
    section_seen = False
    insert_at = None
    for line in lines:
        stripped = line.split("#", 1)[0].strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
            if current == sec:
                section_seen = True
                insert_at = len(out) + 1
        elif current == sec and "=" in stripped:
            k = stripped.split("=", 1)[0].strip().lower()
            if k == key:
                out.append(f"{key} = {value}")
                replaced = True
                continue
        out.append(line)
    if not replaced:
        if section_seen:
            out.insert(insert_at, f"{key} = {value}")
        else:
            out.extend([f"[{sec}]", f"{key} = {value}"])
    return "\n".join(out) + "\n"


# -- initial data -------------------------------------------------------------

def _tanh_profile(signed_distance: np.ndarray, epsilon: float) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(signed_distance / (2.0 * math.sqrt(2.0) * epsilon)))


def _torus_coordinate_distance(x: np.ndarray, pos: float, length: float) -> np.ndarray:
    return np.abs((x - pos + 0.5 * length) % length - 0.5 * length)


def build_phi0(grid: Grid, init: PhiInit, params: ModelParams) -> ScalarField:
    coords = grid.cell_centers()
    if init.kind == "disk":
        dist_sq = None
        for ax in range(grid.ndim):
            d = _torus_coordinate_distance(
                coords[ax], init.center[ax], grid.lengths[ax]
            )
            dist_sq = d * d if dist_sq is None else dist_sq + d * d
        signed = init.radius - np.sqrt(dist_sq)
    elif init.kind == "stripe":
        ax = init.axis
        d = _torus_coordinate_distance(coords[ax], init.position, grid.lengths[ax])
        signed = grid.lengths[ax] / 4.0 - d
    else:
        raise ConfigError(f"unknown phi init kind {init.kind!r}")
    vals = np.broadcast_to(
        _tanh_profile(signed, params.epsilon), grid.dims
    ).copy()
    return ScalarField(grid, vals)


def build_u0(grid: Grid, init: UInit) -> ScalarField:
    if init.kind == "const":
        return ScalarField.full(grid, init.value)
    if init.kind == "sine":
        coords = grid.cell_centers()
        x = coords[init.axis]
        vals = init.mean + init.amplitude * np.sin(
            2.0 * np.pi * x / grid.lengths[init.axis]
        )
        return ScalarField(grid, np.broadcast_to(vals, grid.dims).copy())
    raise ConfigError(f"unknown u init kind {init.kind!r}")


def build_initial_state(config: RunConfig) -> SimState:
    phi0 = build_phi0(config.grid, config.phi_init, config.params)
    u0 = build_u0(config.grid, config.u_init)
    return initial_state(phi0, u0, config.params)
