"""Experiment configuration files.

Sectioned ``key = value`` text read with :mod:`configparser` (``;`` and
``#`` start comments). Numbers are decimal with optional exponent; lists
are comma separated. Recognized sections and keys::

    [cross_section]
    kind = interval          ; interval | circle | sphere
    length = 3.141592653589793   ; interval
    bc = dirichlet           ; interval: dirichlet | neumann
    radius = 1.0             ; circle
    d = 2                    ; sphere dimension
    truncate = 64            ; eigenvalues kept (or n_thresholds = ...)

    [potential]
    kind = step              ; zero | step | steps
    v0 = 4.0                 ; step height on [a, b]
    a = 0.0
    b = 1.0
    breaks = 0, 0.5, 1       ; steps
    values = 4, 2            ; steps
    geometry = full_line     ; full_line | dirichlet_halfline

    [experiment]
    kind = window_count      ; window_count | fixed_sheet_sum | eigenvalue_count
                             ; smatrix_probe | smith | carleman_check
    m_min = 2
    m_max = 12
    rho = 3.0                ; window radius, or beta = 0.9 for beta (alpha nu_m)^(1/2)
    sides = +, -
    puncture = 1e-4
    oracle = true            ; compare with the separable oracle when possible
    sheet = 1, 2             ; fixed_sheet_sum / smatrix_probe: flipped thresholds
    radii = 10, 20, 30       ; fixed_sheet_sum shells in |r_1|
    method = oracle          ; fixed_sheet_sum: oracle | fredholm
    thresholds = 6           ; eigenvalue_count: segments below nu_6^2
    points = 2.5+0.3j, 7-1j  ; smatrix_probe lambdas (off the cuts)
    germ = path/to/germ.txt  ; smith
    functions = one, blaschke_i, mixed    ; carleman_check
    radii_carleman = 5, 10, 20

    [discretization]
    n_t = 24
    quad = gl_split
    l_max = 40
    tail_tol = 0.1

    [contour]
    int_tol = 1e-3
    max_evals = 400000

    [smatrix]
    h = 0.015625
    margin = 0.5

    [output]
    dir = out
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .contour import ContourSettings
from .cross_section import Circle, Interval, Sphere, build_catalog
from .exceptions import CatalogError, ConfigError
from .kernels import FULL_LINE, GEOMETRIES
from .nystrom import Discretization
from .potential import Profile, PotentialData, separable, zero_potential
from .sheets import Sheet
from .smatrix import SolverParams

KINDS = ("window_count", "fixed_sheet_sum", "eigenvalue_count", "smatrix_probe", "smith", "carleman_check")

_KNOWN = {
    "cross_section": {"kind", "length", "bc", "radius", "d", "truncate", "n_thresholds"},
    "potential": {"kind", "v0", "a", "b", "breaks", "values", "geometry"},
    "experiment": {"kind", "m_min", "m_max", "rho", "beta", "sides", "puncture", "oracle", "sheet",
                   "radii", "method", "thresholds", "points", "germ", "functions", "radii_carleman"},
    "discretization": {"n_t", "quad", "l_max", "tail_tol"},
    "contour": {"int_tol", "max_evals", "max_step"},
    "smatrix": {"h", "margin"},
    "output": {"dir"},
}


@dataclass
class ExperimentConfig:
    kind: str | None = None
    cs_spec: object = None
    truncate: int | None = None
    n_thresholds: int | None = None
    potential: PotentialData = field(default_factory=zero_potential)
    m_min: int = 2
    m_max: int = 2
    rho: float | None = None
    beta: float | None = None
    sides: tuple = (1, -1)
    puncture: float = 1e-4
    oracle: bool = True
    sheet: Sheet = Sheet.of(1)
    radii: tuple = (10.0,)
    method: str = "oracle"
    thresholds: int = 6
    points: tuple = ()
    germ: str | None = None
    functions: tuple = ("one", "blaschke_i", "mixed")
    radii_carleman: tuple = (5.0, 10.0, 20.0)
    disc: Discretization = field(default_factory=Discretization)
    settings: ContourSettings = field(default_factory=ContourSettings)
    solver: SolverParams = field(default_factory=SolverParams)
    out_dir: str = "out"
    text: str = ""

    def catalog(self):
        if self.cs_spec is None:
            raise ConfigError("no [cross_section] given")
        try:
            return build_catalog(self.cs_spec, truncate=self.truncate, n_thresholds=self.n_thresholds)
        except CatalogError as e:
            raise ConfigError(str(e)) from None


def _num(sec, key, conv=float, default=None):
    if key not in sec:
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a valid number") from None


def _list(sec, key, conv=float, default=()):
    if key not in sec:
        return default
    try:
        return tuple(conv(x.strip()) for x in sec[key].split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: bad list {sec[key]!r}") from None


def _bool(sec, key, default):
    if key not in sec:
        return default
    try:
        return sec.getboolean(key)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} must be true or false") from None


def _int(x):
    v = float(x)
    if v != int(v):
        raise ValueError(x)
    return int(v)


def _side(x):
    if x in ("+", "+1", "1"):
        return 1
    if x in ("-", "-1"):
        return -1
    raise ValueError(x)


def _cross_section(sec):
    kind = sec.get("kind", "interval").strip()
    try:
        if kind == "interval":
            return Interval(_num(sec, "length", default=3.141592653589793), sec.get("bc", "dirichlet").strip())
        if kind == "circle":
            return Circle(_num(sec, "radius", default=1.0))
        if kind == "sphere":
            return Sphere(_num(sec, "d", _int, 2))
    except CatalogError as e:
        raise ConfigError(str(e)) from None
    raise ConfigError(f"unknown cross-section kind {kind!r}")


def _potential(sec):
    kind = sec.get("kind", "zero").strip()
    geom = sec.get("geometry", FULL_LINE).strip()
    if geom not in GEOMETRIES:
        raise ConfigError(f"unknown geometry {geom!r}")
    try:
        if kind == "zero":
            return zero_potential(geom)
        if kind == "step":
            prof = Profile.step(_num(sec, "v0", default=0.0), _num(sec, "a", default=0.0),
                                _num(sec, "b", default=1.0))
            return separable(prof, geom, label="step")
        if kind == "steps":
            prof = Profile.steps(_list(sec, "breaks"), _list(sec, "values"))
            return separable(prof, geom, label="steps")
    except ValueError as e:
        raise ConfigError(f"[potential] {e}") from None
    raise ConfigError(f"unknown potential kind {kind!r}")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"unreadable config: {e}") from None
    for name in cp.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - _KNOWN[name]
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    cfg = ExperimentConfig(text=text)
    if cp.has_section("cross_section"):
        s = cp["cross_section"]
        cfg.cs_spec = _cross_section(s)
        cfg.truncate = _num(s, "truncate", _int)
        cfg.n_thresholds = _num(s, "n_thresholds", _int)
        if cfg.truncate is not None and cfg.n_thresholds is not None:
            raise ConfigError("give truncate or n_thresholds, not both")
    if cp.has_section("potential"):
        cfg.potential = _potential(cp["potential"])
    e = cp["experiment"] if cp.has_section("experiment") else cp["DEFAULT"]
    if "kind" in e:
        cfg.kind = e["kind"].strip()
        if cfg.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    cfg.m_min = _num(e, "m_min", _int, 2)
    cfg.m_max = _num(e, "m_max", _int, cfg.m_min)
    cfg.rho = _num(e, "rho")
    cfg.beta = _num(e, "beta")
    cfg.sides = _list(e, "sides", _side, (1, -1))
    cfg.puncture = _num(e, "puncture", default=1e-4)
    cfg.oracle = _bool(e, "oracle", True)
    if "sheet" in e:
        try:
            raw = e["sheet"].strip()
            cfg.sheet = Sheet.parse(raw if raw.startswith("[") else f"[{raw}]")
        except ValueError as err:
            raise ConfigError(f"bad sheet {e['sheet']!r}: {err}") from None
    cfg.radii = _list(e, "radii", float, cfg.radii)
    cfg.method = e.get("method", "oracle").strip()
    cfg.thresholds = _num(e, "thresholds", _int, 6)
    cfg.points = _list(e, "points", lambda x: complex(x.replace(" ", "")), ())
    cfg.germ = e.get("germ", None)
    cfg.functions = _list(e, "functions", str, cfg.functions)
    cfg.radii_carleman = _list(e, "radii_carleman", float, cfg.radii_carleman)
    if cp.has_section("discretization"):
        d = cp["discretization"]
        try:
            cfg.disc = Discretization(n_t=_num(d, "n_t", _int, 24), quad=d.get("quad", "gl_split").strip(),
                                      l_max=_num(d, "l_max", _int), tail_tol=_num(d, "tail_tol", default=0.1))
        except ValueError as err:
            raise ConfigError(f"[discretization] {err}") from None
    if cp.has_section("contour"):
        c = cp["contour"]
        cfg.settings = ContourSettings(int_tol=_num(c, "int_tol", default=1e-3),
                                       max_evals=_num(c, "max_evals", _int, 400_000),
                                       max_step=_num(c, "max_step", default=0.5))
    if cp.has_section("smatrix"):
        s = cp["smatrix"]
        cfg.solver = SolverParams(h=_num(s, "h", default=1 / 64), margin=_num(s, "margin", default=0.5))
    if cp.has_section("output"):
        cfg.out_dir = cp["output"].get("dir", "out").strip()
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.m_min < 1 or cfg.m_max < cfg.m_min:
        raise ConfigError(f"bad m range {cfg.m_min}..{cfg.m_max}")
    if cfg.rho is not None and not cfg.rho > 0:
        raise ConfigError("rho must be positive")
    if cfg.beta is not None and not 0 < cfg.beta < 1:
        raise ConfigError("beta must lie in (0, 1)")
    if cfg.rho is not None and cfg.beta is not None:
        raise ConfigError("give rho or beta, not both")
    if not cfg.puncture >= 0:
        raise ConfigError("puncture must be >= 0")
    if cfg.method not in ("oracle", "fredholm"):
        raise ConfigError(f"unknown method {cfg.method!r}")
    if any(not r > 0 for r in cfg.radii) or list(cfg.radii) != sorted(cfg.radii):
        raise ConfigError("radii must be positive and increasing")
    if cfg.thresholds < 1:
        raise ConfigError("thresholds must be >= 1")


def read_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)
