"""Run configuration: one YAML file, strict keys, documented defaults.

Domain selection, in order of precedence:

* ``eps_scale``: near-critical square-ish box whose growth rate is
  ``eps_scale * eps_star`` (solved self-consistently),
* ``stretch: [d1, d2]``: L_i = 2 pi (1 + d_i) with d_i kept exactly,
* ``L1`` / ``L2``: plain lengths,
* nothing: ``eps_scale`` = 0.25, the scale at which the iteration is certified.

Initial data (``init``) is either ``preset: theorem`` (every hypothesis at
``fraction`` of its bound), ``preset: zero``, or explicit ``amplitudes``
[a10, a20, a01, a02] plus ``w`` as a list of [k, j, coeff] triples and/or
``w_file`` (a ``k,j,coeff`` CSV).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .constants import ConstantLedger, build_ledger, domain_for_eps_fraction
from .io import read_field
from .mild import SchemeConfig, theorem_initial_data
from .spectral import TWO_PI, Domain, ModeSplit, SpectralField, project_off_special


DEFAULT_EPS_SCALE = 0.25


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    preset: str | None = "theorem"
    fraction: float = 0.9
    amplitudes: tuple[float, float, float, float] | None = None
    w: tuple[tuple[int, int, float], ...] = ()
    w_file: str | None = None

    def __post_init__(self):
        explicit = self.amplitudes is not None or self.w or self.w_file
        if self.preset is not None and explicit:
            raise ConfigError("init: give either a preset or explicit amplitudes / w, not both")
        if self.preset is None and self.amplitudes is None:
            raise ConfigError("init: explicit data needs 'amplitudes'")
        if self.preset not in (None, "theorem", "zero"):
            raise ConfigError(f"init.preset must be 'theorem' or 'zero', got {self.preset!r}")
        if self.amplitudes is not None and len(self.amplitudes) != 4:
            raise ConfigError("init.amplitudes needs four numbers (a10, a20, a01, a02)")
        if not self.fraction > 0:
            raise ConfigError("init.fraction must be positive")


@dataclass(frozen=True)
class ToyOptions:
    axes: tuple[int, ...] = (1, 2)
    preset: str = "boundary"      # zero | boundary
    b0: float = 0.0               # only for preset boundary, as a fraction of M2 eps / 2
    forcing: str = "extreme"      # zero | extreme | sinusoid
    signs: tuple[int, int] = (1, 1)
    omega: float = 1.0
    T: float | None = 1e4         # None: 1e4 max(1/eps_i, 1/B), out of reach for tiny eps
    dt: float | None = None       # None: 0.01 / B
    sweep_points: int = 10_000
    max_records: int = 20_001

    def __post_init__(self):
        if not self.axes or any(a not in (1, 2) for a in self.axes):
            raise ConfigError("toy.axes must be a non-empty subset of [1, 2]")
        if self.preset not in ("zero", "boundary"):
            raise ConfigError("toy.preset must be 'zero' or 'boundary'")
        if self.forcing not in ("zero", "extreme", "sinusoid"):
            raise ConfigError("toy.forcing must be 'zero', 'extreme' or 'sinusoid'")
        if len(self.signs) != 2 or any(s not in (-1, 1) for s in self.signs):
            raise ConfigError("toy.signs must be two entries from {-1, 1}")
        if not abs(self.b0) <= 1:
            raise ConfigError("toy.b0 must lie in [-1, 1]")


@dataclass(frozen=True)
class SolveOptions:
    nonlinear: bool = True
    record_every: int = 1
    cfl: float = 1.0

    def __post_init__(self):
        if self.record_every < 1:
            raise ConfigError("solve.record_every must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    L1: float | None = None
    L2: float | None = None
    stretch: tuple[float, float] | None = None
    eps_scale: float | None = None
    N: int = 32
    rho: float = 0.1
    T: float = 1.0
    dt: float = 1 / 1024
    dt_w: float = 1 / 256
    dt_direct: float = 1 / 1024
    max_iters: int = 20
    cauchy_tol: float = 1e-8
    xval_tol: float = 1e-6
    out_dir: str = "out"
    init: InitSpec = field(default_factory=InitSpec)
    toy: ToyOptions = field(default_factory=ToyOptions)
    solve: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if self.eps_scale is not None and not self.eps_scale > 0:
            raise ConfigError("eps_scale must be positive")
        if self.eps_scale is not None and (self.L1 is not None or self.L2 is not None
                                           or self.stretch is not None):
            raise ConfigError("eps_scale picks the domain itself; drop L1/L2/stretch")
        if self.stretch is not None and (self.L1 is not None or self.L2 is not None):
            raise ConfigError("give either stretch or L1/L2")
        if (self.L1 is None) != (self.L2 is None):
            raise ConfigError("L1 and L2 go together")
        if self.rho < 0:
            raise ConfigError("rho must be >= 0")
        for name in ("T", "dt", "dt_w", "dt_direct", "cauchy_tol", "xval_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if int(self.N) != self.N or self.N < 4:
            raise ConfigError("N must be an integer >= 4")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        try:
            self.scheme()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(T=self.T, dt=self.dt, dt_w=self.dt_w, N=self.N, rho=self.rho,
                            max_iters=self.max_iters, cauchy_tol=self.cauchy_tol)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# parsing


def _section(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        kw[k] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


_NESTED = {"init": InitSpec, "toy": ToyOptions, "solve": SolveOptions}


def config_from_dict(data: dict | None) -> RunConfig:
    data = dict(data or {})
    if "init" in data and isinstance(data["init"], dict):
        init = dict(data["init"])
        # explicit data switch the preset off unless one was named
        if "preset" not in init and ("amplitudes" in init or "w" in init or "w_file" in init):
            init["preset"] = None
        data["init"] = init
    nested = {k: _section(cls, data.pop(k, None), k) for k, cls in _NESTED.items()}
    top = _section(RunConfig, data, "config")
    return replace(top, **nested)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "eps_scale":
            for dk in ("L1", "L2", "stretch"):
                data.pop(dk, None)
        data[k] = v
    return config_from_dict(data)


# --------------------------------------------------------------------------
# resolution


def resolve_domain(cfg: RunConfig) -> tuple[Domain, ConstantLedger]:
    if cfg.eps_scale is not None:
        return domain_for_eps_fraction(cfg.eps_scale, cfg.rho, cfg.N)
    if cfg.stretch is not None:
        d = Domain.near_critical(float(cfg.stretch[0]), float(cfg.stretch[1]), cfg.N)
    elif cfg.L1 is not None:
        d = Domain(float(cfg.L1), float(cfg.L2), cfg.N)
    else:
        return domain_for_eps_fraction(DEFAULT_EPS_SCALE, cfg.rho, cfg.N)
    return d, build_ledger(d, cfg.rho)


def resolve_init(cfg: RunConfig, domain: Domain, led: ConstantLedger) -> ModeSplit:
    spec = cfg.init
    if spec.preset == "zero":
        return ModeSplit.zeros(domain)
    if spec.preset == "theorem":
        if not (led.eps > 0 and math.isfinite(led.M3)):
            raise ConfigError("the theorem preset needs a domain with growing modes")
        return theorem_initial_data(led, domain, spec.fraction)
    c = np.zeros((domain.N + 1, domain.N + 1))
    if spec.w_file:
        c += read_field(spec.w_file, domain).coeffs
    for entry in spec.w:
        if len(entry) != 3:
            raise ConfigError("init.w entries are [k, j, coeff]")
        k, j, v = int(entry[0]), int(entry[1]), float(entry[2])
        if not (0 <= k <= domain.N and 0 <= j <= domain.N):
            raise ConfigError(f"init.w mode ({k}, {j}) outside truncation N = {domain.N}")
        c[k, j] += v
    if (project_off_special(c) != c).any():
        raise ConfigError("init.w must vanish on the special modes (0,0), (1,0), (2,0), (0,1), (0,2)")
    a = tuple(float(x) for x in spec.amplitudes)
    return ModeSplit(*a, SpectralField(domain, c))


def resolved_dict(cfg: RunConfig, domain: Domain, led: ConstantLedger) -> dict:
    """The config as given plus what it resolved to (for embedding in outputs)."""
    out = cfg.to_dict()
    out["resolved"] = {
        "L1": domain.L1, "L2": domain.L2, "N": domain.N,
        "stretch": list(domain.stretch) if domain.stretch else None,
        "L1_over_2pi": domain.L1 / TWO_PI, "L2_over_2pi": domain.L2 / TWO_PI,
        "eps": led.eps, "eps_star": led.eps_star,
    }
    return out
