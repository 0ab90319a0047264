"""Scenario configuration: a flat, strictly validated key-value document.

Scenario files are JSON objects with only scalar values, so they double as
acceptance-test fixtures.  Unknown keys are rejected.  Product geometries are
encoded in a compact factor string, e.g.

    "family": "product",
    "factors": "scaled_gaussian:u0=1,n=1;round_circle:a0=0.25"
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

from .errors import ConfigurationError
from .flow import RunRequest
from .geometry import product_family, round_circle_family, scaled_gaussian_family

__all__ = ["ScenarioConfig", "load_config"]

_BOUNDS = {
    "horizon": (0.0, 100.0),
    "t0": (-100.0, 100.0),
    "dt": (1e-6, 0.05),
    "cadence": (1, 100000),
    "resolution": (8, 4096),
    "hermite_order": (3, 64),
    "modes": (1, 2048),
    "k": (1, 16),
    "eig_tol": (1e-14, 1e-2),
    "adaptive_tol": (1e-14, 1e-2),
    "u0": (1e-8, 1e8),
    "a0": (1e-8, 1e8),
    "f0": (-50.0, 50.0),
    "n": (1, 4),
    "seed": (0, 2**31 - 1),
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "run"
    family: str = "scaled_gaussian"
    u0: float = 1.0
    n: int = 1
    a0: float = 1.0
    f0: float = 0.0
    factors: str = ""
    t0: float = 0.0
    horizon: float = 0.5
    dt: float = 1e-3
    cadence: int = 10
    resolution: int = 64
    hermite_order: int = 12
    modes: int = 32
    k: int = 2
    backend: str = "galerkin"
    eig_tol: float = 1e-10
    adaptive_tol: float = 1e-9
    seed: int = 0
    track_scalars: bool = True
    check_bounds: bool = True
    check_functionals: bool = False
    check_commutator: bool = False
    check_bochner: bool = False
    check_splitting: bool = False
    splitting_t0: float | None = None
    splitting_t1: float | None = None
    out_dir: str = ""

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**raw)
        cfg._validate()
        return cfg

    _STR_KEYS = ("name", "family", "factors", "backend", "out_dir")
    _BOOL_KEYS = (
        "track_scalars",
        "check_bounds",
        "check_functionals",
        "check_commutator",
        "check_bochner",
        "check_splitting",
    )
    _INT_KEYS = ("cadence", "resolution", "hermite_order", "modes", "k", "n", "seed")
    _FLOAT_KEYS = ("u0", "a0", "f0", "t0", "horizon", "dt", "eig_tol", "adaptive_tol")

    def _validate(self) -> None:
        for key in self._STR_KEYS:
            if not isinstance(getattr(self, key), str):
                raise ConfigurationError(f"config key {key} must be a string")
        for key in self._BOOL_KEYS:
            if not isinstance(getattr(self, key), bool):
                raise ConfigurationError(f"config key {key} must be a boolean")
        for key in self._INT_KEYS:
            val = getattr(self, key)
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigurationError(f"config key {key} must be an integer")
        for key in self._FLOAT_KEYS + ("splitting_t0", "splitting_t1"):
            val = getattr(self, key)
            if val is None and key.startswith("splitting"):
                continue
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigurationError(f"config key {key} must be a number")
        if self.family not in ("scaled_gaussian", "round_circle", "product"):
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.backend not in ("galerkin", "analytic"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if self.family == "product" and not self.factors:
            raise ConfigurationError("product family requires a 'factors' string")
        for key, (lo, hi) in _BOUNDS.items():
            val = getattr(self, key)
            if val is None:
                continue
            if not (lo <= val <= hi):
                raise ConfigurationError(f"config key {key} = {val} outside [{lo}, {hi}]")
        if self.modes > self.resolution // 2:
            raise ConfigurationError(
                f"mode cutoff {self.modes} exceeds resolution/2 = {self.resolution // 2}"
            )
        if not isinstance(self.name, str) or not self.name:
            raise ConfigurationError("scenario name must be a nonempty string")
        if self.check_splitting and self.splitting_t1 is not None and self.splitting_t0 is not None:
            if not (self.splitting_t0 < self.splitting_t1):
                raise ConfigurationError("splitting window requires splitting_t0 < splitting_t1")

    def _parse_factor(self, entry: str):
        kind, _, args = entry.partition(":")
        params = {}
        if args:
            for item in args.split(","):
                key, _, value = item.partition("=")
                if not _:
                    raise ConfigurationError(f"malformed factor parameter {item!r}")
                params[key.strip()] = value.strip()
        try:
            if kind.strip() == "scaled_gaussian":
                return scaled_gaussian_family(
                    float(params.get("u0", 1.0)), int(params.get("n", 1)), self.t0
                )
            if kind.strip() == "round_circle":
                return round_circle_family(
                    float(params.get("a0", 1.0)), self.t0, float(params.get("f0", 0.0))
                )
        except ValueError as exc:
            raise ConfigurationError(f"bad factor parameters in {entry!r}: {exc}") from exc
        raise ConfigurationError(f"unknown factor kind {kind!r}")

    def build_family(self):
        if self.family == "scaled_gaussian":
            return scaled_gaussian_family(self.u0, self.n, self.t0)
        if self.family == "round_circle":
            return round_circle_family(self.a0, self.t0, self.f0)
        parts = [p for p in self.factors.split(";") if p.strip()]
        return product_family([self._parse_factor(p) for p in parts])

    def to_request(self) -> RunRequest:
        return RunRequest(
            family=self.build_family(),
            horizon=self.horizon,
            dt=self.dt,
            cadence=self.cadence,
            resolution=self.resolution,
            hermite_order=self.hermite_order,
            modes=self.modes,
            k=self.k,
            backend=self.backend,
            eig_tol=self.eig_tol,
            adaptive_tol=self.adaptive_tol,
            track_scalars=self.track_scalars,
        )

    def canonical_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config document must be a JSON object")
    return ScenarioConfig.from_dict(raw)
