"""Run configuration: flat key=value files, flag overrides, fingerprints."""

import hashlib
from dataclasses import dataclass, fields, replace


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


@dataclass(frozen=True)
class RunConfig:
    d: int = 2
    K: int = 6
    grid_n: int = 32
    box: float = 6.283185307179586
    eps: tuple = (0.4, 0.2, 0.1, 0.05)
    dt: float = 1.0 / 256.0
    T: float = 0.5
    ell: float = 2.0
    k: float = 3.0
    model: str = "hard_sphere"
    rate: float = 1.0
    amplitude: float = 0.3
    seed: int = 20240
    output_dir: str = "artifacts/out"
    cache_dir: str = "artifacts/cache"

    def fingerprint(self):
        items = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("output_dir",):
                continue
            items.append(f"{f.name}={v!r}")
        return hashlib.sha256("\n".join(items).encode()).hexdigest()[:16]

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


_PARSERS = {
    "d": int,
    "K": int,
    "grid_n": int,
    "box": float,
    "eps": lambda s: tuple(
        float(x) for x in (s.split(",") if isinstance(s, str) else s) if str(x).strip()
    ),
    "dt": float,
    "T": float,
    "ell": float,
    "k": float,
    "model": str,
    "rate": float,
    "amplitude": float,
    "seed": int,
    "output_dir": str,
    "cache_dir": str,
}


def _validate(cfg):
    if cfg.d not in (2, 3):
        raise ConfigError("d must be 2 or 3")
    if cfg.K < 2:
        raise ConfigError("K >= 2 required (the equilibrium manifold is quadratic)")
    if cfg.grid_n < 4 or (cfg.grid_n & (cfg.grid_n - 1)) != 0:
        raise ConfigError("grid_n must be a power of two >= 4")
    for name in ("box", "dt", "T", "rate", "amplitude"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if not cfg.eps or any(e <= 0 for e in cfg.eps):
        raise ConfigError("eps must be a non-empty list of positive values")
    if not cfg.ell > cfg.d / 2:
        raise ConfigError(f"ell > d/2 required (ell={cfg.ell}, d={cfg.d})")
    if not cfg.k > cfg.d / 2 + 1:
        raise ConfigError(f"k > d/2+1 required (k={cfg.k}, d={cfg.d})")
    if cfg.model not in ("hard_sphere", "bgk"):
        raise ConfigError("model must be 'hard_sphere' or 'bgk'")
    return cfg


def parse_config(path=None, overrides=None):
    """Build a validated RunConfig from an optional file plus overrides.

    The file format is flat ``key = value`` text ('#' comments allowed);
    flag overrides win over file entries.  Unknown keys raise with the
    list of valid ones.
    """
    values = {}

    def ingest(key, raw, where):
        key = key.strip().replace("-", "_")
        if key not in _PARSERS:
            raise ConfigError(
                f"unknown configuration key {key!r} ({where}); "
                f"valid keys: {', '.join(sorted(_PARSERS))}"
            )
        try:
            values[key] = _PARSERS[key](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r} ({where}): {raw!r}") from exc

    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = line.split("=", 1)
                ingest(key, raw.strip(), f"{path}:{lineno}")
    for key, raw in (overrides or {}).items():
        if raw is not None:
            ingest(key, raw, "flag")
    return _validate(replace(RunConfig(), **values))
