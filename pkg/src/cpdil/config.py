"""Tolerances and run parameters, overridable from a JSON file."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace

TOL_VERIFY = 1e-9
TOL_CONSTRUCT = 1e-12
RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class Config:
    tol_verify: float = TOL_VERIFY
    tol_construct: float = TOL_CONSTRUCT
    rank_threshold: float = RANK_THRESHOLD
    level: int = 2
    horizon: int = 3
    radius: int = 2
    seed: int = 0
    probes: int = 20

    def __post_init__(self):
        for name in ("tol_verify", "tol_construct", "rank_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.horizon < 1 or self.radius < 1:
            raise ValueError("horizon and radius must be at least 1")
        if self.level < 0:
            raise ValueError("level must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **kwargs) -> "Config":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def load_config(path: str | os.PathLike | None = None, **overrides) -> Config:
    """Defaults, then the JSON file at ``path``, then keyword overrides."""
    cfg = Config()
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **data)
    return cfg.updated(**overrides)


def thread_count() -> int:
    """Worker cap from ``CPDIL_THREADS``; 1 when unset or invalid."""
    try:
        return max(1, int(os.environ.get("CPDIL_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Order-preserving map, threaded when ``CPDIL_THREADS`` > 1."""
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
