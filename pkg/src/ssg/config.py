"""Experiment configuration files.

An experiment config is a JSON object::

    {
      "subspace": {"k": 1, "constraints": [{"prefix": [0.6, 0.8], "tail": null, "offset": 5.0}]},
      "N": 41,
      "phi": {"kind": "cosine_character", "t": [1.0]},
      "n_list": [50, 100, 200, 400, 800, 1600, 3200],
      "n_mc": 1000000,
      "seed": 1,
      "tol": 0.005,
      "quad_tol": 1e-9
    }

Only ``subspace`` and ``phi`` are required.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .geometry import AffineConstraintSet
from .measures import TestFunction

DEFAULT_N_LIST = (50, 100, 200, 400, 800, 1600, 3200)


@dataclass(frozen=True)
class ExperimentConfig:
    subspace: AffineConstraintSet
    phi: TestFunction
    N: int = 41
    n_list: tuple = DEFAULT_N_LIST
    n_mc: int = 100_000
    seed: int = 1
    tol: float = 5e-3
    quad_tol: float = 1e-9
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {"subspace", "phi", "N", "n_list", "n_mc", "seed", "tol", "quad_tol", "name", "description"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("subspace", "phi"):
            if key not in doc:
                raise ConfigError(f"config is missing {key!r}")
        L = AffineConstraintSet.from_dict(doc["subspace"])
        if not isinstance(doc["phi"], dict):
            raise ConfigError("phi must be a JSON object")
        phi = TestFunction.from_dict(doc["phi"])
        phi.check_dim(L.k)
        try:
            out = cls(
                L, phi,
                N=_int(doc.get("N", 41), "N"),
                n_list=tuple(_int(n, "n_list entry") for n in doc.get("n_list", DEFAULT_N_LIST)),
                n_mc=_int(doc.get("n_mc", 100_000), "n_mc"),
                seed=_int(doc.get("seed", 1), "seed"),
                tol=float(doc.get("tol", 5e-3)),
                quad_tol=float(doc.get("quad_tol", 1e-9)),
                extra={k: doc[k] for k in ("name", "description") if k in doc},
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return out

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        out = dict(self.extra)
        out.update({
            "subspace": self.subspace.to_dict(),
            "phi": self.phi.to_dict(),
            "N": self.N,
            "n_list": list(self.n_list),
            "n_mc": self.n_mc,
            "seed": self.seed,
            "tol": self.tol,
            "quad_tol": self.quad_tol,
        })
        return out


def _int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{what} must be an integer, got {v!r}")
    return int(v)
