"""Monte Carlo marginal samples with provenance, and their CSV persistence."""
from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


class IntegrityError(RuntimeError):
    """A reloaded ensemble does not match its sidecar."""


def fingerprint(config: dict) -> str:
    """Content hash of a JSON-serializable generating configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()


def fmt(x: float) -> str:
    """17 significant digits: round-trips every float64."""
    return format(float(x), ".17g")


@dataclass
class Ensemble:
    t_grid: tuple[float, ...]
    samples: np.ndarray  # shape (n_paths, len(t_grid))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = tuple(float(t) for t in self.t_grid)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.t_grid):
            raise ValueError("samples must have shape (n_paths, len(t_grid))")

    @property
    def n_paths(self) -> int:
        return self.samples.shape[0]

    def at(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(np.asarray(self.t_grid) - t)))
        if abs(self.t_grid[idx] - t) > 1e-9:
            raise KeyError(f"t={t} not in ensemble grid {self.t_grid}")
        return self.samples[:, idx]

    def to_csv_text(self) -> str:
        lines = ["path," + ",".join(f"t={fmt(t)}" for t in self.t_grid)]
        for p, row in enumerate(self.samples):
            lines.append(str(p) + "," + ",".join(fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path, extra_meta: dict | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = self.to_csv_text()
        path.write_text(text)
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        meta["data_sha256"] = hashlib.sha256(text.encode()).hexdigest()
        meta.setdefault("versions", {"cbdilab": __version__, "numpy": np.__version__,
                                     "python": platform.python_version()})
        sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=float))
        return path


def sidecar(path: Path) -> Path:
    return Path(str(path) + ".meta.json")


def read_ensemble(path: str | Path) -> Ensemble:
    """Load an ensemble CSV, verifying the data and configuration hashes."""
    path = Path(path)
    text = path.read_text()
    meta = json.loads(sidecar(path).read_text())
    if hashlib.sha256(text.encode()).hexdigest() != meta.get("data_sha256"):
        raise IntegrityError(f"{path}: data hash does not match sidecar")
    if "config" in meta and fingerprint(meta["config"]) != meta.get("fingerprint"):
        raise IntegrityError(f"{path}: configuration fingerprint does not match sidecar")
    rows = text.strip().split("\n")
    header = rows[0].split(",")[1:]
    t_grid = [float(h.split("=", 1)[1]) for h in header]
    data = np.array([[float(v) for v in r.split(",")[1:]] for r in rows[1:]], dtype=float)
    return Ensemble(tuple(t_grid), data.reshape(len(rows) - 1, len(t_grid)), meta)
