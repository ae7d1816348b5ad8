"""Serialization of run results and front dumps."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from l2nsga.engine import RunConfig, RunResult
from l2nsga.instance import Instance, format_instance

RESULT_FORMAT = "l2nsga-result v1"


def instance_digest(instance: Instance) -> str:
    """Content hash of the raw instance text, used to tell instances apart."""
    return hashlib.sha256(format_instance(instance).encode()).hexdigest()


def _bits(x) -> str:
    return "".join("1" if v else "0" for v in x)


def _unbits(s: str) -> np.ndarray:
    if set(s) - {"0", "1"}:
        raise ValueError(f"bad chromosome string {s!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) == ord("1")


def result_payload(result: RunResult, digest: str = "") -> dict:
    """Deterministic content of a run; wall time is deliberately left out."""
    return {
        "format": RESULT_FORMAT,
        "algorithm": result.algorithm,
        "seed": result.seed,
        "instance": result.instance_name,
        "instance_sha256": digest,
        "config": result.config.to_dict(),
        "evaluations": result.evaluations,
        "generations": result.generations,
        "linkage_inferences": result.linkage_inferences,
        "snapshots": [{"generation": g, "front": F.tolist()} for g, F in result.snapshots],
        "front": [{"x": _bits(x), "f": f.tolist()} for x, f in zip(result.front_X, result.front_F)],
    }


def dumps_result(result: RunResult, digest: str = "") -> str:
    return json.dumps(result_payload(result, digest), indent=1) + "\n"


def write_result(result: RunResult, path, digest: str = "") -> Path:
    """Write the payload to ``path`` and the wall time to a ``.timing.json`` sidecar."""
    path = Path(path)
    path.write_text(dumps_result(result, digest))
    timing_path(path).write_text(json.dumps({"wall_time": result.wall_time}) + "\n")
    return path


def timing_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name.removesuffix(".json") + ".timing.json")


class StoredResult:
    """A result file read back: metadata plus the final front."""

    def __init__(self, payload: dict, path: Path | None = None):
        if payload.get("format") != RESULT_FORMAT:
            raise ValueError(f"{path}: not a result file")
        self.path = path
        self.payload = payload
        self.algorithm = payload["algorithm"]
        self.seed = int(payload["seed"])
        self.instance = payload["instance"]
        self.instance_sha256 = payload["instance_sha256"]
        self.config = RunConfig(**payload["config"])
        rows = payload["front"]
        n = len(rows[0]["x"]) if rows else 0
        self.front_X = np.array([_unbits(r["x"]) for r in rows], dtype=bool).reshape(len(rows), n)
        self.front_F = np.array([r["f"] for r in rows], dtype=np.float64).reshape(len(rows), 3)


def read_result(path) -> StoredResult:
    path = Path(path)
    return StoredResult(json.loads(path.read_text()), path)


def format_front(X: np.ndarray, F: np.ndarray) -> str:
    """One point per line: chromosome bits then the three objective values."""
    return "".join(f"{_bits(x)} {' '.join(repr(float(v)) for v in f)}\n" for x, f in zip(X, F))
