"""
Report emission: canonical JSON envelopes, JSON-lines ladders and plot-ready CSV.

Reports are byte-reproducible: keys are sorted, floats use the shortest round-trip
repr, and no timestamp or run id is ever written.
"""

import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from eikolab import __version__
from eikolab.core.logging import get_logger
from eikolab.reports.models import ReportEnvelope
from eikolab.tools.characteristics import Characteristic

logger = get_logger()

PathLike = Union[str, Path]


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types from models, numpy scalars/arrays and tuples; non-finite floats become null."""
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: Mapping[str, Any]) -> str:
    """sha256 hex digest of the canonical JSON form of a run configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def build_envelope(command: str, digest: str, records: Sequence[Any]) -> ReportEnvelope:
    return ReportEnvelope(
        version=__version__,
        command=command,
        config_hash=digest,
        records=[to_jsonable(r) for r in records],
    )


def _emit(text: str, path: Optional[PathLike]) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text, encoding="utf-8")


def write_report(envelope: ReportEnvelope, path: Optional[PathLike] = None) -> None:
    """Pretty-printed JSON envelope (stdout when no path is given)."""
    text = json.dumps(to_jsonable(envelope), sort_keys=True, indent=2, allow_nan=False) + "\n"
    _emit(text, path)
    logger.debug("Report written", path=str(path or "-"), records=len(envelope.records))


def write_ladder(envelope: ReportEnvelope, path: Optional[PathLike] = None) -> None:
    """One JSON object per line, each carrying the envelope header fields."""
    header = {
        "tool": envelope.tool,
        "version": envelope.version,
        "command": envelope.command,
        "config_hash": envelope.config_hash,
    }
    lines = [canonical_json({**header, **record}) for record in envelope.records]
    _emit("".join(line + "\n" for line in lines), path)
    logger.debug("Ladder written", path=str(path or "-"), records=len(lines))


def read_ladder(path: PathLike) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def characteristics_frame(chars: Iterable[Characteristic]) -> pd.DataFrame:
    """Long-format polylines: one row per traced point with its seed index."""
    frames = [
        pd.DataFrame({"seed": n, "t": c.times, "x1": c.points[:, 0], "x2": c.points[:, 1]})
        for n, c in enumerate(chars)
    ]
    if not frames:
        return pd.DataFrame(columns=["seed", "t", "x1", "x2"])
    return pd.concat(frames, ignore_index=True)


def write_characteristics(chars: Iterable[Characteristic], path: PathLike) -> int:
    frame = characteristics_frame(chars)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug("Characteristics exported", path=str(path), rows=len(frame))
    return len(frame)
