"""Experiment records and their CSV/JSON serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

from .errors import IoFailure

CSV_COLUMNS = ("experiment", "sigma", "A", "A_over_A0", "regime", "q", "N",
               "value", "stderr", "components_json", "seed")
PARAM_COLUMNS = ("sigma", "A", "A_over_A0", "regime", "q", "N")


@dataclass
class ExperimentRecord:
    experiment: str
    params: dict
    value: float
    stderr: float | None
    seed: int
    wall_ms: int = 0
    components: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.value is not None and math.isfinite(self.value)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        extra = {k: v for k, v in r.params.items() if k not in PARAM_COLUMNS}
        comp = dict(r.components)
        if extra:
            comp["params"] = extra
        if r.error is not None:
            comp["error"] = r.error
        value = "error" if r.error is not None else _fmt(r.value)
        w.writerow([r.experiment] + [_fmt(r.params.get(c)) for c in PARAM_COLUMNS]
                   + [value, _fmt(r.stderr), json.dumps(_clean(comp), sort_keys=True), r.seed])
    return buf.getvalue()


def to_json(records) -> str:
    return json.dumps([_clean(asdict(r)) for r in records], indent=1, sort_keys=True)


def from_json(text: str) -> list[ExperimentRecord]:
    return [ExperimentRecord(**d) for d in json.loads(text)]


def write(records, path, fmt: str = "csv") -> None:
    """Write all records at once through a temporary file and rename."""
    text = to_csv(records) if fmt == "csv" else to_json(records)
    if path in (None, "-"):
        print(text, end="" if text.endswith("\n") else "\n")
        return
    try:
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".phi3lab-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
