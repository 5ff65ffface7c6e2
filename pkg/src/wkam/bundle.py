"""Report bundles: CSV tables, a JSON summary and an optional markdown digest.

Floats are written with 17 significant digits so that every value survives a
write/read round trip exactly, and all output is byte-stable for a given run.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_PATH = Path(__file__).with_name("schemas") / "bundle.schema.json"
BUNDLE_VERSION = "1"


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _plain(obj: Any) -> Any:
    """Convert numpy containers and scalars into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, 17-digit floats, non-finite floats as null."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None or o is True or o is False:
            return json.dumps(o)
        if isinstance(o, float):
            return fmt_float(o) if math.isfinite(o) else "null"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {enc(o[k], level + 1)}" for k in sorted(o)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(_plain(obj), 0) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header: list[str], rows: list) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_cell(v) for v in r))
    return "\n".join(lines) + "\n"


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class ReportBundle:
    command: str
    config: dict
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> Table
    checks: list = field(default_factory=list)  # dicts with name/passed/value/reference/tolerance
    markdown: str | None = None
    status: str = "ok"

    def add_table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = Table(list(header), [list(r) for r in rows])

    def add_check(self, name: str, passed: bool, value=None, reference=None, tolerance=None, detail: str = "") -> None:
        self.checks.append(
            {
                "name": name,
                "passed": bool(passed),
                "value": value,
                "reference": reference,
                "tolerance": tolerance,
                "detail": detail,
            }
        )

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_json(self) -> dict:
        out = {
            "version": BUNDLE_VERSION,
            "command": self.command,
            "status": self.status,
            "config": self.config,
            "summary": self.summary,
            "tables": {
                name: {"file": f"{name}.csv", "header": t.header, "rows": len(t.rows)}
                for name, t in self.tables.items()
            },
            "checks": self.checks,
        }
        if self.markdown is not None:
            out["digest"] = f"{self.command}.md"
        return out

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, t in self.tables.items():
            p = out / f"{name}.csv"
            p.write_bytes(csv_text(t.header, t.rows).encode("utf-8"))
            written.append(p)
        p = out / f"{self.command}.json"
        p.write_bytes(dumps(self.to_json()).encode("utf-8"))
        written.append(p)
        if self.markdown is not None:
            p = out / f"{self.command}.md"
            p.write_bytes(self.markdown.encode("utf-8"))
            written.append(p)
        return written


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


def validate_bundle_json(obj: dict) -> None:
    """Raise ``jsonschema.ValidationError`` when ``obj`` does not match the bundle schema."""
    import jsonschema

    jsonschema.validate(obj, load_schema())
