"""Deterministic CSV/JSON artifacts stamped with seed, config hash and version."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from importlib import metadata

NON_SEMANTIC = {"out", "threads", "config"}


def version_string() -> str:
    try:
        return "v" + metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "v0.0.0-unknown"


def config_hash(config: dict) -> str:
    """Hash of the settings that affect numbers (output path and threads excluded)."""
    payload = {k: v for k, v in config.items() if k not in NON_SEMANTIC}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def stamp(config: dict) -> dict:
    return {"seed": config.get("seed"), "config_hash": config_hash(config), "version": version_string()}


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, bool):
        return int(x)
    return x


def csv_text(rows: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    for k in sorted(meta):
        buf.write(f"# {k}={meta[k]}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def json_text(payload: dict, meta: dict) -> str:
    return json.dumps({"meta": meta, **payload}, indent=2, sort_keys=True, default=str) + "\n"


def emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
