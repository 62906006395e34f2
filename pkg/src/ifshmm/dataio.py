"""JSON model configs, observation CSVs and run manifests."""
from __future__ import annotations

import csv
import io
import json
import os
import platform
import time
from pathlib import Path

from .exceptions import ModelError
from .model import ModelFamily, ObservationSequence


def fmt(x) -> str:
    """Round-trip formatting for floats (17 significant digits)."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    try:
        return format(float(x), ".17g")
    except (TypeError, ValueError):
        return str(x)


def load_model(path) -> ModelFamily:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelError(f"{path}: cannot read model config ({exc.strerror})") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    if not isinstance(config, dict):
        raise ModelError(f"{path}: model config must be a JSON object")
    try:
        return ModelFamily.from_config(config)
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from None


def save_model(family: ModelFamily, path, theta=None) -> None:
    Path(path).write_text(json.dumps(family.to_config(theta), indent=2) + "\n")


def obs_to_csv(seq: ObservationSequence) -> str:
    buf = io.StringIO()
    if seq.seed is not None:
        buf.write(f"# seed={seq.seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if seq.hidden is not None:
        writer.writerow(["t", "xi", "hidden_state"])
        for t, (xi, h) in enumerate(zip(seq.obs, seq.hidden)):
            writer.writerow([t, fmt(xi), int(h)])
    else:
        writer.writerow(["t", "xi"])
        for t, xi in enumerate(seq.obs):
            writer.writerow([t, fmt(xi)])
    return buf.getvalue()


def read_obs(path) -> ObservationSequence:
    """Parse an observation CSV (``t,xi[,hidden_state]``, ``#`` comment lines).

    A ``# seed=N`` comment is picked up as the recorded seed.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ModelError(f"{path}: cannot read observations ({exc.strerror})") from None
    seed = None
    header = None
    obs, hidden = [], []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.startswith("seed="):
                try:
                    seed = int(body.split("=", 1)[1])
                except ValueError:
                    raise ModelError(f"{path}:{lineno}: bad seed comment {body!r}") from None
            continue
        fields = next(csv.reader([stripped]))
        if header is None:
            header = [f.strip() for f in fields]
            if "xi" not in header:
                raise ModelError(f"{path}:{lineno}: header must contain an 'xi' column")
            continue
        if len(fields) != len(header):
            raise ModelError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        row = dict(zip(header, fields))
        try:
            obs.append(float(row["xi"]))
        except ValueError:
            raise ModelError(f"{path}:{lineno}: field 'xi' is not a number: {row['xi']!r}") from None
        if "hidden_state" in row:
            try:
                hidden.append(int(row["hidden_state"]))
            except ValueError:
                raise ModelError(
                    f"{path}:{lineno}: field 'hidden_state' is not an integer") from None
    if header is None or not obs:
        raise ModelError(f"{path}: no observations")
    return ObservationSequence(obs, hidden if hidden else None, seed)


def table_to_csv(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in columns]
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_manifest(out_path, subcommand, config=None, data=None, seed=None, outputs=(),
                   argv=(), version="") -> Path:
    """Record how an output was produced, next to it (one manifest per directory)."""
    out_dir = Path(out_path).resolve().parent
    manifest = {
        "subcommand": subcommand,
        "config": None if config is None else os.fspath(config),
        "data": None if data is None else os.fspath(data),
        "seed": seed,
        "tool_version": version,
        "python": platform.python_version(),
        "argv": list(argv),
        "outputs": [Path(o).name for o in outputs],
        "wall_clock": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
