"""Shared output helper for the reproduction scripts."""

from __future__ import annotations

import argparse
from pathlib import Path

from moentangle.tables import write_csv


def out_dir(description: str) -> Path:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--out-dir", default="results", help="directory for CSV output")
    path = Path(parser.parse_args().out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save(path: Path, columns: dict, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(fh, columns, meta)
    print(f"wrote {path}")
