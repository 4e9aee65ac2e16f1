"""Run every shipped sweep configuration and write its table.

Usage:
  python backend/scripts/reproduce_figures.py [--only NAME] [--force] [--workers N]

Example:
  python backend/scripts/reproduce_figures.py --only winding_table

Configurations are the TOML files in backend/data/sweeps/. Each table is written
to the output directory configured in `config.settings` (OUTPUT_DIR) under the
name given in the file's [output] table. Existing tables are kept unless
--force is given.
"""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List

from config import settings
from backend.src.nhqc.errors import NhqcError
from backend.src.nhqc.sweep import SweepConfig, run_sweep

SWEEPS_DIR = Path(__file__).resolve().parents[1] / "data" / "sweeps"


def sweep_files(only: List[str]) -> List[Path]:
    files = sorted(SWEEPS_DIR.glob("*.toml"))
    if only:
        files = [f for f in files if f.stem in only]
    return files


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--only", action="append", default=[], help="Sweep file stem to run (repeatable)")
    parser.add_argument("--force", action="store_true", help="Overwrite existing tables")
    parser.add_argument("--workers", type=int, default=None, help="Worker count (default NHQC_WORKERS)")
    args = parser.parse_args()

    logging.basicConfig(level=settings.LOG_LEVEL)

    files = sweep_files(args.only)
    if not files:
        print("No sweep configurations found - nothing to do")
        return

    out_dir = Path(settings.OUTPUT_DIR)
    if not out_dir.is_absolute():
        out_dir = Path.cwd() / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    created = 0
    skipped = 0
    failed = 0

    for path in files:
        config = SweepConfig.from_toml(path)
        fmt = config.output.format
        target = out_dir / f"{config.output.name}.{fmt}"
        if target.exists() and not args.force:
            print(f"Exists, skipping: {target}")
            skipped += 1
            continue

        try:
            result = run_sweep(config, workers=args.workers)
        except NhqcError as e:
            print(f"Failed to run {path.name}: {e}")
            failed += 1
            continue
        result.write(target, fmt)
        print(f"Created: {target} ({len(result.rows)} rows, {len(result.failed_rows)} failed)")
        created += 1

    print(f"Done. Created: {created}, Skipped: {skipped}, Failed: {failed}. Tables are in: {out_dir}")


if __name__ == "__main__":
    main()
