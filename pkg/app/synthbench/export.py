"""
Export module.
This module writes experiment outputs as CSV tables and JSON summaries named
{experiment}_{m}_{seed}.csv / .json.
"""
import json
import logging
from pathlib import Path

import pandas as pd

from app.config.settings import OUTPUT_DIR
from app.data.dataset import save_csv
from app.synthbench.generators import SynthConfig, sample_synthetic

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


def output_name(experiment: str, m: int, seed: int, suffix: str) -> str:
    return f"{experiment}_{m}_{seed}.{suffix}"


def write_table(frame: pd.DataFrame, experiment: str, m: int, seed: int, outdir=OUTPUT_DIR) -> Path:
    """
    Write one experiment table as CSV with a header row.

    Returns:
        Path: The written file
    """
    path = Path(outdir) / output_name(experiment, m, seed, "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def write_summary(summary: dict, experiment: str, m: int, seed: int, outdir=OUTPUT_DIR) -> Path:
    """Write the JSON summary of an experiment, keys in insertion order."""
    path = Path(outdir) / output_name(experiment, m, seed, "json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def write_samples(c: SynthConfig, outdir=OUTPUT_DIR) -> dict:
    """
    Write one synthetic draw as x.csv, y.csv and z.csv.

    Returns:
        dict: Variable name to written path
    """
    j = sample_synthetic(c)
    outdir = Path(outdir)
    return {
        "x": save_csv(j.x, outdir / "x.csv"),
        "y": save_csv(j.y, outdir / "y.csv"),
        "z": save_csv(j.z, outdir / "z.csv"),
    }
