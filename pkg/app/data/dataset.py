"""
Dataset module.
This module handles loading, validating and aligning samples from CSV files.
"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from app.errors import AlignmentError, DatasetError, SampleSizeError

logger = logging.getLogger(__name__)

MIN_SPLIT_SIZE = 8

_LINE_PATTERN = re.compile(r"line (\d+)")


class CsvOptions(BaseModel):
    """Options controlling how a CSV file is parsed into a sample."""
    delimiter: str = ","
    has_header: bool = False
    column_range: Optional[Tuple[int, int]] = Field(
        default=None, description="Half-open 0-based column range [start, stop)"
    )

    @field_validator("delimiter")
    @classmethod
    def _single_character(cls, value):
        if len(value) != 1:
            raise ValueError("delimiter must be a single character")
        return value


@dataclass(frozen=True)
class Sample:
    """
    Observations of one random variable.

    Rows are observations, columns are features. The matrix is read-only once built.
    """
    data: np.ndarray
    label: str = "sample"

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2:
            raise DatasetError(f"sample '{self.label}' must be a 2-d matrix, got {data.ndim} dimensions")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DatasetError(f"sample '{self.label}' is empty (shape {data.shape})")
        bad = np.argwhere(~np.isfinite(data))
        if bad.size:
            row, column = bad[0]
            raise DatasetError(
                f"non-finite value {data[row, column]!r} in sample '{self.label}'",
                row=int(row) + 1, column=int(column) + 1,
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def take(self, rows) -> "Sample":
        """Return a new sample made of the given rows, in the given order."""
        return Sample(self.data[np.asarray(rows)], label=self.label)


@dataclass(frozen=True)
class JointSample:
    """Aligned samples: row i of x, y and z describes the same unit."""
    x: Sample
    y: Sample
    z: Optional[Sample] = None

    def __post_init__(self):
        sizes = [self.x.m, self.y.m] + ([self.z.m] if self.z is not None else [])
        if len(set(sizes)) != 1:
            raise AlignmentError(f"sample sizes {','.join(str(s) for s in sizes)} differ")

    @property
    def m(self) -> int:
        return self.x.m

    def take(self, rows) -> "JointSample":
        return JointSample(
            x=self.x.take(rows),
            y=self.y.take(rows),
            z=self.z.take(rows) if self.z is not None else None,
        )


def load_csv(path, options: Optional[CsvOptions] = None, label: Optional[str] = None) -> Sample:
    """
    Load a numeric CSV file into a sample.

    Args:
        path (str | Path): The file to read (UTF-8)
        options (CsvOptions, optional): Delimiter, header flag and column range
        label (str, optional): Identifier of the sample; defaults to the file stem

    Returns:
        Sample: One row per data line, one column per selected field

    Raises:
        DatasetError: On I/O failure, ragged rows, non-numeric or non-finite cells,
            or an empty selection. Row numbers refer to lines in the file.
    """
    options = options or CsvOptions()
    path = Path(path)
    label = label or path.stem
    first_line = 2 if options.has_header else 1

    try:
        frame = pd.read_csv(
            path,
            sep=options.delimiter,
            header=None,
            skiprows=1 if options.has_header else 0,
            dtype=str,
            na_filter=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except FileNotFoundError as e:
        raise DatasetError("file not found", path=path) from e
    except pd.errors.EmptyDataError as e:
        raise DatasetError("no data rows", path=path) from e
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        row = int(match.group(1)) if match else None
        raise DatasetError("ragged row: field count differs from the first row", path=path, row=row) from e
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetError(f"cannot read file: {e}", path=path) from e

    if frame.empty:
        raise DatasetError("no data rows", path=path)

    missing = frame.isna().to_numpy()
    if missing.any():
        row = int(np.argwhere(missing)[0][0])
        raise DatasetError("ragged row: too few fields", path=path, row=row + first_line)

    width = frame.shape[1]
    start, stop = options.column_range if options.column_range is not None else (0, width)
    if not 0 <= start < stop <= width:
        raise DatasetError(f"empty column selection [{start}, {stop}) for {width} columns", path=path)
    frame = frame.iloc[:, start:stop]

    columns = []
    for offset, name in enumerate(frame.columns):
        raw = frame[name].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            row = int(bad[0])
            cell = raw.iloc[row]
            kind = "non-finite" if _is_float(cell) else "non-numeric"
            raise DatasetError(
                f"{kind} cell {cell!r}", path=path, row=row + first_line, column=start + offset + 1
            )
        # to_numeric may be off by one ulp; float() rounds correctly
        columns.append(raw.map(float).to_numpy(dtype=float))

    sample = Sample(np.column_stack(columns), label=label)
    logger.info("Loaded %s: m=%d d=%d", path, sample.m, sample.d)
    return sample


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def save_csv(sample: Sample, path, delimiter: str = ",", header: Optional[list] = None) -> Path:
    """
    Write a sample as CSV with enough digits to reload it exactly.

    Args:
        sample (Sample): The sample to write
        path (str | Path): Destination file; parent directories are created
        delimiter (str): Field separator
        header (list, optional): Column names written as a first row

    Returns:
        Path: The written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path,
        sample.data,
        fmt="%.17g",
        delimiter=delimiter,
        header=delimiter.join(header) if header else "",
        comments="",
        encoding="utf-8",
    )
    return path


def align(x: Sample, y: Sample, z: Optional[Sample] = None) -> JointSample:
    """
    Pair samples observed on the same units.

    Raises:
        AlignmentError: If the observation counts differ
    """
    return JointSample(x=x, y=y, z=z)


def shuffled(j: JointSample, seed: int) -> JointSample:
    """Apply one seeded row permutation to every sample of j."""
    order = np.random.default_rng(seed).permutation(j.m)
    return j.take(order)


def split_half(j: JointSample, shuffle: bool = False, seed: Optional[int] = None) -> Tuple[JointSample, JointSample]:
    """
    Split a joint sample into the two halves used by the independent test.

    The first half keeps rows 1..m//2 of X paired with Y, the second half keeps
    the next m//2 rows of X paired with Z (stored in the ``y`` slot). With odd m
    the last row is dropped.

    Args:
        j (JointSample): Aligned X, Y, Z
        shuffle (bool): Permute rows with ``seed`` before splitting
        seed (int, optional): Seed of the permutation

    Returns:
        tuple: (X' with Y', X'' with Z'')

    Raises:
        SampleSizeError: If m < 8
    """
    if j.z is None:
        raise AlignmentError("split_half needs a Z sample")
    if j.m < MIN_SPLIT_SIZE:
        raise SampleSizeError(f"independent split needs m >= {MIN_SPLIT_SIZE}, got m={j.m}")
    if shuffle:
        j = shuffled(j, 0 if seed is None else seed)

    half = j.m // 2
    first = np.arange(half)
    second = np.arange(half, 2 * half)
    if j.m % 2:
        logger.info("Odd sample size %d: dropping the last row before splitting", j.m)
    return (
        JointSample(x=j.x.take(first), y=j.y.take(first)),
        JointSample(x=j.x.take(second), y=j.z.take(second)),
    )
