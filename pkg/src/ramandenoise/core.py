"""Spectrum and dataset types plus their on-disk formats.

Dataset files are line-delimited JSON: a header object followed by one record
per pair. Python's float repr is the shortest decimal that round-trips, so the
text encoding is bit-exact for 64-bit reals.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateId,
    EmptyInput,
    IoFailure,
    LengthMismatch,
    NonFiniteValue,
    ParseFailure,
)

DEFAULT_LENGTH = 2051
MIN_LENGTH = 8
FORMAT_VERSION = 1
SPLITS = ("train", "test")


def _as_float_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if arr.size == 0:
        raise EmptyInput("empty intensity sequence")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteValue(bad[0])
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fixed-length intensity sequence with an optional wavenumber axis.

    The axis is metadata only; every algorithm works on sample index.
    """

    intensities: np.ndarray
    wavenumber_start: float | None = None
    wavenumber_step: float | None = None

    def __post_init__(self):
        arr = _as_float_array(self.intensities)
        if arr.size < MIN_LENGTH:
            raise LengthMismatch(f"spectrum length {arr.size} < {MIN_LENGTH}")
        object.__setattr__(self, "intensities", arr)
        if (self.wavenumber_start is None) != (self.wavenumber_step is None):
            raise ValueError("wavenumber_start and wavenumber_step must be set together")

    @property
    def length(self) -> int:
        return int(self.intensities.size)

    def __len__(self) -> int:
        return self.length

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.intensities
        return self.intensities.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            np.array_equal(self.intensities, other.intensities)
            and self.wavenumber_start == other.wavenumber_start
            and self.wavenumber_step == other.wavenumber_step
        )

    __hash__ = None

    def axis(self) -> np.ndarray:
        if self.wavenumber_start is None:
            return np.arange(self.length, dtype=np.float64)
        return self.wavenumber_start + self.wavenumber_step * np.arange(self.length)

    def with_values(self, values) -> "Spectrum":
        """Same axis, new intensities."""
        return Spectrum(values, self.wavenumber_start, self.wavenumber_step)


def make_spectrum(values: Sequence[float] | np.ndarray) -> Spectrum:
    return Spectrum(values)


def as_array(x) -> np.ndarray:
    """Intensities of a Spectrum, or a float64 view of any array-like."""
    if isinstance(x, Spectrum):
        return x.intensities
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SpectrumPair:
    id: str
    clean: Spectrum
    noisy: Spectrum
    target_snr_db: float
    realized_snr_db: float
    seed: int

    def __post_init__(self):
        if self.clean.length != self.noisy.length:
            raise LengthMismatch(
                f"pair {self.id}: clean length {self.clean.length} != noisy length {self.noisy.length}"
            )
        # +inf is the no-noise sentinel; it is the only non-finite value allowed
        if math.isnan(self.realized_snr_db) or (
            math.isinf(self.realized_snr_db) and not math.isinf(self.target_snr_db)
        ):
            raise NonFiniteValue(0, f"pair {self.id}: realized SNR {self.realized_snr_db}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed {self.seed} outside u64 range")

    @property
    def length(self) -> int:
        return self.clean.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectrumPair):
            return NotImplemented
        return (
            self.id == other.id
            and self.clean == other.clean
            and self.noisy == other.noisy
            and _same_float(self.target_snr_db, other.target_snr_db)
            and _same_float(self.realized_snr_db, other.realized_snr_db)
            and self.seed == other.seed
        )

    __hash__ = None


def _same_float(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


@dataclass(frozen=True, eq=False)
class Dataset:
    pairs: tuple[SpectrumPair, ...]
    split: str
    generator_config_digest: str = ""
    _length: int = field(default=0, repr=False)

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        lengths = {p.length for p in pairs}
        if len(lengths) > 1:
            raise LengthMismatch(f"dataset mixes spectrum lengths {sorted(lengths)}")
        if lengths:
            object.__setattr__(self, "_length", lengths.pop())
        seen = set()
        for p in pairs:
            if p.id in seen:
                raise DuplicateId(f"duplicate pair id {p.id!r}")
            seen.add(p.id)

    @property
    def length(self) -> int:
        """Common spectrum length (0 for an empty dataset)."""
        return self._length

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.split == other.split
            and self.generator_config_digest == other.generator_config_digest
            and self.pairs == other.pairs
        )

    __hash__ = None

    def clean_matrix(self) -> np.ndarray:
        return np.stack([p.clean.intensities for p in self.pairs])

    def noisy_matrix(self) -> np.ndarray:
        return np.stack([p.noisy.intensities for p in self.pairs])


# --------------------------------------------------------------------------
# dataset files


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=True)


def dataset_lines(d: Dataset) -> Iterable[str]:
    yield _dump(
        {
            "format_version": FORMAT_VERSION,
            "length": d.length,
            "split": d.split,
            "generator_config_digest": d.generator_config_digest,
        }
    )
    for p in d.pairs:
        yield _dump(
            {
                "id": p.id,
                "target_snr_db": float(p.target_snr_db),
                "realized_snr_db": float(p.realized_snr_db),
                "seed": int(p.seed),
                "clean": p.clean.intensities.tolist(),
                "noisy": p.noisy.intensities.tolist(),
            }
        )


def write_dataset(d: Dataset, destination) -> None:
    """Write ``d`` to a path or a text stream."""
    text = "".join(line + "\n" for line in dataset_lines(d))
    if isinstance(destination, io.TextIOBase):
        destination.write(text)
        return
    try:
        Path(destination).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_dataset(source) -> Dataset:
    if isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
    lines = text.splitlines()
    if not lines:
        raise ParseFailure(1, "missing header")
    header = _parse_line(lines[0], 1)
    try:
        version = header["format_version"]
        length = int(header["length"])
        split = header["split"]
        digest = header.get("generator_config_digest", "")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseFailure(1, f"bad header: {exc}") from exc
    if version != FORMAT_VERSION:
        raise ParseFailure(1, f"unsupported format_version {version}")

    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rec = _parse_line(line, lineno)
        try:
            clean = Spectrum(rec["clean"])
            noisy = Spectrum(rec["noisy"])
            pair = SpectrumPair(
                id=str(rec["id"]),
                clean=clean,
                noisy=noisy,
                target_snr_db=float(rec["target_snr_db"]),
                realized_snr_db=float(rec["realized_snr_db"]),
                seed=int(rec["seed"]),
            )
        except (KeyError, TypeError) as exc:
            raise ParseFailure(lineno, f"bad record: {exc}") from exc
        if pair.length != length:
            raise LengthMismatch(f"line {lineno}: record length {pair.length} != header length {length}")
        pairs.append(pair)
    return Dataset(tuple(pairs), split, digest)


def _parse_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseFailure(lineno, exc.msg) from exc
    if not isinstance(obj, dict):
        raise ParseFailure(lineno, "expected an object")
    return obj


# --------------------------------------------------------------------------
# single-spectrum CSV


def write_spectrum_csv(s: Spectrum, destination, comment: str | None = None) -> None:
    buf = io.StringIO()
    if comment:
        buf.write("# " + comment.replace("\n", " ") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if s.wavenumber_start is None:
        w.writerow(["index", "intensity"])
        for i, v in enumerate(s.intensities.tolist()):
            w.writerow([i, repr(v)])
    else:
        w.writerow(["wavenumber", "intensity"])
        for x, v in zip(s.axis().tolist(), s.intensities.tolist()):
            w.writerow([repr(x), repr(v)])
    try:
        Path(destination).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_spectrum_csv(source) -> Spectrum:
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    rows = []
    column = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            if rows or column is not None or lineno > 1:
                raise ParseFailure(lineno, "comment allowed only on the first line")
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseFailure(lineno, "expected two columns")
        if column is None and parts[0] in ("index", "wavenumber"):
            column = parts[0]
            continue
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParseFailure(lineno, str(exc)) from exc
    if not rows:
        raise EmptyInput(f"{os.fspath(source)}: no data rows")
    xs = np.array([r[0] for r in rows])
    values = [r[1] for r in rows]
    if column == "wavenumber" and len(xs) > 1:
        return Spectrum(values, float(xs[0]), float(xs[1] - xs[0]))
    return Spectrum(values)
