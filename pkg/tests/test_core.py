import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ramandenoise.core import (
    Dataset,
    Spectrum,
    SpectrumPair,
    dataset_lines,
    make_spectrum,
    read_dataset,
    read_spectrum_csv,
    write_dataset,
    write_spectrum_csv,
)
from ramandenoise.errors import (
    DuplicateId,
    EmptyInput,
    LengthMismatch,
    NonFiniteValue,
    ParseFailure,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def _pair(i, n=16, seed=0):
    r = np.random.default_rng(seed + i)
    clean = r.uniform(0, 10, n)
    return SpectrumPair(f"p{i}", Spectrum(clean), Spectrum(clean + r.normal(size=n)),
                        9.5, 9.3 + 0.01 * i, 2**63 + i)


def test_make_spectrum_zero_case():
    s = make_spectrum([0.0] * 8)
    assert s.length == 8
    assert np.all(s.intensities == 0)


def test_make_spectrum_full_length():
    assert make_spectrum(np.linspace(0, 1, 2051)).length == 2051


def test_non_finite_reports_index():
    with pytest.raises(NonFiniteValue) as info:
        make_spectrum([1.0, math.nan, 2.0] + [0.0] * 6)
    assert info.value.index == 1


def test_empty_and_short():
    with pytest.raises(EmptyInput):
        make_spectrum([])
    with pytest.raises(LengthMismatch):
        make_spectrum([1.0] * 7)


def test_spectrum_is_read_only():
    s = make_spectrum(np.arange(10.0))
    with pytest.raises(ValueError):
        s.intensities[0] = 5.0


def test_pair_length_mismatch():
    with pytest.raises(LengthMismatch):
        SpectrumPair("a", Spectrum(np.ones(8)), Spectrum(np.ones(9)), 0.0, 0.0, 1)


def test_dataset_rejects_duplicates_and_mixed_lengths():
    with pytest.raises(DuplicateId):
        Dataset((_pair(0), _pair(0)), "train")
    with pytest.raises(LengthMismatch):
        Dataset((_pair(0), _pair(1, n=20)), "train")


def test_empty_dataset_is_header_only():
    d = Dataset((), "test", "abc")
    lines = list(dataset_lines(d))
    assert len(lines) == 1
    buf = io.StringIO()
    write_dataset(d, buf)
    assert read_dataset(io.StringIO(buf.getvalue())) == d


def test_round_trip_file(tmp_path):
    d = Dataset(tuple(_pair(i) for i in range(5)), "train", "digest")
    write_dataset(d, tmp_path / "d.jsonl")
    back = read_dataset(tmp_path / "d.jsonl")
    assert back == d
    write_dataset(back, tmp_path / "e.jsonl")
    assert (tmp_path / "d.jsonl").read_bytes() == (tmp_path / "e.jsonl").read_bytes()


def test_record_count(tmp_path):
    d = Dataset(tuple(_pair(i) for i in range(500)), "test")
    write_dataset(d, tmp_path / "d.jsonl")
    assert len((tmp_path / "d.jsonl").read_text().splitlines()) == 501


def test_truncated_line_reports_line_number(tmp_path):
    d = Dataset(tuple(_pair(i) for i in range(3)), "train")
    buf = io.StringIO()
    write_dataset(d, buf)
    lines = buf.getvalue().splitlines()
    lines[2] = lines[2][: len(lines[2]) // 2]
    with pytest.raises(ParseFailure) as info:
        read_dataset(io.StringIO("\n".join(lines)))
    assert info.value.line == 3


def test_mismatched_record_lengths():
    d = Dataset((_pair(0),), "train")
    buf = io.StringIO()
    write_dataset(d, buf)
    header, rec = buf.getvalue().splitlines()
    rec = rec.replace('"noisy":[', '"noisy":[1.0,', 1)
    with pytest.raises(LengthMismatch):
        read_dataset(io.StringIO(header + "\n" + rec + "\n"))


@given(st.lists(finite, min_size=8, max_size=40))
def test_round_trip_is_bit_exact(values):
    s = Spectrum(values)
    pair = SpectrumPair("x", s, s, math.inf, math.inf, 0)
    d = Dataset((pair,), "test")
    buf = io.StringIO()
    write_dataset(d, buf)
    back = read_dataset(io.StringIO(buf.getvalue()))
    assert back.pairs[0].clean.intensities.tobytes() == s.intensities.tobytes()


def test_spectrum_csv_round_trip(tmp_path):
    s = Spectrum(np.random.default_rng(1).normal(size=32))
    write_spectrum_csv(s, tmp_path / "a.csv", comment="demo")
    assert read_spectrum_csv(tmp_path / "a.csv") == s
    w = Spectrum(np.arange(10.0), 200.0, 0.5)
    write_spectrum_csv(w, tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().startswith("wavenumber,intensity\n")
    assert read_spectrum_csv(tmp_path / "b.csv") == w


def test_spectrum_csv_bad_row(tmp_path):
    (tmp_path / "bad.csv").write_text("index,intensity\n0,1.0\n1,abc\n")
    with pytest.raises(ParseFailure) as info:
        read_spectrum_csv(tmp_path / "bad.csv")
    assert info.value.line == 3
