import struct

import numpy as np
import pytest

from ramandenoise.cnn.checkpoint import (
    checkpoint_bytes,
    checkpoints_equal,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)
from ramandenoise.cnn.network import NetworkConfig
from ramandenoise.cnn.training import Checkpoint, TrainHyper, denoise, train
from ramandenoise.core import Spectrum
from ramandenoise.errors import BadMagic, CountMismatch, IoFailure, VersionMismatch

CFG = NetworkConfig("parallel", branch_depth=2, filters_per_layer=3, kernel_len=4, input_len=24)


@pytest.fixture(scope="module")
def ckpt():
    r = np.random.default_rng(2)
    x, t = r.normal(size=(5, 24)), r.normal(size=(5, 24))
    c, _ = train(CFG, (x, t), TrainHyper(learning_rate=1e-3, epochs=3, batch_size=2, seed=4))
    return c


def test_round_trip_is_bitwise(tmp_path, ckpt):
    save_checkpoint(ckpt, tmp_path / "m.rsdn")
    back = load_checkpoint(tmp_path / "m.rsdn")
    assert back.weights.tobytes() == ckpt.weights.tobytes()
    assert back.adam.m.tobytes() == ckpt.adam.m.tobytes()
    assert back.adam.v.tobytes() == ckpt.adam.v.tobytes()
    assert back.adam.step == ckpt.adam.step
    assert back.input_mean.tobytes() == ckpt.input_mean.tobytes()
    assert back.config == ckpt.config and back.hyper == ckpt.hyper
    assert checkpoints_equal(back, ckpt)
    assert (tmp_path / "m.rsdn").read_bytes() == checkpoint_bytes(back)


def test_layout_prefix(ckpt):
    blob = checkpoint_bytes(ckpt)
    magic, version, header_len = struct.unpack_from("<4sIQ", blob)
    assert (magic, version) == (b"RSDN", 1)
    assert len(blob) == 16 + header_len + 3 * 8 * ckpt.weights.size + 8


def test_loaded_network_denoises_identically(ckpt):
    x = Spectrum(np.random.default_rng(9).normal(size=24))
    a = denoise(ckpt, x)
    b = denoise(parse_checkpoint(checkpoint_bytes(ckpt)), x)
    assert a == b == denoise(ckpt, x)


def test_bad_magic(ckpt):
    blob = bytearray(checkpoint_bytes(ckpt))
    blob[:4] = b"XXXX"
    with pytest.raises(BadMagic):
        parse_checkpoint(bytes(blob))


def test_version_mismatch(ckpt):
    blob = bytearray(checkpoint_bytes(ckpt))
    blob[4:8] = struct.pack("<I", 2)
    with pytest.raises(VersionMismatch):
        parse_checkpoint(bytes(blob))


def test_tampered_weight_count(ckpt):
    blob = checkpoint_bytes(ckpt)
    n = ckpt.weights.size
    tampered = blob.replace(f'"weight_count":{n}'.encode(), f'"weight_count":{n + 1}'.encode())
    with pytest.raises(CountMismatch):
        parse_checkpoint(tampered)
    with pytest.raises(CountMismatch):
        parse_checkpoint(blob[:-16])


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_checkpoint(tmp_path / "nope.rsdn")


def test_checkpoint_validates_weight_count(ckpt):
    with pytest.raises(Exception):
        Checkpoint(CFG, ckpt.hyper, ckpt.weights[:-1], ckpt.adam, ckpt.input_mean)
