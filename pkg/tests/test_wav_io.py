import numpy as np
import pytest
from scipy.io import wavfile

from ansambl import fixtures
from ansambl.errors import InvalidInputError
from ansambl.wav_io import read_mono, read_wav, write_float32, write_mono_pcm16


def test_pcm16_round_trip(tmp_path):
    x = fixtures.sine(440.0, 0.25, 0.5)
    p = tmp_path / "t.wav"
    write_mono_pcm16(p, x, 48000)
    y, rate = read_mono(p)
    assert rate == 48000
    assert np.max(np.abs(y - x)) < 2 / 32767


def test_uint8_decodes_centered(tmp_path):
    # 8-bit PCM is unsigned; decoding must remove the +128 offset
    x = fixtures.sine(440.0, 0.1, 0.5)
    p = tmp_path / "u8.wav"
    wavfile.write(p, 48000, ((x * 127) + 128).astype(np.uint8))
    y, _ = read_mono(p)
    assert abs(float(np.mean(y))) < 0.02
    assert np.max(np.abs(y)) == pytest.approx(0.5, abs=0.02)


def test_float32_extensible_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.uniform(-1, 1, (4096, 16)).astype(np.float32)
    p = tmp_path / "multi.wav"
    write_float32(p, data, 48000)
    # scipy is the independent reader for our writer
    got, rate = read_wav(p)
    assert rate == 48000
    assert got.shape == (4096, 16)
    assert np.array_equal(got.astype(np.float32), data)


def test_read_mono_resamples(tmp_path):
    x = fixtures.sine(330.0, 0.5, 0.5, sample_rate=44100)
    p = tmp_path / "c.wav"
    wavfile.write(p, 44100, (x * 32767).astype(np.int16))
    y, rate = read_mono(p, target_rate=48000)
    assert rate == 48000
    assert abs(len(y) - 24000) <= 2


def test_read_mono_mixes_stereo_down(tmp_path):
    left = fixtures.sine(220.0, 0.1, 0.4)
    right = np.zeros_like(left)
    p = tmp_path / "st.wav"
    wavfile.write(p, 48000, np.stack([left, right], axis=1).astype(np.float32))
    y, _ = read_mono(p)
    assert np.max(np.abs(y - left / 2)) < 1e-6


def test_undecodable_file_rejected(tmp_path):
    p = tmp_path / "junk.wav"
    p.write_bytes(b"this is not audio")
    with pytest.raises(InvalidInputError):
        read_wav(p)
