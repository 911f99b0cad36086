import io
import struct

import numpy as np
import pytest

from chansel.dataio import (
    EtsHeader,
    SynthSpec,
    fingerprint,
    import_csv,
    read_ets,
    synth,
    write_ets,
)
from chansel.errors import (
    BadLabelError,
    BadMagicError,
    BadNumberError,
    HeaderParseError,
    NonFiniteSampleError,
    PayloadLengthMismatchError,
    RaggedRowsError,
    SpecInvalidError,
)
from chansel.model import ChannelSubset, Montage, TrialSet


def roundtrip(trials):
    buf = io.BytesIO()
    write_ets(trials, buf)
    buf.seek(0)
    return read_ets(buf)


def make(samples, labels, fs=128.0):
    samples = np.asarray(samples, dtype=np.float32)
    names = tuple(f"ch{i}" for i in range(samples.shape[1]))
    return TrialSet(Montage(names, fs), samples, labels, max(labels))


class TestEtsFormat:
    def test_payload_bytes_match_layout(self):
        ts = make(np.array([[[1.0, 2.0]]]), [1])
        buf = io.BytesIO()
        n = write_ets(ts, buf)
        raw = buf.getvalue()
        assert len(raw) == n
        assert raw[:4] == b"ETS1"
        (header_len,) = struct.unpack("<I", raw[4:8])
        payload = raw[8 + header_len:]
        assert payload == struct.pack("<2f", 1.0, 2.0)

    def test_header_is_canonical_json(self):
        ts = make(np.zeros((2, 1, 1)), [1, 2])
        buf = io.BytesIO()
        write_ets(ts, buf)
        raw = buf.getvalue()
        (header_len,) = struct.unpack("<I", raw[4:8])
        header = raw[8:8 + header_len].decode("utf-8")
        parsed = EtsHeader.from_bytes(header.encode())
        assert parsed.n_trials == 2
        assert parsed.dtype == "f32le"
        assert parsed.layout == "trial-channel-time"

    def test_write_is_deterministic(self):
        rng = np.random.default_rng(0)
        ts = make(rng.normal(size=(3, 2, 5)), [1, 2, 1])
        a, b = io.BytesIO(), io.BytesIO()
        write_ets(ts, a)
        write_ets(ts, b)
        assert a.getvalue() == b.getvalue()

    def test_roundtrip_bit_exact(self):
        rng = np.random.default_rng(1)
        ts = make(rng.normal(size=(4, 3, 7)), [1, 2, 1, 2])
        out = roundtrip(ts)
        assert out.samples.tobytes() == ts.samples.tobytes()
        assert np.array_equal(out.labels, ts.labels)
        assert out.montage == ts.montage
        assert out.n_classes == ts.n_classes

    def test_roundtrip_special_values(self):
        specials = np.array(
            [[[-0.0, 0.0, 1.4e-45, -1.4e-45, 3.4e38, -3.4e38, 1.1754944e-38, 1e-12]]],
            dtype=np.float32,
        )
        out = roundtrip(make(specials, [1]))
        assert out.samples.tobytes() == specials.tobytes()
        # negative zero must survive as negative zero
        assert np.signbit(out.samples[0, 0, 0])

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            read_ets(io.BytesIO(b"NOPE" + b"\x00" * 16))

    def test_truncated_payload(self):
        ts = make(np.zeros((2, 2, 4)), [1, 2])
        buf = io.BytesIO()
        write_ets(ts, buf)
        truncated = buf.getvalue()[:-5]
        with pytest.raises(PayloadLengthMismatchError):
            read_ets(io.BytesIO(truncated))

    def test_truncated_header(self):
        ts = make(np.zeros((1, 1, 1)), [1])
        buf = io.BytesIO()
        write_ets(ts, buf)
        with pytest.raises(HeaderParseError):
            read_ets(io.BytesIO(buf.getvalue()[:10]))

    def test_header_garbage(self):
        raw = b"ETS1" + struct.pack("<I", 4) + b"{{{{"
        with pytest.raises(HeaderParseError):
            read_ets(io.BytesIO(raw))

    def test_non_finite_payload_rejected(self):
        ts = make(np.zeros((1, 1, 2)), [1])
        buf = io.BytesIO()
        write_ets(ts, buf)
        raw = bytearray(buf.getvalue())
        raw[-4:] = struct.pack("<f", np.inf)
        with pytest.raises(NonFiniteSampleError):
            read_ets(io.BytesIO(bytes(raw)))

    def test_roundtrip_of_synth(self):
        spec = SynthSpec(6, 3, 10, 2, ChannelSubset((0,)))
        ts = synth(spec, 42)
        out = roundtrip(ts)
        assert out.samples.tobytes() == ts.samples.tobytes()
        assert np.array_equal(out.labels, ts.labels)


class TestFingerprint:
    def test_stable_and_hex(self):
        ts = make(np.ones((2, 2, 2)), [1, 2])
        d1, d2 = fingerprint(ts), fingerprint(ts)
        assert d1 == d2
        assert len(d1) == 64
        int(d1, 16)

    def test_one_ulp_changes_digest(self):
        base = np.ones((1, 1, 2), dtype=np.float32)
        bumped = base.copy()
        bumped[0, 0, 0] = np.nextafter(np.float32(1.0), np.float32(2.0))
        assert fingerprint(make(base, [1])) != fingerprint(make(bumped, [1]))


class TestImportCsv:
    def test_single_row(self):
        ts = import_csv(io.StringIO("1, 0.5, 0.25\n"), 100.0, ["only"])
        assert ts.n_trials == 1 and ts.n_channels == 1 and ts.n_samples == 2
        assert ts.labels[0] == 1
        assert np.allclose(ts.samples[0, 0], [0.5, 0.25])

    def test_channel_major_order(self):
        text = "1, 1, 2, 3, 4\n2, 5, 6, 7, 8\n"
        ts = import_csv(io.StringIO(text), 100.0, ["a", "b"])
        assert ts.n_samples == 2
        assert np.allclose(ts.samples[0], [[1, 2], [3, 4]])
        assert np.allclose(ts.samples[1], [[5, 6], [7, 8]])

    def test_comments_and_blanks_skipped(self):
        text = "# header comment\n\n1, 0.0\n2, 1.0\n"
        ts = import_csv(io.StringIO(text), 10.0, ["a"])
        assert ts.n_trials == 2

    def test_ragged_rows(self):
        with pytest.raises(RaggedRowsError) as err:
            import_csv(io.StringIO("1, 1.0, 2.0\n2, 1.0\n"), 10.0, ["a"])
        assert err.value.row == 2

    def test_width_not_multiple_of_channels(self):
        with pytest.raises(RaggedRowsError):
            import_csv(io.StringIO("1, 1.0, 2.0, 3.0\n"), 10.0, ["a", "b"])

    def test_bad_label(self):
        with pytest.raises(BadLabelError):
            import_csv(io.StringIO("0, 1.0\n"), 10.0, ["a"])
        with pytest.raises(BadLabelError):
            import_csv(io.StringIO("x, 1.0\n"), 10.0, ["a"])

    def test_missing_class_rejected(self):
        with pytest.raises(BadLabelError):
            import_csv(io.StringIO("1, 1.0\n3, 2.0\n"), 10.0, ["a"])

    def test_bad_number_coordinates(self):
        with pytest.raises(BadNumberError) as err:
            import_csv(io.StringIO("1, 1.0\n1, oops\n2, 0.0\n"), 10.0, ["a"])
        assert (err.value.row, err.value.col) == (2, 2)

    def test_print_parse_roundtrip(self):
        rng = np.random.default_rng(3)
        ts = make(rng.normal(size=(4, 2, 3)).astype(np.float32), [1, 2, 1, 2])
        lines = []
        for i in range(ts.n_trials):
            values = ts.samples[i].reshape(-1)
            lines.append(",".join([str(ts.labels[i])] + [repr(float(v)) for v in values]))
        back = import_csv(io.StringIO("\n".join(lines)), ts.montage.fs_hz, ts.montage.channel_names)
        assert back.samples.tobytes() == ts.samples.tobytes()


class TestSynth:
    def spec(self, **kw):
        defaults = dict(
            n_trials=40, n_channels=4, n_samples=32, n_classes=2,
            informative_channels=ChannelSubset((0,)), separation=6.0,
            noise_sigma=1.0, fs_hz=128.0,
        )
        defaults.update(kw)
        return SynthSpec(**defaults)

    def test_deterministic(self):
        a = synth(self.spec(), 9)
        b = synth(self.spec(), 9)
        assert a.samples.tobytes() == b.samples.tobytes()
        assert synth(self.spec(), 10).samples.tobytes() != a.samples.tobytes()

    def test_balanced_labels(self):
        ts = synth(self.spec(n_trials=41, n_classes=3), 0)
        counts = np.bincount(ts.labels)[1:]
        assert counts.max() - counts.min() <= 1

    def test_zero_separation_all_noise(self):
        ts = synth(self.spec(separation=0.0), 5)
        # per-class sample variance on the "informative" channel must agree
        v1 = ts.samples[ts.labels == 1, 0, :].var()
        v2 = ts.samples[ts.labels == 2, 0, :].var()
        assert abs(v1 - v2) < 0.15

    def test_planted_channel_gains_class_dependent_power(self):
        ts = synth(self.spec(n_trials=200), 1)
        v1 = ts.samples[ts.labels == 1, 0, :].var()
        v2 = ts.samples[ts.labels == 2, 0, :].var()
        assert v2 / v1 > 1.2
        # non-informative channel stays exchangeable
        n1 = ts.samples[ts.labels == 1, 1, :].var()
        n2 = ts.samples[ts.labels == 2, 1, :].var()
        assert abs(n1 - n2) < 0.1

    def test_invalid_specs(self):
        with pytest.raises(SpecInvalidError):
            self.spec(n_classes=1)
        with pytest.raises(SpecInvalidError):
            self.spec(noise_sigma=0.0)
        with pytest.raises(SpecInvalidError):
            self.spec(separation=-1.0)
        with pytest.raises(SpecInvalidError):
            self.spec(informative_channels=ChannelSubset((9,)))
        with pytest.raises(SpecInvalidError):
            self.spec(n_trials=1)
