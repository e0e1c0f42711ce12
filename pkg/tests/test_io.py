import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from skyfdr.bracketing import ExposureSet, decompose
from skyfdr.image import RadianceImage
from skyfdr.io import (FormatError, float_to_rgbe, infer_format, load_bracket, read_hdr,
                       read_image, read_manifest, read_pfm, read_pfm_array, read_pgm,
                       rgbe_to_float, save_bracket, write_hdr, write_manifest, write_pfm,
                       write_pgm)
from skyfdr.synth import random_fdr
from skyfdr.tonemap import ToneMapper


class TestPFM:
    def test_bit_exact(self, tmp_path, rng):
        data = (rng.normal(size=(7, 5, 3)) * 1e5).astype(np.float32)
        data[0, 0] = [np.float32(1e-45), np.float32(3.4e38), 0.0]
        write_pfm(RadianceImage(data), tmp_path / "a.pfm")
        back = read_pfm(tmp_path / "a.pfm").data
        assert back.dtype == np.float32
        assert back.tobytes() == data.tobytes()

    def test_payload_size(self, tmp_path):
        write_pfm(RadianceImage(np.array([[[1.0, 2.0, 3.0]]])), tmp_path / "one.pfm")
        raw = (tmp_path / "one.pfm").read_bytes()
        header = b"PF\n1 1\n-1.0\n"
        assert raw.startswith(header)
        assert len(raw) - len(header) == 12
        assert struct.unpack("<3f", raw[len(header):]) == (1.0, 2.0, 3.0)

    def test_big_endian_fixture(self, tmp_path):
        # two rows stored bottom-to-top, big-endian because scale is positive
        payload = struct.pack(">6f", 4, 5, 6, 1, 2, 3)
        (tmp_path / "be.pfm").write_bytes(b"PF\n1 2\n1.0\n" + payload)
        arr = read_pfm_array(tmp_path / "be.pfm")
        np.testing.assert_array_equal(arr[:, 0], [[1, 2, 3], [4, 5, 6]])

    def test_rows_flipped(self, tmp_path):
        data = np.arange(12, dtype=np.float32).reshape(2, 2, 3)
        write_pfm(data, tmp_path / "f.pfm")
        raw = (tmp_path / "f.pfm").read_bytes()
        first = struct.unpack("<3f", raw[len(b"PF\n2 2\n-1.0\n"):][:12])
        assert first == (6.0, 7.0, 8.0)

    def test_grayscale_rejected_for_rgb(self, tmp_path):
        write_pfm(np.ones((2, 2), np.float32), tmp_path / "g.pfm")
        assert read_pfm_array(tmp_path / "g.pfm").shape == (2, 2, 1)
        with pytest.raises(FormatError):
            read_pfm(tmp_path / "g.pfm")

    @pytest.mark.parametrize("blob", [b"P6\n1 1\n255\n\0\0\0", b"PF\nx 1\n-1\n", b"PF\n1 1\n0\n",
                                      b"PF\n2 2\n-1.0\n" + b"\0" * 20])
    def test_malformed(self, tmp_path, blob):
        (tmp_path / "bad.pfm").write_bytes(blob)
        with pytest.raises(FormatError):
            read_pfm(tmp_path / "bad.pfm")

    @settings(max_examples=25, deadline=None)
    @given(hnp.arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6), st.just(3)),
                      elements=st.floats(width=32, allow_nan=False)))
    def test_round_trip_property(self, tmp_path_factory, data):
        p = tmp_path_factory.mktemp("pfm") / "x.pfm"
        write_pfm(data, p)
        assert read_pfm_array(p).tobytes() == data.tobytes()


class TestRGBE:
    def test_black(self):
        assert np.all(float_to_rgbe(np.zeros((2, 3, 3))) == 0)

    def test_one(self):
        rgbe = float_to_rgbe(np.ones((1, 1, 3)))
        np.testing.assert_array_equal(rgbe[0, 0], [128, 128, 128, 129])
        assert np.all(rgbe_to_float(rgbe) == 1.0)

    def test_quantization_bound(self, rng):
        data = 2.0 ** rng.uniform(-20, 20, (64, 64, 3))
        back = rgbe_to_float(float_to_rgbe(data))
        err = np.abs(back - data) / data.max(axis=-1, keepdims=True)
        assert err.max() <= 2.0 ** -8
        # the largest component is within 2**-8 of itself
        top = data == data.max(axis=-1, keepdims=True)
        assert (np.abs(back - data) / data)[top].max() <= 2.0 ** -8

    def test_rounding_carry(self):
        v = np.full((1, 1, 3), 255.9 / 256)
        rgbe = float_to_rgbe(v)
        assert rgbe[0, 0, 3] == 129 and rgbe[0, 0, 0] == 128

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            float_to_rgbe(-np.ones((1, 1, 3)))


class TestHDR:
    @pytest.mark.parametrize("w", [4, 64, 300])
    def test_round_trip(self, tmp_path, rng, w):
        data = 2.0 ** rng.uniform(-10, 15, (9, w, 3))
        data[:, 2:30] = 1.0
        write_hdr(RadianceImage(data), tmp_path / "a.hdr")
        back = read_hdr(tmp_path / "a.hdr").data
        assert back.shape == data.shape
        err = np.abs(back - data) / data.max(axis=-1, keepdims=True)
        assert err.max() <= 2.0 ** -8

    def test_rle_used(self, tmp_path):
        write_hdr(RadianceImage(np.ones((16, 256, 3))), tmp_path / "c.hdr")
        assert (tmp_path / "c.hdr").stat().st_size < 16 * 256 * 4 // 10

    def test_flat_file(self, tmp_path):
        rgbe = float_to_rgbe(np.array([[[1.0, 2.0, 0.5]] * 10]))
        (tmp_path / "flat.hdr").write_bytes(b"#?RGBE\n\n-Y 1 +X 10\n" + rgbe.tobytes())
        np.testing.assert_array_equal(read_hdr(tmp_path / "flat.hdr").data[0, 0], [1.0, 2.0, 0.5])

    def test_bad_signature(self, tmp_path):
        (tmp_path / "x.hdr").write_bytes(b"#?FOO\n\n-Y 1 +X 1\n\0\0\0\0")
        with pytest.raises(FormatError):
            read_hdr(tmp_path / "x.hdr")

    def test_unsupported_resolution(self, tmp_path):
        (tmp_path / "x.hdr").write_bytes(b"#?RADIANCE\n\n+Y 1 +X 1\n\0\0\0\0")
        with pytest.raises(FormatError):
            read_hdr(tmp_path / "x.hdr")

    def test_unsupported_format_line(self, tmp_path):
        (tmp_path / "x.hdr").write_bytes(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n\0\0\0\0")
        with pytest.raises(FormatError):
            read_hdr(tmp_path / "x.hdr")

    def test_corrupt_rle(self, tmp_path):
        (tmp_path / "x.hdr").write_bytes(b"#?RADIANCE\n\n-Y 1 +X 8\n" + bytes([2, 2, 0, 8, 228, 1]))
        with pytest.raises(FormatError):
            read_hdr(tmp_path / "x.hdr")


class TestPGM:
    def test_round_trip(self, tmp_path, rng):
        lab = rng.integers(0, 5, (13, 17)).astype(np.uint8)
        write_pgm(lab, tmp_path / "l.pgm")
        raw = (tmp_path / "l.pgm").read_bytes()
        assert raw.startswith(b"P5\n17 13\n255\n")
        np.testing.assert_array_equal(read_pgm(tmp_path / "l.pgm"), lab)

    def test_rejects(self, tmp_path):
        (tmp_path / "x.pgm").write_bytes(b"P2\n1 1\n255\n0")
        with pytest.raises(FormatError):
            read_pgm(tmp_path / "x.pgm")
        with pytest.raises(ValueError):
            write_pgm(np.full((2, 2), 300), tmp_path / "y.pgm")


def minimal_manifest():
    return {"version": 1, "format": "none", "tonemapper": "identity", "eps_lo": 1 / 255,
            "eps_hi": 254 / 255, "exposures": [{"ev": 0.0, "path": "e0.pfm"}]}


class TestManifest:
    def test_minimal_round_trip(self, tmp_path):
        obj = minimal_manifest()
        write_pfm(np.zeros((1, 1, 3)), tmp_path / "e0.pfm")
        write_manifest(obj, tmp_path / "m.json")
        back = read_manifest(tmp_path / "m.json")
        assert back == obj
        write_manifest(back, tmp_path / "m2.json")
        assert (json.loads((tmp_path / "m.json").read_text())
                == json.loads((tmp_path / "m2.json").read_text()))

    @pytest.mark.parametrize("mutate,field", [
        (lambda o: o["exposures"].append({"ev": 0.0, "path": "e0.pfm"}), "exposures/1/ev"),
        (lambda o: o.update(extra=1), "<root>"),
        (lambda o: o["exposures"][0].update(gain=2), "exposures/0"),
        (lambda o: o.update(format="cube"), "format"),
        (lambda o: o.update(tonemapper="sqrt"), "tonemapper"),
        (lambda o: o.update(eps_lo=0.999), "eps_hi"),
        (lambda o: o.pop("version"), "<root>"),
        (lambda o: o["exposures"][0].update(ev="0"), "exposures/0/ev"),
    ])
    def test_schema_violations(self, tmp_path, mutate, field):
        obj = minimal_manifest()
        mutate(obj)
        (tmp_path / "m.json").write_text(json.dumps(obj))
        with pytest.raises(FormatError, match=f"field {field}"):
            read_manifest(tmp_path / "m.json", check_files=False)

    def test_missing_file(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps(minimal_manifest()))
        with pytest.raises(FormatError, match="not found"):
            read_manifest(tmp_path / "m.json")

    def test_bracket_round_trip(self, tmp_path, rng):
        img = random_fdr((8, 10), rng)
        b = decompose(img, ExposureSet.from_evs("0,-8,-15"), ToneMapper("power_law"))
        path = save_bracket(b, tmp_path / "br")
        loaded = load_bracket(path)
        assert loaded.times == b.times and loaded.tonemapper == b.tonemapper
        assert loaded.eps_lo == b.eps_lo and loaded.eps_hi == b.eps_hi
        np.testing.assert_array_equal(loaded.exposures, b.exposures.astype(np.float32))
        # manifest -> bracket -> manifest is stable
        first = (tmp_path / "br" / "manifest.json").read_text()
        save_bracket(loaded, tmp_path / "br", force=True)
        assert (tmp_path / "br" / "manifest.json").read_text() == first

    def test_no_overwrite(self, tmp_path, rng):
        b = decompose(random_fdr((4, 4), rng), [1.0])
        save_bracket(b, tmp_path)
        with pytest.raises(FileExistsError):
            save_bracket(b, tmp_path)

    def test_ldr8_preview(self, tmp_path, rng):
        b = decompose(random_fdr((4, 4), rng), [1.0])
        save_bracket(b, tmp_path, ldr8=True)
        assert (tmp_path / "exposure_00.ppm").read_bytes().startswith(b"P6\n4 4\n255\n")


def test_infer_format():
    assert infer_format(8, 8) == "sky-angular"
    assert infer_format(8, 16) == "latlong"
    assert infer_format(8, 32) == "sky-latlong"
    assert infer_format(8, 9) == "none"


def test_read_image_by_extension(tmp_path):
    write_pfm(np.ones((4, 8, 3)), tmp_path / "a.pfm")
    assert read_image(tmp_path / "a.pfm").format == "latlong"
    with pytest.raises(FormatError):
        read_image(tmp_path / "a.exr")
