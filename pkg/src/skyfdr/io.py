"""Readers and writers: PFM, Radiance HDR (RGBE), PGM labels, bracket manifests."""

import json
import re
from pathlib import Path

import jsonschema
import numpy as np

from . import kernels
from .bracketing import EPS_HI, EPS_LO, ExposureBracket, ExposureSet
from .image import FORMATS, RadianceImage
from .tonemap import ToneMapper

MANIFEST_VERSION = 1


class FormatError(ValueError):
    """A file is malformed or does not match what the caller expects."""


# ---------------------------------------------------------------- PFM


def _read_token(f):
    """Next whitespace-delimited ASCII token of a PFM header."""
    tok = bytearray()
    while True:
        c = f.read(1)
        if not c:
            break
        if c.isspace():
            if tok:
                break
            continue
        tok += c
        if len(tok) > 64:
            raise FormatError("PFM header token too long")
    return tok.decode("ascii", errors="replace")


def read_pfm_array(path):
    """Raw PFM contents as float32 (H, W, C), rows top to bottom."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic not in ("PF", "Pf"):
            raise FormatError(f"{path}: not a PFM file (magic {magic!r})")
        try:
            w, h = int(_read_token(f)), int(_read_token(f))
            scale = float(_read_token(f))
        except ValueError:
            raise FormatError(f"{path}: malformed PFM header") from None
        if w <= 0 or h <= 0 or scale == 0 or not np.isfinite(scale):
            raise FormatError(f"{path}: malformed PFM header")
        c = 3 if magic == "PF" else 1
        dtype = np.dtype("<f4" if scale < 0 else ">f4")
        n = w * h * c
        payload = f.read(n * 4)
        if len(payload) < n * 4:
            raise FormatError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(payload, dtype=dtype).reshape(h, w, c)
    return np.ascontiguousarray(arr[::-1]).astype(np.float32)


def read_pfm(path, fmt="none"):
    arr = read_pfm_array(path)
    if arr.shape[2] != 3:
        raise FormatError(f"{path}: grayscale PFM where an RGB image is expected")
    return RadianceImage(arr, fmt)


def write_pfm(img, path):
    """Little-endian PFM; ``Pf`` for single-channel arrays."""
    arr = img.data if isinstance(img, RadianceImage) else np.asarray(img)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"cannot write shape {arr.shape} as PFM")
    h, w, c = arr.shape
    magic = b"PF" if c == 3 else b"Pf"
    data = np.ascontiguousarray(arr[::-1], dtype="<f4")
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n-1.0\n" % (w, h))
        f.write(data.tobytes())


# ---------------------------------------------------------------- RGBE


def float_to_rgbe(arr):
    """Encode (H, W, 3) floats to RGBE bytes, rounding mantissas to nearest."""
    arr = np.asarray(arr, dtype=np.float64)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("RGBE needs finite non-negative values")
    m = arr.max(axis=-1)
    out = np.zeros(arr.shape[:-1] + (4,), dtype=np.uint8)
    nz = m >= 1e-38
    _, e = np.frexp(m[nz])  # m = f * 2**e with f in [0.5, 1)
    e = e.astype(np.int64)
    mant = np.rint(arr[nz] * np.ldexp(256.0, -e)[:, None])
    # rounding may carry the largest mantissa to 256
    carry = mant.max(axis=-1) >= 256
    if np.any(carry):
        e[carry] += 1
        mant[carry] = np.rint(arr[nz][carry] * np.ldexp(256.0, -e[carry])[:, None])
    if np.any(e + 128 > 255):
        raise ValueError("value too large for RGBE")
    small = e + 128 < 1
    mant[small] = 0
    e[small] = -128
    out[nz, :3] = mant.astype(np.uint8)
    out[nz, 3] = (e + 128).astype(np.uint8)
    out[out[..., 3] == 0] = 0
    return out


def rgbe_to_float(rgbe):
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int64)
    scale = np.where(e > 0, np.ldexp(1.0, e - 136), 0.0)  # 2**(E-128) / 256
    return rgbe[..., :3].astype(np.float64) * scale[..., None]


_RES_RE = re.compile(rb"^-Y (\d+) \+X (\d+)$")


def read_hdr(path, fmt="none"):
    """Radiance ``.hdr`` with flat or adaptive-RLE scanlines (``-Y h +X w`` only)."""
    with open(path, "rb") as f:
        blob = f.read()
    first = blob.split(b"\n", 1)[0]
    if first not in (b"#?RADIANCE", b"#?RGBE"):
        raise FormatError(f"{path}: bad Radiance signature {first[:16]!r}")
    pos = len(first) + 1
    while True:
        end = blob.find(b"\n", pos)
        if end < 0:
            raise FormatError(f"{path}: header not terminated")
        line = blob[pos:end]
        pos = end + 1
        if not line:
            break
        if line.startswith(b"FORMAT=") and line != b"FORMAT=32-bit_rle_rgbe":
            raise FormatError(f"{path}: unsupported {line.decode(errors='replace')}")
    end = blob.find(b"\n", pos)
    if end < 0:
        raise FormatError(f"{path}: missing resolution line")
    m = _RES_RE.match(blob[pos:end])
    if not m:
        raise FormatError(f"{path}: unsupported resolution line {blob[pos:end][:32]!r}")
    h, w = int(m.group(1)), int(m.group(2))
    if h <= 0 or w <= 0:
        raise FormatError(f"{path}: empty image")
    try:
        rgbe, _ = kernels.rle_decode(np.frombuffer(blob[end + 1:], dtype=np.uint8), w, h)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return RadianceImage(rgbe_to_float(rgbe), fmt)


def write_hdr(img, path):
    arr = img.data if isinstance(img, RadianceImage) else np.asarray(img)
    h, w = arr.shape[:2]
    payload = kernels.rle_encode(float_to_rgbe(arr))
    with open(path, "wb") as f:
        f.write(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
        f.write(b"-Y %d +X %d\n" % (h, w))
        f.write(payload)


# ---------------------------------------------------------------- PGM


def read_pgm(path):
    """Binary P5 graymap with maxval <= 255, as uint8 (H, W)."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic != "P5":
            raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
        try:
            w, h, maxval = int(_read_token(f)), int(_read_token(f)), int(_read_token(f))
        except ValueError:
            raise FormatError(f"{path}: malformed PGM header") from None
        if w <= 0 or h <= 0 or not 0 < maxval <= 255:
            raise FormatError(f"{path}: unsupported PGM header")
        data = f.read(w * h)
    if len(data) < w * h:
        raise FormatError(f"{path}: truncated PGM payload")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(arr, path):
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError("PGM values must lie in 0..255")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(arr.astype(np.uint8).tobytes())


def write_ldr8(arr, path):
    """Lossy 8-bit export of an LDR image in [0, 1] as binary PPM/PGM."""
    a = np.clip(np.rint(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[..., 0]
    if a.ndim == 2:
        write_pgm(a, path)
        return
    h, w = a.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(a.tobytes())


# ---------------------------------------------------------------- images by extension


def read_image(path, fmt=None):
    """Read ``.pfm`` or ``.hdr``; ``fmt=None`` infers the format from the aspect ratio."""
    ext = Path(path).suffix.lower()
    if ext == ".pfm":
        img = read_pfm(path)
    elif ext in (".hdr", ".pic", ".rgbe"):
        img = read_hdr(path)
    else:
        raise FormatError(f"{path}: unknown image extension {ext!r}")
    if fmt is None:
        fmt = infer_format(img.height, img.width)
    return RadianceImage(img.data, fmt)


def write_image(img, path):
    ext = Path(path).suffix.lower()
    if ext == ".pfm":
        write_pfm(img, path)
    elif ext in (".hdr", ".pic", ".rgbe"):
        write_hdr(img, path)
    else:
        raise FormatError(f"{path}: unknown image extension {ext!r}")


def infer_format(h, w):
    if w == h:
        return "sky-angular"
    if w == 2 * h:
        return "latlong"
    if w == 4 * h:
        return "sky-latlong"
    return "none"


# ---------------------------------------------------------------- manifests

MANIFEST_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "format", "tonemapper", "eps_lo", "eps_hi", "exposures"],
    "properties": {
        "version": {"type": "integer", "const": MANIFEST_VERSION},
        "format": {"type": "string", "enum": list(FORMATS)},
        "tonemapper": {"type": "string"},
        "eps_lo": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "eps_hi": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "exposures": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["ev", "path"],
                "properties": {
                    "ev": {"type": "number", "maximum": 0},
                    "path": {"type": "string", "minLength": 1},
                },
            },
        },
    },
}


def _field(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_manifest(obj):
    """Schema check plus the cross-field rules; raises :class:`FormatError`."""
    errors = sorted(jsonschema.Draft202012Validator(MANIFEST_SCHEMA).iter_errors(obj),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise FormatError(f"manifest field {_field(e)}: {e.message}")
    evs = [x["ev"] for x in obj["exposures"]]
    for i, (a, b) in enumerate(zip(evs, evs[1:]), start=1):
        if not b < a:
            raise FormatError(f"manifest field exposures/{i}/ev: evs must be strictly decreasing")
    if not obj["eps_lo"] < obj["eps_hi"]:
        raise FormatError("manifest field eps_hi: must exceed eps_lo")
    try:
        ToneMapper.parse(obj["tonemapper"])
    except ValueError as exc:
        raise FormatError(f"manifest field tonemapper: {exc}") from None


def manifest_dict(evs, paths, tonemapper, eps_lo=EPS_LO, eps_hi=EPS_HI, fmt="none"):
    tm = tonemapper.spec() if isinstance(tonemapper, ToneMapper) else str(tonemapper)
    obj = {
        "version": MANIFEST_VERSION,
        "format": fmt,
        "tonemapper": tm,
        "eps_lo": float(eps_lo),
        "eps_hi": float(eps_hi),
        "exposures": [{"ev": float(e), "path": str(p)} for e, p in zip(evs, paths)],
    }
    validate_manifest(obj)
    return obj


def write_manifest(obj, path):
    validate_manifest(obj)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def read_manifest(path, check_files=True):
    """Load and validate; exposure paths are resolved relative to the manifest."""
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    validate_manifest(obj)
    base = Path(path).resolve().parent
    for i, ex in enumerate(obj["exposures"]):
        full = base / ex["path"]
        if check_files and not full.is_file():
            raise FormatError(f"manifest field exposures/{i}/path: {ex['path']} not found")
    return obj


def load_bracket(path):
    """Manifest plus its PFM exposures as an :class:`ExposureBracket`."""
    obj = read_manifest(path)
    base = Path(path).resolve().parent
    arrays = [read_pfm_array(base / ex["path"]).astype(np.float64) for ex in obj["exposures"]]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise FormatError(f"{path}: exposures have different shapes {sorted(shapes)}")
    times = ExposureSet.from_evs([ex["ev"] for ex in obj["exposures"]])
    try:
        return ExposureBracket(np.stack(arrays), times, ToneMapper.parse(obj["tonemapper"]),
                               obj["eps_lo"], obj["eps_hi"], obj["format"])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_bracket(bracket, out_dir, stem="exposure", manifest_name="manifest.json",
                 force=False, ldr8=False):
    """Write each exposure as PFM and a manifest next to them; returns the manifest path.

    ``ldr8`` additionally writes lossy 8-bit previews (never read back).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [f"{stem}_{n:02d}.pfm" for n in range(len(bracket))]
    targets = [out_dir / nm for nm in names] + [out_dir / manifest_name]
    if not force:
        clash = [str(t) for t in targets if t.exists()]
        if clash:
            raise FileExistsError(f"refusing to overwrite {clash[0]} (use --force)")
    for n, nm in enumerate(names):
        write_pfm(bracket.exposures[n], out_dir / nm)
        if ldr8:
            ext = ".ppm" if bracket.exposures.shape[-1] == 3 else ".pgm"
            write_ldr8(bracket.exposures[n], out_dir / (Path(nm).stem + ext))
    obj = manifest_dict(bracket.times.evs, names, bracket.tonemapper,
                        bracket.eps_lo, bracket.eps_hi, bracket.format)
    write_manifest(obj, out_dir / manifest_name)
    return out_dir / manifest_name


def read_weights(paths, bracket):
    """One PFM per exposure stacked into a weight array shaped like the bracket."""
    if len(paths) != len(bracket):
        raise FormatError(f"{len(paths)} weight files for {len(bracket)} exposures")
    ws = []
    for p in paths:
        a = read_pfm_array(p).astype(np.float64)
        if a.shape[-1] == 1 and bracket.exposures.shape[-1] != 1:
            a = np.repeat(a, bracket.exposures.shape[-1], axis=-1)
        ws.append(a)
    w = np.stack(ws)
    if w.shape != bracket.exposures.shape:
        raise FormatError(f"weights shape {w.shape} != bracket shape {bracket.exposures.shape}")
    if np.any(w < 0) or np.any(w > 1):
        raise FormatError("weights must lie in [0, 1]")
    return w
