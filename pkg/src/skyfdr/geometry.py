"""Environment-map geometry: pixel directions, solid angles, resampling.

Conventions
-----------
Directions are unit vectors with z up (zenith) and azimuth measured from +x
toward +y.  ``size`` arguments accept either an int or a ``(height, width)``
pair.  An int means the side length for ``sky-angular``, and the height for
the latlong formats (width 2H for ``latlong``, 4H for ``sky-latlong``, which
keeps pixels square in angle).

``sky-angular`` is the equi-angular fisheye of the upper hemisphere: radius
in the unit disk is proportional to zenith angle.
"""

import math

import numpy as np

from . import kernels
from .image import RadianceImage

HALF_PI = 0.5 * math.pi

# format conversions run at no less than this multiple of the target resolution
CONVERSION_FACTOR = 2

# angular diameter of the sun seen from earth, degrees
SUN_DIAMETER_DEG = 0.5


def shape_for(fmt, size):
    """Resolve ``size`` to a ``(height, width)`` pair for ``fmt``."""
    if isinstance(size, (tuple, list)):
        h, w = int(size[0]), int(size[1])
    else:
        h = int(size)
        w = {"sky-angular": h, "sky-latlong": 4 * h, "latlong": 2 * h, "none": h}[fmt]
    if fmt == "sky-angular" and h != w:
        raise ValueError("sky-angular maps are square")
    if h < 1 or w < 1:
        raise ValueError("size must be positive")
    return h, w


def solid_angle_of_disk(theta):
    """Solid angle (sr) of a cone with angular diameter ``theta`` (radians)."""
    if not 0.0 <= theta <= 2.0 * math.pi:
        raise ValueError("angular diameter must lie in [0, 2*pi]")
    # 1 - cos(t/2) == 2 sin^2(t/4), exact near zero
    return 4.0 * math.pi * math.sin(theta / 4.0) ** 2


def solar_disk_target():
    """Solid angle of the solar disk, about 5.98e-5 sr."""
    return solid_angle_of_disk(math.radians(SUN_DIAMETER_DEG))


def _sky_angular_uv(s):
    c = (2.0 * np.arange(s) + 1.0) / s - 1.0
    u, v = np.meshgrid(c, c)
    return u, v


def _latlong_angles(fmt, h, w):
    zspan = HALF_PI if fmt == "sky-latlong" else math.pi
    theta = (np.arange(h) + 0.5) / h * zspan
    phi = (np.arange(w) + 0.5) / w * (2.0 * math.pi)
    return theta, phi, zspan


def _direction_from_angles(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def pixel_directions(fmt, size):
    """Directions of every pixel centre.

    Returns ``(dirs, inside)`` where ``dirs`` has shape (H, W, 3) and
    ``inside`` flags pixels that map to a direction at all (sky-angular
    corners do not; their ``dirs`` entries are NaN).
    """
    h, w = shape_for(fmt, size)
    if fmt == "sky-angular":
        u, v = _sky_angular_uv(h)
        r = np.hypot(u, v)
        inside = r <= 1.0
        theta = np.where(inside, r * HALF_PI, np.nan)
        phi = np.arctan2(v, u)
        return _direction_from_angles(theta, phi), inside
    if fmt in ("sky-latlong", "latlong"):
        theta, phi, _ = _latlong_angles(fmt, h, w)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        return _direction_from_angles(tt, pp), np.ones((h, w), dtype=bool)
    raise ValueError(f"format {fmt!r} has no pixel directions")


def pixel_direction(fmt, size, i, j):
    """Direction of pixel (i, j), or ``None`` when it lies outside the map."""
    h, w = shape_for(fmt, size)
    if not (0 <= i < h and 0 <= j < w):
        raise IndexError(f"pixel ({i}, {j}) outside {h}x{w} map")
    if fmt == "sky-angular":
        u = (2.0 * j + 1.0) / h - 1.0
        v = (2.0 * i + 1.0) / h - 1.0
        r = math.hypot(u, v)
        if r > 1.0:
            return None
        theta, phi = r * HALF_PI, math.atan2(v, u)
    elif fmt in ("sky-latlong", "latlong"):
        zspan = HALF_PI if fmt == "sky-latlong" else math.pi
        theta = (i + 0.5) / h * zspan
        phi = (j + 0.5) / w * 2.0 * math.pi
    else:
        raise ValueError(f"format {fmt!r} has no pixel directions")
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def direction_to_pixel(fmt, size, dirs):
    """Continuous pixel coordinates ``(rows, cols)`` of unit directions.

    Integer coordinates are pixel centres.  Directions outside the map's
    domain (below the horizon for the sky formats) give NaN.
    """
    h, w = shape_for(fmt, size)
    d = np.asarray(dirs, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    if fmt == "sky-angular":
        r = theta / HALF_PI
        u = r * np.cos(phi)
        v = r * np.sin(phi)
        cols = ((u + 1.0) * h - 1.0) / 2.0
        rows = ((v + 1.0) * h - 1.0) / 2.0
        outside = theta > HALF_PI
    elif fmt in ("sky-latlong", "latlong"):
        zspan = HALF_PI if fmt == "sky-latlong" else math.pi
        phi = np.mod(phi, 2.0 * math.pi)
        rows = theta / zspan * h - 0.5
        cols = phi / (2.0 * math.pi) * w - 0.5
        outside = theta > zspan
    else:
        raise ValueError(f"format {fmt!r} has no pixel directions")
    rows = np.where(outside, np.nan, rows)
    cols = np.where(outside, np.nan, cols)
    return rows, cols


def _sky_angular_jacobian(r):
    """dOmega / (du dv) for the equi-angular disk; (pi/2)^2 at the centre."""
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, HALF_PI * np.sin(r * HALF_PI) / safe, HALF_PI * HALF_PI)


def solid_angle_map(fmt, size):
    """Per-pixel solid angle in steradians, shape (H, W).

    Sky-angular pixels use the exact Jacobian at the pixel centre and are 0
    outside the unit disk.  Latlong rows use exact cosine differences, so the
    map sums to the hemisphere/sphere up to rounding.  Format ``"none"``
    returns unit weights.
    """
    h, w = shape_for(fmt, size)
    if fmt == "sky-angular":
        u, v = _sky_angular_uv(h)
        r = np.hypot(u, v)
        return np.where(r <= 1.0, _sky_angular_jacobian(r) * (2.0 / h) ** 2, 0.0)
    if fmt in ("sky-latlong", "latlong"):
        zspan = HALF_PI if fmt == "sky-latlong" else math.pi
        edges = np.arange(h + 1) / h * zspan
        row = (2.0 * math.pi / w) * (np.cos(edges[:-1]) - np.cos(edges[1:]))
        return np.repeat(row[:, None], w, axis=1)
    if fmt == "none":
        return np.ones((h, w))
    raise ValueError(f"unknown format {fmt!r}")


def max_pixel_solid_angle(fmt, size):
    """Largest entry of :func:`solid_angle_map` without building the map."""
    h, w = shape_for(fmt, size)
    if fmt == "sky-angular":
        c = np.abs((2.0 * np.arange(h) + 1.0) / h - 1.0).min()
        r = math.hypot(c, c)
        return float(_sky_angular_jacobian(np.array(r)) * (2.0 / h) ** 2)
    zspan = HALF_PI if fmt == "sky-latlong" else math.pi
    edges = np.arange(h + 1) / h * zspan
    return float(((2.0 * math.pi / w) * (np.cos(edges[:-1]) - np.cos(edges[1:]))).max())


def min_viable_resolution(theta, fmt="sky-angular", oversample=None, max_size=1 << 16):
    """Smallest power-of-two resolution whose pixels resolve a disk of
    angular diameter ``theta``.

    A resolution is viable when its largest pixel solid angle does not exceed
    the disk's solid angle.  The latlong formats are source formats that get
    converted to sky-angular, and conversions run at ``CONVERSION_FACTOR``
    times the target resolution, so by default their answer is scaled by that
    factor.  Pass ``oversample=1`` for the bare pixel criterion.

    Returns ``(height, width)``.
    """
    if theta <= 0:
        raise ValueError("angular diameter must be > 0")
    if oversample is None:
        oversample = 1 if fmt == "sky-angular" else CONVERSION_FACTOR
    target = solid_angle_of_disk(theta)
    s = 2
    while max_pixel_solid_angle(fmt, s) > target:
        s *= 2
        if s > max_size:
            raise ValueError("no viable resolution below max_size")
    return shape_for(fmt, s * oversample)


def _pitch(fmt, shape):
    """Angular pixel pitch along the zenith direction (radians per pixel)."""
    h = shape[0]
    if fmt == "sky-angular":
        return math.pi / h
    if fmt == "sky-latlong":
        return HALF_PI / h
    return math.pi / h


def domain_mask(fmt, size):
    """Pixels that belong to the sky hemisphere of a map."""
    h, w = shape_for(fmt, size)
    if fmt == "sky-angular":
        return solid_angle_map(fmt, (h, w)) > 0
    if fmt == "latlong":
        theta = (np.arange(h) + 0.5) / h * math.pi
        return np.repeat((theta <= HALF_PI)[:, None], w, axis=1)
    return np.ones((h, w), dtype=bool)


def downsample_avg(img, factor):
    """Average-pool by an integer power-of-two ``factor`` (inter-area)."""
    factor = int(factor)
    if factor < 1 or factor & (factor - 1):
        raise ValueError("factor must be a power of two")
    arr = img.data if isinstance(img, RadianceImage) else np.asarray(img, dtype=np.float64)
    h, w = arr.shape[:2]
    if h % factor or w % factor:
        raise ValueError(f"{h}x{w} image is not divisible by {factor}")
    if factor == 1:
        out = arr.copy()
    else:
        tail = arr.shape[2:]
        blocks = arr.reshape((h // factor, factor, w // factor, factor) + tail)
        out = blocks.mean(axis=(1, 3))
    if isinstance(img, RadianceImage):
        return RadianceImage(out, img.format)
    return out


def convert_format(img, target_format, target_size):
    """Resample an environment map into another format / resolution.

    The map is sampled bilinearly (inverse mapping) at a working resolution of
    at least twice the target and at least as fine as the source, then
    average-pooled down to the target.  Pixels that fall outside the source
    domain, and target pixels outside the target domain, are 0.
    """
    src_fmt = img.format
    if src_fmt not in ("sky-angular", "sky-latlong", "latlong"):
        raise ValueError(f"cannot convert from format {src_fmt!r}")
    if target_format not in ("sky-angular", "sky-latlong", "latlong"):
        raise ValueError(f"cannot convert to format {target_format!r}")
    tshape = shape_for(target_format, target_size)
    src = np.asarray(img.data, dtype=np.float64)
    if src_fmt == target_format and tuple(src.shape[:2]) == tshape:
        out = src * (solid_angle_map(target_format, tshape) > 0)[..., None]
        return RadianceImage(out, target_format)

    k = CONVERSION_FACTOR
    while _pitch(target_format, tshape) / k > _pitch(src_fmt, src.shape[:2]) * (1 + 1e-12):
        k *= 2
    wshape = (tshape[0] * k, tshape[1] * k)

    dirs, inside = pixel_directions(target_format, wshape)
    rows, cols = direction_to_pixel(src_fmt, src.shape[:2], dirs.reshape(-1, 3))
    valid = solid_angle_map(src_fmt, src.shape[:2]) > 0
    wrap = src_fmt != "sky-angular"
    work = kernels.bilinear_sample(src, valid, rows, cols, wrap)
    work = work.reshape(wshape + (src.shape[2],))
    work[~inside] = 0.0
    out = downsample_avg(work, k)
    out *= (solid_angle_map(target_format, tshape) > 0)[..., None]
    return RadianceImage(out, target_format)
