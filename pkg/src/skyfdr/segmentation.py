"""Sky segmentation: cloud ratio mask, brush smoothing, solar masks, composite labels."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import domain_mask, pixel_directions, shape_for, solar_disk_target, solid_angle_map
from .image import RadianceImage, as_array
from .tonemap import ToneMapper

BORDER, SKY, CLOUD, CORONA, DISK = range(5)
CLASS_NAMES = ("border", "sky", "cloud", "corona", "disk")

CLOUD_THRESHOLD = 0.30
DISK_RADIUS_DEG = 0.25
CORONA_RADIUS_DEG = 2.5
BRUSH_DIAMETER = 15


@dataclass
class SegmentationLabel:
    """Per-pixel class ids (uint8, 0..4) and the map format."""

    classes: np.ndarray
    format: str = "none"

    def __post_init__(self):
        self.classes = np.asarray(self.classes)
        if self.classes.ndim != 2:
            raise ValueError("label must be 2-D")
        if self.classes.size and (self.classes.min() < 0 or self.classes.max() > DISK):
            raise ValueError("class ids must lie in 0..4")
        self.classes = self.classes.astype(np.uint8)

    @property
    def shape(self):
        return self.classes.shape

    def masks(self):
        """``(cloud, disk, corona)`` boolean masks, the inputs of :func:`composite_label`."""
        c = self.classes
        return c == CLOUD, c == DISK, c == CORONA


def direction_from_az_el(azimuth_deg, elevation_deg):
    """Unit vector for a sun at the given azimuth (from +x toward +y) and elevation."""
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    return np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])


def blue_red_ratio(img, mu=5000.0):
    """``(B - R) / (B + R)`` on mu-law tone-mapped channels, 0 where ``B + R = 0``."""
    arr = as_array(img)
    tm = ToneMapper("mu_law_log2", mu=mu)
    r = tm.apply(arr[..., 0])
    b = tm.apply(arr[..., 2])
    s = b + r
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, (b - r) / safe, 0.0)


def cloud_mask(img, threshold=CLOUD_THRESHOLD, mu=5000.0):
    """Cloud where the blue/red ratio is at most ``threshold`` (gray means cloud)."""
    return blue_red_ratio(img, mu) <= threshold


def disk_offsets(diameter):
    """Pixel offsets ``(dy, dx)`` of a circular structuring element."""
    diameter = int(diameter)
    if diameter < 1 or diameter % 2 == 0:
        raise ValueError("brush diameter must be an odd integer >= 1")
    r = (diameter - 1) // 2
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1).astype(np.int64)


def handdrawn(mask, kernel_diameter=BRUSH_DIAMETER):
    """Opening then closing with a circular brush.

    Components narrower than the brush vanish and boundaries are smoothed.
    """
    offs = disk_offsets(kernel_diameter)
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError("mask must be 2-D")
    opened = kernels.dilate(kernels.erode(m, offs), offs)
    return kernels.erode(kernels.dilate(opened, offs), offs)


def angular_distance(dirs, sun):
    """Angle (radians) between each direction and ``sun``; NaN directions give NaN."""
    s = np.asarray(sun, dtype=np.float64)
    s = s / np.linalg.norm(s)
    dot = dirs @ s
    cross = np.linalg.norm(np.cross(dirs, s), axis=-1)
    return np.arctan2(cross, dot)


def solar_mask(fmt, size, sun):
    """Solar disk and corona masks for a sun direction.

    The corona holds pixels within 2.5 degrees of the sun, minus the disk.
    The disk is rasterised by area: pixels are ranked by angular distance and
    the closest ``k >= 1`` are taken so that their summed solid angle is as
    near as possible to that of a 0.5 degree disk.  At fine resolutions this
    is the set of pixels within 0.25 degrees; when the sun is smaller than a
    pixel the nearest pixel is promoted, so the disk is never empty.
    """
    sun = np.asarray(sun, dtype=np.float64)
    norm = np.linalg.norm(sun)
    if sun.shape != (3,) or not norm > 0:
        raise ValueError("sun must be a non-zero 3-vector")
    sun = sun / norm
    if sun[2] < 0:
        raise ValueError("sun is below the horizon")
    h, w = shape_for(fmt, size)
    dirs, inside = pixel_directions(fmt, (h, w))
    omega = solid_angle_map(fmt, (h, w))
    valid = inside & (omega > 0)
    ang = angular_distance(np.where(inside[..., None], dirs, 0.0), sun)
    ang = np.where(valid, ang, np.inf)

    flat = ang.ravel()
    order = np.argsort(flat, kind="stable")
    n_valid = int(np.count_nonzero(valid))
    cand = order[:n_valid]
    cum = np.cumsum(omega.ravel()[cand])
    k = int(np.argmin(np.abs(cum - solar_disk_target()))) + 1
    disk = np.zeros(h * w, dtype=bool)
    disk[cand[:k]] = True
    disk = disk.reshape(h, w)
    corona = (ang <= math.radians(CORONA_RADIUS_DEG)) & ~disk
    return disk, corona


def composite_label(cloud, disk, corona, fmt, size):
    """Merge masks with priority disk > corona > cloud > sky; outside the sky
    domain every pixel is border."""
    h, w = shape_for(fmt, size)
    masks = [np.asarray(m, dtype=bool) for m in (cloud, disk, corona)]
    for m in masks:
        if m.shape != (h, w):
            raise ValueError(f"mask shape {m.shape} != map shape {(h, w)}")
    cloud, disk, corona = masks
    label = np.full((h, w), SKY, dtype=np.uint8)
    label[cloud] = CLOUD
    label[corona] = CORONA
    label[disk] = DISK
    label[~domain_mask(fmt, (h, w))] = BORDER
    return SegmentationLabel(label, fmt)


def segment(img, sun=None, threshold=CLOUD_THRESHOLD, brush=BRUSH_DIAMETER):
    """Full pipeline: cloud ratio mask, brush smoothing, solar masks, composite."""
    if not isinstance(img, RadianceImage):
        raise TypeError("segment needs a RadianceImage")
    fmt, (h, w) = img.format, img.shape[:2]
    cloud = cloud_mask(img, threshold)
    if brush and brush > 1:
        cloud = handdrawn(cloud, brush)
    if sun is None:
        disk = corona = np.zeros((h, w), dtype=bool)
    else:
        disk, corona = solar_mask(fmt, (h, w), sun)
    return composite_label(cloud, disk, corona, fmt, (h, w))
