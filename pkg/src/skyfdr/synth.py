"""Seeded synthetic skies and FDR test images."""

import math

import numpy as np

from .geometry import pixel_directions, shape_for
from .image import RadianceImage
from .segmentation import angular_distance, direction_from_az_el, solar_mask

# clear-sky colour, blue dominant
SKY_RGB = np.array([0.25, 0.45, 1.0])
CLOUD_RGB = np.array([0.9, 0.9, 0.92])


def _noise_field(dirs, rng, octaves=4):
    """Smooth random field on the sphere from a sum of random plane waves."""
    out = np.zeros(dirs.shape[:-1])
    for o in range(octaves):
        freq = 2.0 ** (o + 1)
        for _ in range(6):
            k = rng.normal(size=3)
            k *= freq / np.linalg.norm(k)
            out += np.sin(dirs @ k + rng.uniform(0, 2 * math.pi)) / freq
    return out


def synthetic_sky(size=512, fmt="sky-angular", sun_az=90.0, sun_el=45.0,
                  sun_intensity=2.0 ** 14, cloud_cover=0.3, sky_level=1.0, seed=0):
    """A clear or partly cloudy sky with a bright solar disk.

    ``cloud_cover`` in [0, 1] is the approximate cloud fraction; clouds are
    gray, the clear sky is blue.  Pixels outside the map domain are 0.
    """
    if not 0.0 <= cloud_cover <= 1.0:
        raise ValueError("cloud_cover must lie in [0, 1]")
    if sun_intensity <= 0 or sky_level <= 0:
        raise ValueError("intensities must be > 0")
    rng = np.random.default_rng(seed)
    h, w = shape_for(fmt, size)
    dirs, inside = pixel_directions(fmt, (h, w))
    d = np.where(inside[..., None], dirs, 0.0)
    sun = direction_from_az_el(sun_az, sun_el)
    gamma = angular_distance(d, sun)
    z = np.clip(d[..., 2], 0.0, 1.0)

    # brighter toward the horizon and around the sun
    lum = sky_level * (1.0 + 1.5 * np.exp(-3.0 * z)) * (1.0 + 6.0 * np.exp(-gamma / 0.25))
    img = lum[..., None] * SKY_RGB

    if cloud_cover > 0:
        field = _noise_field(d, rng)
        cut = np.quantile(field[inside], 1.0 - cloud_cover) if cloud_cover < 1 else -np.inf
        cover = np.clip((field - cut) * 4.0, 0.0, 1.0)
        cloud = (lum * (0.6 + 0.4 * rng.uniform(size=lum.shape)))[..., None] * CLOUD_RGB
        img = img * (1.0 - cover[..., None]) + cloud * cover[..., None]

    if sun[2] >= 0:
        disk, _ = solar_mask(fmt, (h, w), sun)
        img[disk] = sun_intensity
    img[~inside] = 0.0
    if fmt == "latlong":
        img[d[..., 2] < 0] = 0.0
    return RadianceImage(img, fmt)


def random_fdr(shape, rng, lo_exp=0.0, hi_exp=15.0, hot_fraction=0.002):
    """Random (H, W, 3) radiance with log2 values uniform in ``[lo_exp, hi_exp]``.

    A ``hot_fraction`` of pixels is set to ``2**hi_exp`` in every channel,
    standing in for the solar disk.
    """
    h, w = shape
    data = 2.0 ** rng.uniform(lo_exp, hi_exp, size=(h, w, 3))
    hot = rng.uniform(size=(h, w)) < hot_fraction
    data[hot] = 2.0 ** hi_exp
    return RadianceImage(data, "none")
