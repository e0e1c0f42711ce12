"""Illumination metrics: exposure value, integrated illumination, peak luminance."""

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .image import RadianceImage, as_array, grayscale

REPORT_KEYS = ("ev", "integrated_illumination", "peak_luminance", "pixels")


@dataclass
class IlluminationReport:
    ev: float
    integrated_illumination: float
    peak_luminance: float
    pixels: int

    def to_text(self):
        """Flat JSON object with the four report keys."""
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_text(cls, text):
        obj = json.loads(text)
        if set(obj) != set(REPORT_KEYS):
            raise ValueError(f"report keys must be exactly {REPORT_KEYS}")
        return cls(**obj)


def _check_dims(gray, omega):
    if omega is not None and np.shape(omega) != gray.shape:
        raise ValueError(f"solid-angle map shape {np.shape(omega)} != image shape {gray.shape}")


def exposure_value(img, omega=None):
    """``log2(max|I| - min|I| + 1)`` over the grayscale image.

    When ``omega`` is given, only pixels with a positive solid angle count, so
    structural border zeros do not pin the minimum.
    """
    gray = grayscale(img)
    _check_dims(gray, omega)
    if omega is not None:
        gray = gray[np.asarray(omega) > 0]
    if gray.size == 0:
        return 0.0
    return float(np.log2(gray.max() - gray.min() + 1.0))


def integrated_illumination(img, omega):
    """Solid-angle weighted sum of grayscale radiance, compensated and in
    row-major order so repeated runs agree bit for bit."""
    gray = grayscale(img)
    _check_dims(gray, omega)
    return kernels.compensated_sum(np.asarray(omega, dtype=np.float64) * gray)


def peak_luminance(img, omega):
    """Largest solid-angle weighted grayscale value."""
    gray = grayscale(img)
    _check_dims(gray, omega)
    if gray.size == 0:
        return 0.0
    return float((np.asarray(omega, dtype=np.float64) * gray).max())


def illumination_report(img, omega=None, exclude_border=True):
    """All three metrics for an image.

    ``omega`` defaults to the solid-angle map of ``img.format``.  With
    ``exclude_border`` off, EV is taken over every pixel.
    """
    if omega is None:
        if not isinstance(img, RadianceImage):
            raise ValueError("omega is required for plain arrays")
        from .geometry import solid_angle_map

        omega = solid_angle_map(img.format, img.shape)
    arr = as_array(img)
    omega = np.asarray(omega, dtype=np.float64)
    ev = exposure_value(arr, omega if exclude_border else None)
    return IlluminationReport(
        ev=ev,
        integrated_illumination=integrated_illumination(arr, omega),
        peak_luminance=peak_luminance(arr, omega),
        pixels=int(np.count_nonzero(omega > 0)),
    )

