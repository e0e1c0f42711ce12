"""Image buffers, grayscale reduction, RGB/HSV conversion and EV clipping."""

from dataclasses import dataclass

import numpy as np

FORMATS = ("sky-angular", "sky-latlong", "latlong", "none")

# Rec.709 / BT.709 luma weights
LUMA = np.array([0.2126, 0.7152, 0.0722])


@dataclass
class RadianceImage:
    """Linear relative radiance, ``data`` of shape (height, width, 3).

    Rows run top to bottom; channels are R, G, B.  ``format`` is one of
    :data:`FORMATS` and tells the geometry module how pixels map to directions.
    """

    data: np.ndarray
    format: str = "none"

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.dtype.kind != "f":
            self.data = self.data.astype(np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) data, got shape {self.data.shape}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}; expected one of {FORMATS}")
        h, w = self.data.shape[:2]
        if h < 1 or w < 1:
            raise ValueError("image must be at least 1x1")
        if self.format == "sky-angular" and h != w:
            raise ValueError(f"sky-angular images must be square, got {w}x{h}")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape[:2]

    def validate(self, ldr=False):
        """Raise ``ValueError`` unless every value is finite and non-negative
        (and at most 1 when ``ldr`` is set)."""
        d = self.data
        if not np.all(np.isfinite(d)):
            raise ValueError("image contains non-finite values")
        if np.any(d < 0):
            raise ValueError("image contains negative values")
        if ldr and np.any(d > 1):
            raise ValueError("LDR image contains values above 1")
        return self

    def with_data(self, data):
        return RadianceImage(data, self.format)


def as_array(img):
    """Return the pixel array of a :class:`RadianceImage` or array-like."""
    if isinstance(img, RadianceImage):
        return img.data
    return np.asarray(img)


def grayscale(img):
    """Rec.709 luma ``|I|`` of an RGB image, shape (H, W)."""
    arr = np.asarray(as_array(img), dtype=np.float64)
    return arr[..., 0] * LUMA[0] + arr[..., 1] * LUMA[1] + arr[..., 2] * LUMA[2]


def rgb_to_hsv(img):
    """Convert RGB to HSV with H in degrees [0, 360), S in [0, 1], V = max(R, G, B).

    V keeps the input's units, so this works on linear radiance as well as on
    LDR values.  H is 0 for achromatic pixels.
    """
    rgb = np.asarray(as_array(img), dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    chroma = v - mn
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(v != 0, chroma / np.where(v != 0, v, 1.0), 0.0)
        safe = np.where(chroma != 0, chroma, 1.0)
        h = np.where(
            v == r,
            60.0 * (g - b) / safe,
            np.where(v == g, 120.0 + 60.0 * (b - r) / safe, 240.0 + 60.0 * (r - g) / safe),
        )
    h = np.where(chroma == 0, 0.0, h)
    h = np.where(h < 0, h + 360.0, h)
    h = np.where(h >= 360.0, h - 360.0, h)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(img):
    """Inverse of :func:`rgb_to_hsv` (sextant reconstruction)."""
    hsv = np.asarray(as_array(img), dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    hp = np.mod(h, 360.0) / 60.0
    sector = np.floor(hp).astype(np.int64) % 6
    f = hp - np.floor(hp)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    conds = [sector == k for k in range(6)]
    r = np.select(conds, choices_r)
    g = np.select(conds, choices_g)
    b = np.select(conds, choices_b)
    return np.stack([r, g, b], axis=-1)


def _domain_mask(img, omega):
    if omega is not None:
        return np.asarray(omega) > 0
    if isinstance(img, RadianceImage) and img.format != "none":
        from .geometry import solid_angle_map

        return solid_angle_map(img.format, img.shape) > 0
    return np.ones(as_array(img).shape[:2], dtype=bool)


def clip_to_ev(img, ev_target, equalize=False, omega=None, mode="luminance"):
    """Clip an image so its exposure value does not exceed ``ev_target``.

    The clip level is ``t = m + 2**ev_target - 1`` where ``m`` is the minimum
    grayscale value over the image's domain (pixels with a positive solid
    angle; the whole image for format ``"none"``).  In the default
    ``"luminance"`` mode each pixel whose grayscale exceeds ``t`` is scaled
    down to grayscale ``t``, keeping its chromaticity, so the output EV is
    exactly ``min(EV, ev_target)``.  ``mode="channel"`` clips every channel
    value to ``t`` instead; for chromatic pixels that can push grayscale
    below ``m`` and the EV bound no longer holds.  With ``equalize`` the
    clipped image is rescaled so that its integrated illumination matches
    the input's.

    Parameters
    ----------
    img : RadianceImage
    ev_target : float
        Target exposure value in f-stops, >= 0.
    equalize : bool
        Restore the input's integrated illumination after clipping.
    omega : ndarray, optional
        Per-pixel solid angles; derived from ``img.format`` when omitted.
    mode : {"luminance", "channel"}

    Returns
    -------
    RadianceImage
    """
    if ev_target < 0:
        raise ValueError(f"ev_target must be >= 0, got {ev_target}")
    if mode not in ("luminance", "channel"):
        raise ValueError(f"unknown clip mode {mode!r}")
    if not isinstance(img, RadianceImage):
        img = RadianceImage(img)
    data = img.data.astype(np.float64)
    dom = _domain_mask(img, omega)
    gray = grayscale(data)
    m = float(gray[dom].min()) if dom.any() else 0.0
    threshold = m + 2.0 ** ev_target - 1.0
    g_dom = gray[dom] if dom.any() else gray.ravel()
    if g_dom.size and np.log2(g_dom.max() - m + 1.0) <= ev_target and (
            mode == "luminance" or data[dom].max() <= threshold):
        return RadianceImage(data, img.format)
    if mode == "channel":
        clipped = np.minimum(data, threshold)
    else:
        # a few ulps of slack keep re-clipping an already clipped image a no-op
        over = gray > threshold * (1.0 + 8.0 * np.finfo(float).eps)
        scale = np.ones_like(gray)
        scale[over] = threshold / gray[over]
        clipped = data * scale[..., None]
        # make the clipped grayscale land exactly on the threshold
        clipped[over & (data.min(axis=-1) == data.max(axis=-1))] = threshold
    if equalize:
        from .metrics import integrated_illumination

        if omega is None:
            from .geometry import solid_angle_map

            omega = solid_angle_map(img.format, img.shape)
        before = integrated_illumination(data, omega)
        after = integrated_illumination(clipped, omega)
        if after > 0:
            clipped = clipped * (before / after)
    return RadianceImage(clipped, img.format)
