"""Merge LDR exposure brackets back into radiance."""

import math

import numpy as np

from . import kernels
from .bracketing import ExposureBracket
from .image import RadianceImage, hsv_to_rgb, rgb_to_hsv

CLASS_IDS = frozenset(range(5))

# Robertson weight constants for LDR values in [0, 1] (psi = 255, lambda = psi / 4)
ROBERTSON_ALPHA = math.exp(4.0) / (math.exp(4.0) - 1.0)
ROBERTSON_BETA = 1.0 / (1.0 - math.exp(4.0))

METHODS = ("rgb", "robertson", "hsv:rgb", "hsv:robertson", "weighted")


def robertson_weight(ldr, literal=False):
    """Gaussian-like confidence of an LDR value in [0, 1].

    ``alpha * exp(-(4v - 2)**2) + beta``, evaluated as
    ``expm1(4 - (4v - 2)**2) / expm1(4)`` so that w(0) = w(1) = 0 and
    w(0.5) = 1 hold exactly.  ``literal=True`` gives the unsquared exponent
    ``alpha * exp(4v - 2) + beta`` for comparison only; it is monotone and
    unsuitable for fusion.
    """
    v = np.asarray(ldr, dtype=np.float64)
    if literal:
        return ROBERTSON_ALPHA * np.exp(4.0 * v - 2.0) + ROBERTSON_BETA
    x = 4.0 * v - 2.0
    return np.expm1(4.0 - x * x) / math.expm1(4.0)


def validity_mask(bracket):
    """1 where ``eps_lo <= I_n <= eps_hi``, else 0."""
    e = bracket.exposures
    return ((e >= bracket.eps_lo) & (e <= bracket.eps_hi)).astype(np.float64)


def robertson_weights(bracket):
    return robertson_weight(bracket.exposures)


def _inverse_tonemap(bracket):
    """``T^-1(I_n)`` for every exposure, with exact zeros kept at zero."""
    tm = bracket.tonemapper
    lo, hi = tm.output_range()
    e = bracket.exposures
    out = np.zeros_like(e)
    nz = e != 0
    out[nz] = tm.invert(np.clip(e[nz], lo, hi))
    return out


def _fallback(bracket, inv):
    """Value for pixels whose weights sum to zero.

    If the longest exposure is saturated on the bright side the pixel is
    treated as over-bright and recovered from the shortest exposure,
    otherwise as under-dark and recovered from the longest one.  LDR values
    are clipped into the unsaturated body before inversion; zeros stay 0.
    """
    e = bracket.exposures
    tm = bracket.tonemapper
    dt = bracket.dt
    lo_r, hi_r = tm.output_range()
    longest, shortest = e[0], e[-1]
    if tm.increasing:
        bright = longest > bracket.eps_hi
        short_c = np.minimum(shortest, bracket.eps_hi)
        long_c = np.minimum(longest, bracket.eps_lo)
    else:
        bright = (longest < bracket.eps_lo) & (longest > 0)
        short_c = np.maximum(shortest, bracket.eps_lo)
        long_c = np.maximum(longest, bracket.eps_hi)
    over = np.where(shortest != 0, tm.invert(np.clip(short_c, lo_r, hi_r)), 0.0) / dt[-1]
    under = np.where(longest != 0, tm.invert(np.clip(long_c, lo_r, hi_r)), 0.0) / dt[0]
    return np.where(bright, over, under)


def _merge(bracket, x, weights, dt):
    n = len(bracket)
    shape = bracket.exposures.shape[1:]
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != bracket.exposures.shape:
        raise ValueError(f"weights shape {w.shape} != bracket shape {bracket.exposures.shape}")
    fb = _fallback(bracket, x)
    out = kernels.weighted_merge(x.reshape(n, -1), w.reshape(n, -1), dt, fb.reshape(-1))
    return out.reshape(shape)


def _wrap(bracket, arr):
    if arr.shape[-1] == 3:
        return RadianceImage(arr, bracket.format)
    return arr


def fuse_rgb(bracket, weights=None):
    """Masked average of per-exposure radiance ``T^-1(I_n) / dt_n``.

    ``weights`` defaults to :func:`validity_mask`.
    """
    if weights is None:
        weights = validity_mask(bracket)
    inv = _inverse_tonemap(bracket)
    dt = bracket.dt
    recovered = inv / dt.reshape((-1,) + (1,) * (inv.ndim - 1))
    out = _merge(bracket, recovered, weights, np.ones_like(dt))
    return _wrap(bracket, out)


def fuse_weighted(bracket, weights):
    """``sum(dt_n W_n T^-1(I_n)) / sum(dt_n^2 W_n)`` with externally supplied weights."""
    inv = _inverse_tonemap(bracket)
    return _wrap(bracket, _merge(bracket, inv, weights, bracket.dt))


def fuse_robertson(bracket):
    """Floating-point Robertson estimator: :func:`fuse_weighted` with
    :func:`robertson_weight` confidences."""
    return fuse_weighted(bracket, robertson_weights(bracket))


_SCALAR = {"rgb": fuse_rgb, "robertson": fuse_robertson}


def fuse_hsv(bracket, inner="rgb"):
    """Fuse only brightness, keeping hue and saturation of the first exposure.

    Each exposure's V = max(R, G, B) is fused with the ``inner`` scalar method
    (``"rgb"`` or ``"robertson"``).  Hue and saturation come from the first
    (longest) exposure after inverse tone mapping, so they describe linear
    radiance rather than tone-mapped values.
    """
    if inner not in _SCALAR:
        raise ValueError(f"unknown inner fusion method {inner!r}")
    v_stack = bracket.exposures.max(axis=-1, keepdims=True)
    v_bracket = bracket.replace(exposures=v_stack)
    v_hat = np.asarray(_SCALAR[inner](v_bracket))[..., 0]
    inv0 = _inverse_tonemap(bracket.replace(exposures=bracket.exposures[:1],
                                            times=bracket.times.times[:1]))[0]
    hsv0 = rgb_to_hsv(inv0)
    out = hsv_to_rgb(np.stack([hsv0[..., 0], hsv0[..., 1], v_hat], axis=-1))
    return RadianceImage(out, bracket.format)


def mask_classes(bracket, label, spec):
    """Zero exposure ``n`` wherever the label is not in ``spec[n]``.

    ``spec`` maps exposure index to an iterable of class ids; exposures that
    are not listed keep every class.
    """
    label = np.asarray(label)
    if label.shape != bracket.exposures.shape[1:3]:
        raise ValueError(f"label shape {label.shape} != bracket image shape "
                         f"{bracket.exposures.shape[1:3]}")
    out = bracket.exposures.copy()
    for n, classes in spec.items():
        if not 0 <= n < len(bracket):
            raise ValueError(f"class mask refers to exposure {n}, bracket has {len(bracket)}")
        classes = set(int(c) for c in classes)
        unknown = classes - CLASS_IDS
        if unknown:
            raise ValueError(f"unknown class ids {sorted(unknown)}")
        keep = np.isin(label, sorted(classes))
        out[n] = np.where(keep[..., None], out[n], 0.0)
    return bracket.replace(exposures=out)


def parse_class_mask(text):
    """Parse ``"0=0,1,2;1=3,4"`` into ``{0: {0, 1, 2}, 1: {3, 4}}``."""
    spec = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        idx, _, ids = part.partition("=")
        try:
            n = int(idx)
            classes = {int(c) for c in ids.split(",") if c.strip()}
        except ValueError:
            raise ValueError(f"bad class mask entry {part!r}") from None
        unknown = classes - CLASS_IDS
        if unknown:
            raise ValueError(f"unknown class ids {sorted(unknown)}")
        spec[n] = classes
    return spec


def fuse(bracket, method="rgb", weights=None):
    """Dispatch on the method names used by the command line."""
    if method == "rgb":
        return fuse_rgb(bracket)
    if method == "robertson":
        return fuse_robertson(bracket)
    if method.startswith("hsv:"):
        return fuse_hsv(bracket, method[4:])
    if method == "weighted":
        if weights is None:
            raise ValueError("method 'weighted' needs weights")
        return fuse_weighted(bracket, weights)
    raise ValueError(f"unknown fusion method {method!r}; expected one of {METHODS}")
