"""Pure numpy / Python reference kernels (the ``SKYFDR_DISABLE_JIT`` path)."""

import math

import numpy as np


def weighted_merge(x, w, dt, fallback):
    """Per-element ``sum(dt*w*x) / sum(dt*dt*w)`` over the leading axis.

    ``x`` and ``w`` are ``(N, M)``; ``dt`` is ``(N,)``; ``fallback`` is ``(M,)``
    and is used wherever the denominator is zero.  Terms are accumulated in
    exposure order so the result does not depend on array layout.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    num = np.zeros(x.shape[1])
    den = np.zeros(x.shape[1])
    for n in range(x.shape[0]):
        t = dt[n] * w[n]
        num = num + t * x[n]
        den = den + dt[n] * t
    out = np.array(fallback, dtype=np.float64, copy=True)
    ok = den > 0.0
    out[ok] = num[ok] / den[ok]
    return out


def bilinear_sample(src, valid, rows, cols, wrap_cols):
    """Sample ``src`` (H, W, C) at fractional pixel-centre coordinates.

    NaN coordinates yield zeros.  Rows are clamped to the image; columns are
    clamped, or wrapped when ``wrap_cols`` is set (periodic azimuth).  Taps on
    pixels where ``valid`` is false are dropped and the remaining weights are
    renormalised.
    """
    h, w, c = src.shape
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    out = np.zeros((rows.size, c))
    ok = ~(np.isnan(rows) | np.isnan(cols))
    r = np.clip(rows[ok], 0.0, h - 1.0)
    cc = cols[ok]
    if not wrap_cols:
        cc = np.clip(cc, 0.0, w - 1.0)
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(cc).astype(np.int64)
    fr = r - r0
    fc = cc - c0
    r1 = np.minimum(r0 + 1, h - 1)
    if wrap_cols:
        c1 = (c0 + 1) % w
        c0 = c0 % w
    else:
        c1 = np.minimum(c0 + 1, w - 1)
    vf = valid.astype(np.float64)
    taps = (
        (r0, c0, (1.0 - fr) * (1.0 - fc)),
        (r0, c1, (1.0 - fr) * fc),
        (r1, c0, fr * (1.0 - fc)),
        (r1, c1, fr * fc),
    )
    acc = np.zeros((r.size, c))
    wsum = np.zeros(r.size)
    for ri, ci, wt in taps:
        wt = wt * vf[ri, ci]
        acc += wt[:, None] * src[ri, ci]
        wsum += wt
    res = np.zeros_like(acc)
    nz = wsum > 0.0
    res[nz] = acc[nz] / wsum[nz, None]
    out[ok] = res
    return out


def compensated_sum(values):
    """Correctly rounded sum of a flat float array (``math.fsum``)."""
    return math.fsum(np.asarray(values, dtype=np.float64).ravel().tolist())


def _shifted_views(padded, offsets, h, w, pad):
    for dy, dx in offsets:
        yield padded[pad + dy: pad + dy + h, pad + dx: pad + dx + w]


def erode(mask, offsets):
    """Binary erosion; pixels beyond the image count as foreground."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    pad = int(np.abs(offsets).max()) if len(offsets) else 0
    padded = np.pad(mask, pad, constant_values=True)
    out = np.ones_like(mask)
    for view in _shifted_views(padded, offsets, h, w, pad):
        out &= view
    return out


def dilate(mask, offsets):
    """Binary dilation; pixels beyond the image count as background."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    pad = int(np.abs(offsets).max()) if len(offsets) else 0
    padded = np.pad(mask, pad, constant_values=False)
    out = np.zeros_like(mask)
    # reflect the structuring element: out[p] = any(mask[p - o])
    for view in _shifted_views(padded, -np.asarray(offsets), h, w, pad):
        out |= view
    return out


def _rle_encode_channel(data, out):
    n = len(data)
    i = 0
    while i < n:
        # find next run of >= 4 identical bytes
        j = i
        run = 1
        while j < n:
            run = 1
            while j + run < n and run < 127 and data[j + run] == data[j]:
                run += 1
            if run >= 4:
                break
            j += 1
        # literal bytes before the run
        while i < j:
            k = min(128, j - i)
            out.append(k)
            out.extend(data[i:i + k])
            i += k
        if j < n:
            out.append(128 + run)
            out.append(data[j])
            i = j + run


def rle_encode(rgbe):
    """Encode (H, W, 4) uint8 RGBE pixels as Radiance scanlines."""
    h, w, _ = rgbe.shape
    out = bytearray()
    if w < 8 or w > 0x7FFF:
        return bytes(rgbe.tobytes())
    for y in range(h):
        out.extend((2, 2, w >> 8, w & 0xFF))
        for ch in range(4):
            _rle_encode_channel(rgbe[y, :, ch].tolist(), out)
    return bytes(out)


def rle_decode(payload, width, height):
    """Decode Radiance scanlines (adaptive RLE, flat, or old-style repeats).

    Returns an (H, W, 4) uint8 array.  Raises ``ValueError`` on corrupt or
    truncated data.
    """
    buf = bytes(payload)
    n = len(buf)
    out = np.zeros((height, width, 4), dtype=np.uint8)
    pos = 0
    for y in range(height):
        if pos + 4 > n:
            raise ValueError("truncated scanline data")
        b0, b1, b2, b3 = buf[pos:pos + 4]
        if 8 <= width <= 0x7FFF and b0 == 2 and b1 == 2 and b2 < 128:
            if (b2 << 8 | b3) != width:
                raise ValueError("corrupt RLE: scanline width mismatch")
            pos += 4
            for ch in range(4):
                x = 0
                while x < width:
                    if pos >= n:
                        raise ValueError("truncated RLE data")
                    count = buf[pos]
                    pos += 1
                    if count > 128:
                        count -= 128
                        if x + count > width or pos >= n:
                            raise ValueError("corrupt RLE: run overflows scanline")
                        out[y, x:x + count, ch] = buf[pos]
                        pos += 1
                    else:
                        if count == 0 or x + count > width or pos + count > n:
                            raise ValueError("corrupt RLE: bad literal run")
                        out[y, x:x + count, ch] = np.frombuffer(buf, np.uint8, count, pos)
                        pos += count
                    x += count
        else:
            x = 0
            shift = 0
            while x < width:
                if pos + 4 > n:
                    raise ValueError("truncated flat scanline")
                px = buf[pos:pos + 4]
                pos += 4
                if px[0] == 1 and px[1] == 1 and px[2] == 1:
                    if x == 0:
                        raise ValueError("corrupt RLE: repeat without previous pixel")
                    count = px[3] << shift
                    if x + count > width:
                        raise ValueError("corrupt RLE: repeat overflows scanline")
                    out[y, x:x + count] = out[y, x - 1]
                    x += count
                    shift += 8
                else:
                    out[y, x] = np.frombuffer(px, np.uint8)
                    x += 1
                    shift = 0
    return out, pos
