"""``@njit`` kernels.  Same contracts as :mod:`skyfdr.kernels._numpy`."""

import warnings

import numpy as np
from numba import njit, prange

warnings.filterwarnings("ignore", module="numba")


@njit(cache=True, parallel=True)
def _weighted_merge(x, w, dt, fallback):
    n_exp, m = x.shape
    out = np.empty(m)
    for k in prange(m):
        num = 0.0
        den = 0.0
        for n in range(n_exp):
            t = dt[n] * w[n, k]
            num = num + t * x[n, k]
            den = den + dt[n] * t
        if den > 0.0:
            out[k] = num / den
        else:
            out[k] = fallback[k]
    return out


def weighted_merge(x, w, dt, fallback):
    return _weighted_merge(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(dt, dtype=np.float64),
        np.ascontiguousarray(fallback, dtype=np.float64),
    )


@njit(cache=True, parallel=True)
def _bilinear_sample(src, valid, rows, cols, wrap_cols):
    h, w, c = src.shape
    m = rows.shape[0]
    out = np.zeros((m, c))
    for k in prange(m):
        r = rows[k]
        cc = cols[k]
        if np.isnan(r) or np.isnan(cc):
            continue
        r = min(max(r, 0.0), h - 1.0)
        if not wrap_cols:
            cc = min(max(cc, 0.0), w - 1.0)
        r0 = int(np.floor(r))
        c0 = int(np.floor(cc))
        fr = r - r0
        fc = cc - c0
        r1 = min(r0 + 1, h - 1)
        if wrap_cols:
            c1 = (c0 + 1) % w
            c0 = c0 % w
        else:
            c1 = min(c0 + 1, w - 1)
        w00 = (1.0 - fr) * (1.0 - fc) * valid[r0, c0]
        w01 = (1.0 - fr) * fc * valid[r0, c1]
        w10 = fr * (1.0 - fc) * valid[r1, c0]
        w11 = fr * fc * valid[r1, c1]
        ws = w00 + w01 + w10 + w11
        if ws > 0.0:
            for ch in range(c):
                acc = w00 * src[r0, c0, ch]
                acc = acc + w01 * src[r0, c1, ch]
                acc = acc + w10 * src[r1, c0, ch]
                acc = acc + w11 * src[r1, c1, ch]
                out[k, ch] = acc / ws
    return out


def bilinear_sample(src, valid, rows, cols, wrap_cols):
    return _bilinear_sample(
        np.ascontiguousarray(src, dtype=np.float64),
        np.ascontiguousarray(valid, dtype=np.float64),
        np.ascontiguousarray(rows, dtype=np.float64),
        np.ascontiguousarray(cols, dtype=np.float64),
        bool(wrap_cols),
    )


@njit(cache=True)
def _neumaier(values):
    s = 0.0
    comp = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return s + comp


def compensated_sum(values):
    """Neumaier-compensated sum in fixed row-major order."""
    return float(_neumaier(np.ascontiguousarray(values, dtype=np.float64).ravel()))


@njit(cache=True, parallel=True)
def _morph(mask, offsets, border, want):
    # want=True: dilation (any hit); want=False: erosion (all hit)
    h, w = mask.shape
    out = np.empty((h, w), dtype=np.bool_)
    n_off = offsets.shape[0]
    for i in prange(h):
        for j in range(w):
            res = not want
            for k in range(n_off):
                y = i + offsets[k, 0]
                x = j + offsets[k, 1]
                if 0 <= y < h and 0 <= x < w:
                    v = mask[y, x]
                else:
                    v = border
                if v == want:
                    res = want
                    break
            out[i, j] = res
    return out


def erode(mask, offsets):
    return _morph(np.ascontiguousarray(mask, dtype=np.bool_),
                  np.ascontiguousarray(offsets, dtype=np.int64), True, False)


def dilate(mask, offsets):
    neg = -np.ascontiguousarray(offsets, dtype=np.int64)
    return _morph(np.ascontiguousarray(mask, dtype=np.bool_), neg, False, True)


@njit(cache=True)
def _rle_channel(data, out, pos):
    n = data.shape[0]
    i = 0
    while i < n:
        j = i
        run = 1
        while j < n:
            run = 1
            while j + run < n and run < 127 and data[j + run] == data[j]:
                run += 1
            if run >= 4:
                break
            j += 1
        while i < j:
            k = min(128, j - i)
            out[pos] = k
            pos += 1
            for q in range(k):
                out[pos + q] = data[i + q]
            pos += k
            i += k
        if j < n:
            out[pos] = 128 + run
            out[pos + 1] = data[j]
            pos += 2
            i = j + run
    return pos


@njit(cache=True)
def _rle_encode(rgbe):
    h, w, _ = rgbe.shape
    out = np.empty(h * (4 + 4 * (w + w // 128 + 2)), dtype=np.uint8)
    pos = 0
    for y in range(h):
        out[pos] = 2
        out[pos + 1] = 2
        out[pos + 2] = w >> 8
        out[pos + 3] = w & 0xFF
        pos += 4
        for ch in range(4):
            pos = _rle_channel(np.ascontiguousarray(rgbe[y, :, ch]), out, pos)
    return out[:pos]


def rle_encode(rgbe):
    rgbe = np.ascontiguousarray(rgbe, dtype=np.uint8)
    w = rgbe.shape[1]
    if w < 8 or w > 0x7FFF:
        return rgbe.tobytes()
    return _rle_encode(rgbe).tobytes()


@njit(cache=True)
def _rle_decode(buf, width, height):
    n = buf.shape[0]
    out = np.zeros((height, width, 4), dtype=np.uint8)
    pos = 0
    # status: 0 ok, 1 truncated, 2 corrupt
    for y in range(height):
        if pos + 4 > n:
            return out, pos, 1
        if (8 <= width <= 0x7FFF and buf[pos] == 2 and buf[pos + 1] == 2
                and buf[pos + 2] < 128):
            if (np.int64(buf[pos + 2]) << 8 | np.int64(buf[pos + 3])) != width:
                return out, pos, 2
            pos += 4
            for ch in range(4):
                x = 0
                while x < width:
                    if pos >= n:
                        return out, pos, 1
                    count = np.int64(buf[pos])
                    pos += 1
                    if count > 128:
                        count -= 128
                        if x + count > width:
                            return out, pos, 2
                        if pos >= n:
                            return out, pos, 1
                        v = buf[pos]
                        pos += 1
                        for q in range(count):
                            out[y, x + q, ch] = v
                    else:
                        if count == 0 or x + count > width:
                            return out, pos, 2
                        if pos + count > n:
                            return out, pos, 1
                        for q in range(count):
                            out[y, x + q, ch] = buf[pos + q]
                        pos += count
                    x += count
        else:
            x = 0
            shift = 0
            while x < width:
                if pos + 4 > n:
                    return out, pos, 1
                if buf[pos] == 1 and buf[pos + 1] == 1 and buf[pos + 2] == 1:
                    if x == 0:
                        return out, pos, 2
                    count = np.int64(buf[pos + 3]) << shift
                    if x + count > width:
                        return out, pos, 2
                    for q in range(count):
                        for ch in range(4):
                            out[y, x + q, ch] = out[y, x - 1, ch]
                    x += count
                    shift += 8
                else:
                    for ch in range(4):
                        out[y, x, ch] = buf[pos + ch]
                    x += 1
                    shift = 0
                pos += 4
    return out, pos, 0


def rle_decode(payload, width, height):
    buf = np.frombuffer(bytes(payload), dtype=np.uint8)
    out, pos, status = _rle_decode(buf, int(width), int(height))
    if status == 1:
        raise ValueError("truncated scanline data")
    if status == 2:
        raise ValueError("corrupt RLE scanline")
    return out, int(pos)
