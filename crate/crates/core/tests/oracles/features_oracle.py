"""Independent reference for the built-in 120-D image descriptor.

Regenerates tests/fixtures/checkerboard_features.txt:

    python3 tests/oracles/features_oracle.py > tests/fixtures/checkerboard_features.txt
"""
import math
import numpy as np
from scipy import ndimage


def checkerboard(size=128, square=8, lo=0, hi=255):
    y, x = np.mgrid[0:size, 0:size]
    return np.where(((x // square) + (y // square)) % 2 == 0, hi, lo).astype(np.uint8)


def features(img):
    h, w = img.shape
    f = img.astype(np.float64)
    out = []

    hist = np.bincount((img >> 2).ravel(), minlength=64).astype(np.float64)
    out += list(hist / hist.sum())

    orient = np.zeros(32)
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            gx = (f[y - 1, x + 1] + 2 * f[y, x + 1] + f[y + 1, x + 1]) - (f[y - 1, x - 1] + 2 * f[y, x - 1] + f[y + 1, x - 1])
            gy = (f[y + 1, x - 1] + 2 * f[y + 1, x] + f[y + 1, x + 1]) - (f[y - 1, x - 1] + 2 * f[y - 1, x] + f[y - 1, x + 1])
            mag = math.hypot(gx, gy)
            if mag > 0:
                b = math.floor((math.atan2(gy, gx) + math.pi) / (2 * math.pi) * 32)
                orient[b % 32] += mag
    if orient.sum() > 0:
        orient /= orient.sum()
    out += list(orient)

    cy, cx = h / 2, w / 2
    r2max = cx * cx + cy * cy
    radial = np.zeros(16)
    for y in range(h):
        for x in range(w):
            if img[y, x]:
                d2 = (x + 0.5 - cx) ** 2 + (y + 0.5 - cy) ** 2
                radial[min(math.floor(d2 / r2max * 16), 15)] += img[y, x] / 255.0
    if radial.sum() > 0:
        radial /= radial.sum()
    out += list(radial)

    mask = img > 127
    ys, xs = np.nonzero(mask)
    nx = (xs + 0.5) / w
    ny = (ys + 0.5) / h
    if len(xs):
        mx, my = nx.mean(), ny.mean()
        vxx = ((nx - mx) ** 2).mean()
        vyy = ((ny - my) ** 2).mean()
        vxy = ((nx - mx) * (ny - my)).mean()
    else:
        mx = my = 0.5
        vxx = vyy = vxy = 0.0
    trans = np.count_nonzero(mask[:, 1:] != mask[:, :-1]) + np.count_nonzero(mask[1:, :] != mask[:-1, :])
    pairs = (w - 1) * h + w * (h - 1)
    _, ncomp = ndimage.label(mask, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    out += [
        mask.sum() / (w * h),
        mx,
        my,
        min(4 * vxx, 1.0),
        min(4 * vyy, 1.0),
        min(max((4 * vxy + 1) / 2, 0.0), 1.0),
        trans / pairs,
        min(ncomp, 255) / 255,
    ]
    return out


if __name__ == "__main__":
    for v in features(checkerboard()):
        print(repr(float(v)))
