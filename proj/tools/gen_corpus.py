#!/usr/bin/env python3
"""Generate the small grayscale corpus under data/.

Six 160x160 images with strong structure at the 8x8 patch scale: oriented
gratings, step edges, bars, blobs, and 1/f texture.  Deterministic, so the
shipped images can be regenerated bit-for-bit.

Usage: python3 tools/gen_corpus.py [out_dir]
"""

import os
import sys

import numpy as np

SIZE = 160


def save_pgm(path, img):
    """img in [0,1] -> binary 8-bit PGM."""
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (q.shape[1], q.shape[0]))
        f.write(q.tobytes())


def coords():
    y, x = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    return x, y


def gratings(rng):
    """Patchwork of oriented sinusoidal gratings, block size 40."""
    x, y = coords()
    img = np.zeros((SIZE, SIZE))
    block = 40
    for by in range(0, SIZE, block):
        for bx in range(0, SIZE, block):
            theta = rng.uniform(0, np.pi)
            period = rng.uniform(4.0, 10.0)
            phase = rng.uniform(0, 2 * np.pi)
            sl = np.s_[by:by + block, bx:bx + block]
            t = (x[sl] * np.cos(theta) + y[sl] * np.sin(theta))
            img[sl] = 0.5 + 0.5 * np.sin(2 * np.pi * t / period + phase)
    return img


def edges(rng):
    """Random straight step edges accumulated over a mid-gray canvas."""
    x, y = coords()
    img = np.full((SIZE, SIZE), 0.5)
    for _ in range(30):
        theta = rng.uniform(0, np.pi)
        offset = rng.uniform(0, SIZE)
        side = np.sign(x * np.cos(theta) + y * np.sin(theta) - offset)
        img += side * rng.uniform(0.08, 0.2) * rng.choice([-1.0, 1.0])
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo)


def bars(rng):
    """Short oriented bars (line segments a few pixels wide) on black."""
    x, y = coords()
    img = np.zeros((SIZE, SIZE))
    for _ in range(120):
        cx, cy = rng.uniform(0, SIZE, size=2)
        theta = rng.uniform(0, np.pi)
        length = rng.uniform(8, 24)
        width = rng.uniform(1.0, 2.5)
        dx, dy = x - cx, y - cy
        along = dx * np.cos(theta) + dy * np.sin(theta)
        across = -dx * np.sin(theta) + dy * np.cos(theta)
        mask = (np.abs(along) < length / 2) & (np.abs(across) < width)
        img[mask] = rng.uniform(0.6, 1.0)
    return img


def blobs(rng):
    """Gaussian blobs of mixed polarity on mid-gray."""
    x, y = coords()
    img = np.full((SIZE, SIZE), 0.5)
    for _ in range(80):
        cx, cy = rng.uniform(0, SIZE, size=2)
        sigma = rng.uniform(1.5, 5.0)
        amp = rng.uniform(0.25, 0.5) * rng.choice([-1.0, 1.0])
        img += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma**2))
    return np.clip(img, 0, 1)


def pink_noise(rng):
    """1/f spectrum noise, contrast-stretched."""
    spec = rng.standard_normal((SIZE, SIZE)) + 1j * rng.standard_normal((SIZE, SIZE))
    fy = np.fft.fftfreq(SIZE)[:, None]
    fx = np.fft.fftfreq(SIZE)[None, :]
    f = np.sqrt(fx**2 + fy**2)
    f[0, 0] = 1.0
    img = np.real(np.fft.ifft2(spec / f))
    lo, hi = np.percentile(img, [2, 98])
    return np.clip((img - lo) / (hi - lo), 0, 1)


def checkers_and_ramps(rng):
    """Coarse checkerboards over smooth ramps: corners plus gradients."""
    x, y = coords()
    img = 0.5 + 0.25 * np.sin(2 * np.pi * x / SIZE) * np.cos(2 * np.pi * y / SIZE)
    cell = int(rng.integers(6, 12))
    checker = ((x // cell + y // cell) % 2) * rng.uniform(0.4, 0.6)
    img = np.clip(img * 0.6 + checker, 0, 1)
    return img


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "data"
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(20240817)
    makers = [
        ("gratings", gratings),
        ("edges", edges),
        ("bars", bars),
        ("blobs", blobs),
        ("pink", pink_noise),
        ("checkers", checkers_and_ramps),
    ]
    for name, fn in makers:
        path = os.path.join(out_dir, f"{name}.pgm")
        save_pgm(path, fn(rng))
        print("wrote", path)


if __name__ == "__main__":
    main()
