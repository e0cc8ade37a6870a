"""Regenerate the grayscale test fixtures under crates/core/tests/data.

The source images ship with scikit-image. Each is converted to 8-bit luma.
The 256x256 fixtures are downsampled 2x by 2x2 box averaging; chelsea128 is
a native-resolution 128x128 crop of the cat's face.
"""
import os

import numpy as np
from PIL import Image
from skimage import data

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data")


def luma(rgb):
    rgb = rgb.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def box2(img):
    h, w = img.shape
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def save(name, img):
    arr = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(os.path.join(OUT, name))


def main():
    os.makedirs(OUT, exist_ok=True)
    save("camera256.png", box2(data.camera().astype(np.float64)))
    save("astronaut256.png", box2(luma(data.astronaut())))
    save("chelsea128.png", luma(data.chelsea())[100:228, 150:278])


if __name__ == "__main__":
    main()
