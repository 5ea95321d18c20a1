#!/usr/bin/env python3
"""Pack the COIL-100 images into a 7200 x 128 x 128 x 3 TNSR1 tensor.

Usage: coil_to_tnsr.py <coil-100 image dir> <output.tnsr>

Images are ordered by object, then by angle. Pixel values are scaled to [0, 1].
"""
import pathlib
import re
import struct
import sys

import numpy as np
from PIL import Image

MAGIC = b"TNSR1\0\0\0"


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, dst = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2])
    pattern = re.compile(r"obj(\d+)__(\d+)\.png$")
    files = sorted(
        (f for f in src.iterdir() if pattern.search(f.name)),
        key=lambda f: tuple(int(g) for g in pattern.search(f.name).groups()),
    )
    data = np.stack([np.asarray(Image.open(f).convert("RGB"), dtype=np.float64) / 255.0 for f in files])
    with open(dst, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<Q", data.ndim))
        out.write(struct.pack(f"<{data.ndim}Q", *data.shape))
        out.write(data.astype("<f8").tobytes(order="F"))
    print(f"wrote {dst} with shape {data.shape}")


if __name__ == "__main__":
    main()
