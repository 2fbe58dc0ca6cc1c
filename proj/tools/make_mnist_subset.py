"""Convert the 5000-digit MNIST sample shipped inside the mlxtend wheel to IDX.

    pip download mlxtend --no-deps -d /tmp
    python tools/make_mnist_subset.py /tmp/mlxtend-*.whl data/mnist5k

The CSV rows hold 784 pixel values (0-255) followed by the label.
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel", type=pathlib.Path)
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER))
    rows = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels = rows[:, :784].astype(np.uint8)
    labels = rows[:, 784].astype(np.uint8)
    n = len(labels)

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(pixels.tobytes())
    with open(args.out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.tobytes())
    print(f"wrote {n} images to {args.out}; per-class counts {np.bincount(labels).tolist()}")


if __name__ == "__main__":
    main()
