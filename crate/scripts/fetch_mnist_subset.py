#!/usr/bin/env python3
"""Writes a 10,000-digit MNIST subset as IDX files.

The digits come from the `mnist` npm package (1.1.0), which ships them as
JSON arrays of 784 pixels in [0, 1], grouped by class. They are interleaved
with a fixed shuffle so that any prefix is class-balanced in expectation.

Usage: scripts/fetch_mnist_subset.py [OUT_DIR]   (default: data/mnist-10k)
"""

import json
import random
import shutil
import struct
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

PACKAGE = "mnist@1.1.0"
PIXELS = 28 * 28


def fetch(workdir: Path) -> Path:
    out = subprocess.run(
        ["npm", "pack", PACKAGE, "--silent"],
        cwd=workdir,
        check=True,
        capture_output=True,
        text=True,
    )
    tarball = workdir / out.stdout.strip().splitlines()[-1]
    with tarfile.open(tarball) as tar:
        tar.extractall(workdir, filter="data")
    return workdir / "package" / "src" / "digits"


def load(digits: Path):
    examples = []
    for label in range(10):
        data = json.loads((digits / f"{label}.json").read_text())["data"]
        if len(data) % PIXELS:
            raise SystemExit(f"{label}.json: {len(data)} values is not a multiple of {PIXELS}")
        for i in range(0, len(data), PIXELS):
            pixels = bytes(round(min(max(v, 0.0), 1.0) * 255) for v in data[i : i + PIXELS])
            examples.append((pixels, label))
    random.Random(0).shuffle(examples)
    return examples


def write(out: Path, examples) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(examples), 28, 28))
        for pixels, _ in examples:
            f.write(pixels)
    with open(out / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(examples)))
        f.write(bytes(label for _, label in examples))


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/mnist-10k")
    if shutil.which("npm") is None:
        raise SystemExit("npm is required to fetch the digits")
    with tempfile.TemporaryDirectory() as tmp:
        examples = load(fetch(Path(tmp)))
    write(out, examples)
    print(f"wrote {len(examples)} examples to {out}")


if __name__ == "__main__":
    main()
