#!/usr/bin/env python3
"""Writes the IDX fixtures used by test_data.

Two 3x2 images with labels 7 and 2, plus malformed variants. Written with
struct only so the reader under test is checked against an independent writer.
"""
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent
IMAGES = [
    [0, 255, 128, 64, 32, 16],
    [1, 2, 3, 250, 251, 252],
]
LABELS = [7, 2]


def images_bytes(images, rows=3, cols=2, magic=0x00000803):
    out = struct.pack(">IIII", magic, len(images), rows, cols)
    for img in images:
        out += bytes(img)
    return out


def labels_bytes(labels, magic=0x00000801):
    return struct.pack(">II", magic, len(labels)) + bytes(labels)


def main():
    (HERE / "two-images.idx3").write_bytes(images_bytes(IMAGES))
    (HERE / "two-labels.idx1").write_bytes(labels_bytes(LABELS))
    (HERE / "three-labels.idx1").write_bytes(labels_bytes(LABELS + [1]))
    (HERE / "header-only.idx3").write_bytes(struct.pack(">IIII", 0x803, 2, 3, 2))
    (HERE / "bad-magic.idx3").write_bytes(images_bytes(IMAGES, magic=0x00000802))


if __name__ == "__main__":
    main()
