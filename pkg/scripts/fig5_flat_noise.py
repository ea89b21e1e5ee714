"""Flat scene at long range: cross-range images from 3N - 2 illuminations under noise."""

from _common import run

if __name__ == "__main__":
    run("fig5_flat.yaml", __doc__)
