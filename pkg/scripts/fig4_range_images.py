"""Scatterers at several ranges imaged from the intensity-only time reversal matrix.

Nine cells: L in {2000, 5000, 10000} wavelengths, noise in {0, 0.1, 0.2}.
"""

from _common import run

if __name__ == "__main__":
    run("fig4_range.yaml", __doc__)
