"""Six illuminations on Born data: exact far away, degraded as the window moves closer."""

from _common import run

if __name__ == "__main__":
    run("fig6_six.yaml", __doc__)
