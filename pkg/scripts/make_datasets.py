"""Regenerate the CSV files bundled under src/qepitope/data/."""

import os
import sys

from qepitope.datasets import write_all

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "..", "src", "qepitope", "data")
    write_all(target)
    print(f"wrote datasets to {os.path.normpath(target)}")
