"""
EMHD Lab

Pseudo-spectral simulator and Littlewood-Paley diagnostics for 2.5D
electron MHD on the periodic box.

Usage:
    python main.py simulate --config run.cfg --out out
    python main.py sync --seed 7
"""
import sys

from emhd_lab.main import main


if __name__ == "__main__":
    sys.exit(main())
