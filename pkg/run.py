"""Run a lab command

Usage:
    python run.py --config tests/files/half_line.json --out output/half_line
"""

from kac_lab.cli import main

if __name__ == "__main__":
    main()
