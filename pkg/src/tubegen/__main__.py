"""Allows running the command-line interface as `python -m tubegen`."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
