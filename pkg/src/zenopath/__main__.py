"""python -m zenopath delegates to the command line surface."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
