"""Entry point for ``python -m dimdecomp``."""
import sys

from dimdecomp.cli import main

if __name__ == "__main__":
    sys.exit(main())
