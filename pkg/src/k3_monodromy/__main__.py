"""Main entry point for ``python -m k3_monodromy``."""

import sys

from k3_monodromy.cli import main

if __name__ == "__main__":
    sys.exit(main())
