"""Allow ``python -m akkt`` as an alias for the ``akkt`` console script."""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
