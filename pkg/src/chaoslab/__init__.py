"""This module contains the entry point."""

import sys

from .cli import dispatch
from .runio import package_version

__version__ = package_version()


def main() -> None:
    """The entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":  # pragma: no cover
    main()
