#!/usr/bin/env python3

import sys

from pharmonic_hub.cli.interface import run_cli


def main() -> None:
    """Entry point for PHarmonic Hub CLI."""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
