#!/usr/bin/env python3
"""Command-line entry point for the solver experiments."""

import sys

from experiments.cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
