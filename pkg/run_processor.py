#!/usr/bin/env python3
"""Worker entry point that executes queued experiment runs."""

import argparse
import logging
import sys
from pathlib import Path

from api.config import EXPERIMENT_TIMEOUT, STORAGE_BASE_DIR
from experiments.processor import RunProcessor


def main() -> int:
    """Process queued runs once or keep polling for new ones.

    Returns:
        Exit code (0 for success)
    """
    parser = argparse.ArgumentParser(description="Execute experiment runs queued through the API")
    parser.add_argument(
        "--mode",
        choices=["once", "daemon"],
        default="daemon",
        help="'once' drains the queue and exits, 'daemon' keeps polling",
    )
    parser.add_argument("--poll-interval", type=int, default=5, help="Seconds between polls (default: 5)")
    parser.add_argument(
        "--storage-dir",
        type=Path,
        default=STORAGE_BASE_DIR,
        help=f"Run storage directory (default: {STORAGE_BASE_DIR})",
    )
    parser.add_argument(
        "--timeout",
        type=int,
        default=EXPERIMENT_TIMEOUT,
        help=f"Seconds allowed per run (default: {EXPERIMENT_TIMEOUT})",
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    args = parser.parse_args()
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    processor = RunProcessor(storage_dir=args.storage_dir, timeout=args.timeout)

    if args.mode == "once":
        processed = processor.run_once()
        print(f"Processed {processed} run(s) from {args.storage_dir}")
        return 0

    try:
        processor.run_forever(poll_interval=args.poll_interval)
    except KeyboardInterrupt:
        print("\nShutting down processor...")
    return 0


if __name__ == "__main__":
    sys.exit(main())
