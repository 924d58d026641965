#!/usr/bin/env python3
"""Entry point for the division-of-labor toolkit.

Installs signal handlers and hands the command line to ``cli.main``.
A first SIGINT/SIGTERM cancels queued sweep jobs and unwinds; a second one
exits immediately.
"""

import signal
import sys

import cli
from logger_config import setup_logger

logger = setup_logger(__name__, 'main.log')

shutdown_requested = False


def signal_handler(signum, frame):
    """Handle shutdown signals gracefully."""
    global shutdown_requested
    if shutdown_requested:
        logger.warning("Force shutdown requested")
        sys.exit(1)

    shutdown_requested = True
    logger.info(f"Received signal {signum}, stopping...")
    cli.cancel_pending()
    raise KeyboardInterrupt


def main() -> int:
    signal.signal(signal.SIGTERM, signal_handler)
    signal.signal(signal.SIGINT, signal_handler)
    return cli.main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
