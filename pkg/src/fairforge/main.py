# src/fairforge/main.py
import logging
import os
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from .cli import run

logger = logging.getLogger(__name__)


def load_environment() -> Optional[str]:
    """
    Load the `.env` file of the project root, if there is one.

    Values in the file override the inherited environment, so FORGE_SEED,
    FORGE_THREADS and FORGE_LOG_LEVEL can be pinned per checkout.
    """
    project_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    dotenv_path = os.path.join(project_root, ".env")
    if not os.path.exists(dotenv_path):
        return None
    if not load_dotenv(dotenv_path=dotenv_path, override=True):
        logger.warning("Found %s, but nothing could be loaded from it", dotenv_path)
    return dotenv_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the `forge` command."""
    load_environment()
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
