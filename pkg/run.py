#!/usr/bin/env python3
"""
Entry script for the forge command line.
Runs the CLI from a checkout without installing the package.
"""
import sys
from pathlib import Path

# Add the src folder to the Python path
sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from fairforge.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
