#!/usr/bin/env python3
"""
nonlocal-cu - Main Entry Point
Finite-volume schemes for nonlocal conservation and balance laws.
"""

import os
import sys

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from nonlocal_cu import cli_main  # noqa: E402

if __name__ == "__main__":
    sys.exit(cli_main())
