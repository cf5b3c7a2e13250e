#!/usr/bin/env python3
"""
Simple runner script for the aic-tomography command line.
This script ensures the correct Python path is set and runs the CLI.
"""

import sys
from pathlib import Path

# Add the current directory to Python path
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from aic_tomography.cli import main

if __name__ == "__main__":
    sys.exit(main())
