#!/usr/bin/env python3
"""
Run the scenario command line
"""

import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from pmcm.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
