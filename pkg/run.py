#!/usr/bin/env python3
"""
Latent-space watermarking lab - runner
Convenience script: runs the CLI without installing the package
"""

import os
import sys

# Make the package importable from a checkout
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from latentmark.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
