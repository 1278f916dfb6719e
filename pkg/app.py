"""
Half-Space Boussinesq Simulator - Entry Point

Puts src/ on the Python path and runs the command line interface.
"""

import sys
import os

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from app import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
