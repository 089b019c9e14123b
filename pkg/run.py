#!/usr/bin/env python3
"""
Run the abnorm checks
Usage: python run.py --command norms --p 1.5 --p 3
"""

import sys
import os

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from abnorm.main import main

if __name__ == '__main__':
    sys.exit(main())
