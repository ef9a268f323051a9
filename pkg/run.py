#!/usr/bin/env python3
"""
Startup script for the ContourOpt command line.

Usage: python run.py <alpha|reduce|opf|verify> [options]
"""
import sys

from app.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
