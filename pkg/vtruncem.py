#!/usr/bin/env python3
"""
vtruncem - main entry point when running from a source checkout
"""

import sys
from pathlib import Path

src_dir = Path(__file__).parent / "src"
sys.path.insert(0, str(src_dir))


def main():
    """Main entry point"""
    try:
        from vtruncem.cli import app
    except ImportError as e:
        print("Error: Missing dependencies. Please install required packages:")
        print("pip install numpy scipy sympy typer rich pydantic pydantic-settings")
        print(f"Import error: {e}")
        sys.exit(1)
    try:
        app()
    except KeyboardInterrupt:
        print("\n[!] Interrupted by user")
        sys.exit(130)


if __name__ == "__main__":
    main()
