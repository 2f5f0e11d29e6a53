#!/usr/bin/env python3
import sys

from cardy_lab.cli import run_cli


def main() -> None:
    """Main entry of the percolation laboratory"""
    try:
        code = run_cli(sys.argv[1:])
    except KeyboardInterrupt:
        print("Interrupted; continue the run with `resume <manifest>`.")
        code = 2
    sys.exit(code)


if __name__ == "__main__":
    main()
