"""phdae CLI 入口"""
import sys

from phdae.cli.app import main

if __name__ == "__main__":
    sys.exit(main())
