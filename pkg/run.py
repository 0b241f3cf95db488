"""
Main Entry Point

Run this file to use the structure tensor toolkit from the command line.

Usage:
    python run.py repro-example                       # counterexample table
    python run.py synth --dims 64x64 --wave 30:0.8 -o wave.stf
    python run.py tensor wave.stf --construction gradient -o tensor.stf
    python run.py analyze tensor.stf --truth-angle 30 --margin 17 --check
"""

import sys

from src.cli.app import main


if __name__ == '__main__':
    sys.exit(main())
