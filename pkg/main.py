#!/usr/bin/env python3
"""Launcher for the robust learning simulator: `python main.py scenario disjoint-conj`."""
from src.main import app

if __name__ == "__main__":
    app(prog_name="robustlearn")
