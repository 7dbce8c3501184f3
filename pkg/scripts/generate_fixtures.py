#!/usr/bin/env python3
"""Regenerate the frozen oracle fixtures consumed by the test suite."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from logcave.oracles import write_fixtures

if __name__ == "__main__":
    path = write_fixtures(sys.argv[1] if len(sys.argv) > 1 else None)
    print(f"fixtures written to {path}")
