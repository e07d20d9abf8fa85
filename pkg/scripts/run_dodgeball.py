#!/usr/bin/env python3
"""Run the dodgeball scenario and print its summary.

Equivalent to:
    poisson-safety run --config scenarios/dodgeball.json --log dodgeball.csv
"""

import sys

from poisson_safety.cli import main

if __name__ == "__main__":
    log = sys.argv[1] if len(sys.argv) > 1 else "dodgeball.csv"
    sys.exit(main(["run", "--config", "scenarios/dodgeball.json",
                   "--log", log]))
