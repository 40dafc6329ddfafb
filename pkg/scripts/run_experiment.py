#!/usr/bin/env python3
"""Thin wrapper over the CLI for running shipped experiment configs.

Examples:
    python scripts/run_experiment.py spectrum configs/desk_bundle.json
    python scripts/run_experiment.py hvz configs/ladder.json
    python scripts/run_experiment.py convergence configs/ladder.json
    python scripts/run_experiment.py probe-scattering configs/probe.json
"""

import sys

from chargedphi2.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
