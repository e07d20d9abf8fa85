#!/usr/bin/env python3
"""Serve the teleop scenario on a local WebSocket endpoint.

    python3 scripts/serve_teleop.py [host:port]

Then open the operator dashboard (frontend/) against the same address.
"""

import sys

from poisson_safety.service import serve
from poisson_safety.sim import load_config

if __name__ == "__main__":
    addr = sys.argv[1] if len(sys.argv) > 1 else "127.0.0.1:8700"
    serve(load_config("scenarios/teleop.json"), addr)
