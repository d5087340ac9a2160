#!/usr/bin/env python3
"""
SADDLE - prescribed-energy saddle points for a semilinear Dirichlet problem
Solves -u'' - lambda u = mu |u|^(q-2) u + g(x, u) on (0, 1) at a prescribed energy level.
"""

import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.append(str(PROJECT_ROOT))

from cli.app import run


def main():
    """Run one subcommand and exit with its status"""
    sys.exit(run())


if __name__ == "__main__":
    print("""
    ╔═══════════════════════════════════════════════╗
    ║ SADDLE v1.0.0                                 ║
    ║ Prescribed-energy saddle point solver         ║
    ╚═══════════════════════════════════════════════╝
    """, file=sys.stderr)
    main()
