"""
Helpers for the end to end tests: call_heer() runs the heer command as
a script with runpy.run_module(), and TABLE_CONFIG is the training setup
the directional comparisons on synthetic graphs use.
"""

import runpy
import sys

from python3.packages.heer.config import TrainConfig

HEER_MODULE = "python3.packages.heer.cli"
SEEDS = (0, 1, 2)
KAPPA = 0.4

TABLE_CONFIG = TrainConfig(d_v=64, k=5, epochs=5, pretrain_epochs=5)


def call_heer(*args: str) -> None:
    """
    Run the heer command with [args] as if started from the shell.

    Returns normally on success. A failing command raises SystemExit
    with its exit status.
    """
    sys.argv = ["heer", *args]
    runpy.run_module(HEER_MODULE, run_name="__main__", alter_sys=True)
