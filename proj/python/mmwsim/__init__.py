# SPDX-License-Identifier: Apache-2.0
"""Adaptive hierarchical beam training and hybrid precoding for mmWave MIMO."""

try:
    from ._mmwsim import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _mmwsim import *  # noqa: F401,F403  (in-tree build layout)

__version__ = "0.1.0"
