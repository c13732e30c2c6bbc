"""Seeded simulator of an anti-jamming spectrum auction in a cognitive radio network.

Secondary users (SUs) compete for temporarily vacant primary-user channels
while a jammer tries to block one of them.  The package provides:

- ``envsim``: channel occupancy / SNR / traffic dynamics and per-stage utility
- ``matgame``: exact zero-sum matrix game solving and action-set reduction
- ``auction``: allocation rules and pivot payments
- ``pcgame``: the centralized (coordinator vs jammer) stage game
- ``pdgame``: the decentralized learning game with two-level preference auctions
- ``harness``: experiment configuration, seeded runs, CSV emission
"""

from . import auction, envsim, harness, matgame, pcgame, pdgame

__all__ = ["auction", "envsim", "harness", "matgame", "pcgame", "pdgame"]
__version__ = "0.1.0"
