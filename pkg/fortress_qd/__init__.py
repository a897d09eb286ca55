"""
Fortress QD: finite-state-machine artificial life fortresses searched with MAP-Elites.
"""

__version__ = "0.1.0"
