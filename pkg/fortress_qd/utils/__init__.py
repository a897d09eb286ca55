"""
Utility modules for Fortress QD.
"""
