"""
Test suite for Fortress QD.
"""
