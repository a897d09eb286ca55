"""
Configuration and result models.
"""
