"""
Run configuration services.
"""
