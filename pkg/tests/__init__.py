"""
Test package for polyjoin.
"""
