"""
Test package for exprtune.
"""
