"""
Test package for vtruncem
"""
