"""
Test suite for EMHD Lab.
"""
