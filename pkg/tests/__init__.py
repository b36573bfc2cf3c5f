"""
Lattice relay test package
"""
