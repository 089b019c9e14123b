"""
abnorm - numerical verification of sharp L^p constants
for the Ahlfors-Beurling operator on radial functions
"""

__version__ = '0.1.0'
