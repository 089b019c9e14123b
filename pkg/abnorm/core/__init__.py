"""Numerical core: pointwise functions, radial reduction, half-line operators, plane fields"""
