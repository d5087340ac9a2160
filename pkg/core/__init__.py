"""
Numerical engine for prescribed-energy saddle points
"""
