"""
Configuration and output utilities
"""
