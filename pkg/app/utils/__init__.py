"""
Seeded generator and special functions shared by the numerical services.
"""
