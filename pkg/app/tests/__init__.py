"""
Pipeline tests. Run `pytest -m "not slow"` for the quick set.
"""
