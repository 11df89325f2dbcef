"""
Confocal - numerical toolkit for confocal quadrics
"""

__version__ = "1.0.0"
