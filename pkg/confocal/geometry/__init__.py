"""Numerical geometry of confocal quadrics"""
