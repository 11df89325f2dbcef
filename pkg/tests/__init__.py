"""Tests for the confocal toolkit"""
