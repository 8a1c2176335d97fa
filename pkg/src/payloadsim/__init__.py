"""Desk-scale nanosatellite imaging payload flight software and mission simulator."""

__version__ = "0.1.0"
