#!/usr/bin/env python3
"""
Setup script for symprotect
"""

from setuptools import setup

setup()
