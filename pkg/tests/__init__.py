"""Test suite for symprotect."""
