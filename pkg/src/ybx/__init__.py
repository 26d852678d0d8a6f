"""Numerical laboratory for elliptic R-matrices and their identities."""
from __future__ import annotations

__version__ = "0.1.0"
