"""Fermionic quantum simulation compiled for cavity-QED hardware."""

from __future__ import annotations

__version__ = "0.1.0"
