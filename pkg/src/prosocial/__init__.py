"""Conversation analytics for threaded discussions.

Computes a panel of prosocial-behavior metrics over conversation trees,
synthesizes them into a single trajectory score, forecasts that score
from a conversation's first comment, and ranks conversation pairs.
"""

from __future__ import annotations

__version__ = "0.1.0"
