"""Centralized and diffusion (adapt-then-combine) weighted pressure matching
controllers for personal sound zones."""

__version__ = "0.1.0"
