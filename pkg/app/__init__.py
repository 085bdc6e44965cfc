"""Semantic prefetch simulator application package."""
