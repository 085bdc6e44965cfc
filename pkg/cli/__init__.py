"""CLI module for the prefetch simulator."""
