"""CLI entry point for simulator commands."""

from .simulator import app

if __name__ == "__main__":
    app()
