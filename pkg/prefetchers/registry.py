"""Prefetcher auto-discovery and registration."""

import importlib
import inspect
import pkgutil
from pathlib import Path

from loguru import logger

from app.exceptions import ConfigurationError
from prefetchers.base import BasePrefetcher, LbaPrefetcher


class PrefetcherRegistry:
    """
    Singleton registry that discovers prefetcher classes in the prefetchers package.

    Classes are stored rather than instances: every replay gets a fresh prefetcher.
    """

    _instance: "PrefetcherRegistry | None" = None
    _prefetchers: dict[str, type[BasePrefetcher]]

    def __new__(cls) -> "PrefetcherRegistry":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._prefetchers = {}
        return cls._instance

    def discover_prefetchers(self, package_path: str = "prefetchers") -> dict[str, type[BasePrefetcher]]:
        """
        Scan the package and register all concrete BasePrefetcher subclasses.

        Args:
            package_path: The package path to scan.

        Returns:
            Dictionary mapping system names to prefetcher classes.
        """
        self._prefetchers = {}
        package = importlib.import_module(package_path)
        package_dir = Path(package.__file__).parent

        for module_info in pkgutil.iter_modules([str(package_dir)]):
            if module_info.name.startswith("_") or module_info.name in ("base", "registry"):
                continue
            module = importlib.import_module(f"{package_path}.{module_info.name}")
            for _, obj in inspect.getmembers(module, inspect.isclass):
                if (
                    issubclass(obj, BasePrefetcher)
                    and obj not in (BasePrefetcher, LbaPrefetcher)
                    and not inspect.isabstract(obj)
                ):
                    name = obj().name
                    self._prefetchers[name] = obj
                    logger.debug(f"Discovered prefetcher: {name}")

        return self._prefetchers

    def names(self) -> list[str]:
        if not self._prefetchers:
            self.discover_prefetchers()
        return sorted(self._prefetchers)

    def create(self, name: str) -> BasePrefetcher:
        """
        New prefetcher instance for a system name.

        Raises:
            ConfigurationError: Unknown system name
        """
        if not self._prefetchers:
            self.discover_prefetchers()
        if name not in self._prefetchers:
            raise ConfigurationError(f"Unknown system: {name}. Valid: {self.names()}")
        return self._prefetchers[name]()

    def clear(self) -> None:
        """Clear all registered prefetchers. Useful for testing."""
        self._prefetchers = {}


# Global singleton instance
prefetcher_registry = PrefetcherRegistry()
