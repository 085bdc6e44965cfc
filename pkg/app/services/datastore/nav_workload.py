"""Navigational (pan/zoom) sessions over a tiled table."""

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError
from app.schemas import NavigationMode, WorkloadSpec
from .database import Database, TileGrid
from .traces import QueryRecord, QueryTrace

_NEIGHBOR_STEPS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


def chebyshev(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


class NavigationSession:
    """Viewport state machine: center tile plus zoom radius."""

    def __init__(self, grid: TileGrid, spec: WorkloadSpec, rng: np.random.Generator):
        self.grid = grid
        self.spec = spec
        self.rng = rng
        self.center = (grid.rows // 2, grid.cols // 2)
        self.zoom = min(spec.initial_zoom, spec.max_zoom)

    def _maybe_zoom(self) -> None:
        if self.rng.random() >= self.spec.zoom_probability:
            return
        options = [z for z in (self.zoom - 1, self.zoom + 1) if 0 <= z <= self.spec.max_zoom]
        if options:
            self.zoom = options[int(self.rng.integers(0, len(options)))]

    def pan(self) -> None:
        """Move to one of the in-grid neighbouring tiles."""
        moves = [
            (self.center[0] + dr, self.center[1] + dc)
            for dr, dc in _NEIGHBOR_STEPS
            if 0 <= self.center[0] + dr < self.grid.rows and 0 <= self.center[1] + dc < self.grid.cols
        ]
        self.center = moves[int(self.rng.integers(0, len(moves)))]
        self._maybe_zoom()

    def jump(self) -> None:
        """Teleport to a uniformly chosen tile more than one step away."""
        far = [
            (r, c)
            for r in range(self.grid.rows)
            for c in range(self.grid.cols)
            if chebyshev((r, c), self.center) > 1
        ]
        self.center = far[int(self.rng.integers(0, len(far)))]
        self._maybe_zoom()

    def probe(self) -> None:
        """Uniformly random viewport."""
        self.center = (
            int(self.rng.integers(0, self.grid.rows)),
            int(self.rng.integers(0, self.grid.cols)),
        )
        self.zoom = int(self.rng.integers(0, self.spec.max_zoom + 1))


def _checked_grid(db: Database, mode: NavigationMode, n_steps: int) -> TileGrid:
    if db.grid is None:
        raise ConfigurationError("Navigational workloads need a database with a tile grid")
    if n_steps < 1:
        raise ConfigurationError("n_steps must be at least 1")
    grid = db.grid
    if mode != NavigationMode.RANDOM and grid.n_tiles < 2:
        raise ConfigurationError("A single-tile grid cannot be navigated")
    if mode == NavigationMode.JUMPING and max(grid.rows, grid.cols) < 4:
        raise ConfigurationError("Jumping needs a grid at least 4 tiles wide or tall")
    return grid


def navigation_path(
    db: Database,
    mode: NavigationMode | str,
    n_steps: int,
    seed: int,
    spec: WorkloadSpec | None = None,
) -> list[tuple[tuple[int, int], int]]:
    """Viewport (center, zoom) per step of a session."""
    try:
        mode = NavigationMode(mode)
    except ValueError as e:
        raise ConfigurationError(f"Unknown navigation mode: {mode}") from e
    grid = _checked_grid(db, mode, n_steps)
    spec = spec or WorkloadSpec()
    rng = np.random.default_rng(seed)
    session = NavigationSession(grid, spec, rng)

    if mode == NavigationMode.RANDOM:
        session.probe()
    run_left = int(rng.integers(spec.jump_run_min, spec.jump_run_max + 1))
    # the first run is cut short so a session of >= 2 steps always contains a jump
    run_left = min(run_left, max(n_steps - 2, 0))

    path = [(session.center, session.zoom)]
    for _ in range(1, n_steps):
        if mode == NavigationMode.SMOOTH:
            session.pan()
        elif mode == NavigationMode.RANDOM:
            session.probe()
        elif run_left > 0:
            session.pan()
            run_left -= 1
        else:
            session.jump()
            run_left = int(rng.integers(spec.jump_run_min, spec.jump_run_max + 1))
        path.append((session.center, session.zoom))
    return path


def generate_nav_workload(
    db: Database,
    mode: NavigationMode | str,
    n_steps: int,
    seed: int,
    spec: WorkloadSpec | None = None,
) -> QueryTrace:
    """
    Generate a navigational session over the database's tile grid.

    Args:
        db: Database with a tile grid
        mode: smooth, jumping or random
        n_steps: Number of viewport steps (one query each)
        seed: RNG seed
        spec: Generator knobs (defaults when omitted)

    Returns:
        QueryTrace with one record per step, labelled nav-<mode>
    """
    path = navigation_path(db, mode, n_steps, seed, spec)
    grid = db.grid
    label = f"nav-{NavigationMode(mode).value}"
    records = [
        QueryRecord(step, step, grid.viewport_blocks(center[0], center[1], zoom), label)
        for step, (center, zoom) in enumerate(path)
    ]
    trace = QueryTrace(records, db.fingerprint())
    logger.info(f"Generated {label} trace: {len(trace)} steps on a {grid.rows}x{grid.cols} grid")
    return trace
