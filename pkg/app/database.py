"""Run-store connection and session management."""

from contextlib import contextmanager
from pathlib import Path
from typing import Generator

from sqlalchemy import Engine, create_engine
from sqlalchemy.orm import Session, sessionmaker

from app.config import settings


def build_engine(url: str, echo: bool = False) -> Engine:
    """SQLite engine for the run store; file databases get their parent directory created."""
    if url.startswith("sqlite:///"):
        Path(url.removeprefix("sqlite:///")).parent.mkdir(parents=True, exist_ok=True)
    return create_engine(url, echo=echo, connect_args={"check_same_thread": False})


def session_factory(engine: Engine) -> sessionmaker[Session]:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


engine = build_engine(settings.database_url, echo=settings.debug)
SessionLocal = session_factory(engine)


@contextmanager
def get_db_session() -> Generator[Session, None, None]:
    """Context manager for a run-store session (for use in CLI commands)."""
    db = SessionLocal()
    try:
        yield db
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()


def create_db_and_tables(bind: Engine | None = None) -> None:
    """Create the experiment-run and report tables."""
    from app.models import Base

    Base.metadata.create_all(bind=bind or engine)
