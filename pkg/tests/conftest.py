from pathlib import Path

import pytest
from click.testing import CliRunner
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from oracles import A, B
from uniexp.db import connection
from uniexp.db.connection import Base
from uniexp.models import entities  # noqa: F401  registers the ledger table
from uniexp.services.generator import RateMatrix
from uniexp.settings import settings

TEST_DATABASE_URL = "sqlite://"
FIXTURES = Path(__file__).parent / "fixtures"


# --- Small chains ---
@pytest.fixture
def two_state():
    return RateMatrix.from_dense([[-A, A], [B, -B]])


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# --- Kernel guards ---
@pytest.fixture
def tight_guards(monkeypatch):
    """Shrink the overflow and underflow guards so folding happens early."""
    monkeypatch.setattr(settings, "BIG", 1e8)
    monkeypatch.setattr(settings, "SMALL", 1e-8)


@pytest.fixture
def check_positivity(monkeypatch):
    monkeypatch.setattr(settings, "CHECK_POSITIVITY", True)


# --- Bench ledger on an in-memory database ---
@pytest.fixture(scope="session")
def engine():
    return create_engine(
        TEST_DATABASE_URL,
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )


@pytest.fixture(scope="session")
def SessionLocal(engine):
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


@pytest.fixture(scope="function")
def db_session(SessionLocal, engine):
    conn = engine.connect()
    transaction = conn.begin()

    session = SessionLocal(bind=conn)
    Base.metadata.create_all(bind=conn)

    yield session

    session.close()
    transaction.rollback()
    conn.close()


@pytest.fixture(scope="function")
def ledger(monkeypatch):
    """Point the CLI's ledger at a fresh in-memory database."""
    test_engine = create_engine(
        TEST_DATABASE_URL,
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )
    monkeypatch.setattr(connection, "engine", test_engine)
    monkeypatch.setattr(
        connection, "SessionLocal", sessionmaker(bind=test_engine, autoflush=False, autocommit=False)
    )
    yield test_engine
    test_engine.dispose()


# --- CLI ---
@pytest.fixture
def runner():
    return CliRunner()
