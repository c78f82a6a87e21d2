from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from uniexp.settings import settings

Base = declarative_base()

DATABASE_URL = settings.DATABASE_URL

engine = create_engine(DATABASE_URL, connect_args={"check_same_thread": False})
SessionLocal = sessionmaker(bind=engine, autoflush=False, autocommit=False)


def init_db(bind=None):
    Base.metadata.create_all(bind=bind or engine)
