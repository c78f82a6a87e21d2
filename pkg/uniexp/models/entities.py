from sqlalchemy import Column, DateTime, Float, Integer, String, func

from uniexp.db.connection import Base


class BenchRecord(Base):
    """One timed kernel run appended by `bench --record`."""

    __tablename__ = "bench_records"

    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime, server_default=func.now())
    command = Column(String, index=True)
    variant = Column(String)
    model = Column(String, index=True)
    rho_t = Column(Float)
    n_sparse = Column(Integer)
    wall_ms = Column(Float)
    wall_min_ms = Column(Float)
    wall_max_ms = Column(Float)
    error = Column(Float, nullable=True)
    summary = Column(Float, nullable=True)
    ratio = Column(Float, nullable=True)
