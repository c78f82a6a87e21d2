from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Library and CLI settings loaded from environment variables or .env file.

    Attributes:
        PROJECT_NAME (str): Name echoed in run reports.
        THREADS (int): Worker-pool cap for the bench command (UNIEXP_THREADS).
        DEFAULT_EPS (float): Default truncation tolerance for the series kernels.
        BIG (float): Overflow guard for the running scale of the series terms.
        SMALL (float): Underflow guard for the multi-time weights.
        ROW_SUM_TOL (float): Relative row-sum tolerance for generator validation.
        CHECK_POSITIVITY (bool): Assert non-negativity of every accumulated term.
        REPEATS (int): Default number of timed repeats in the bench harness.
        DATABASE_URL (str): SQLAlchemy URL of the bench ledger.
        LOG_LEVEL (str): Root log level applied by the CLI.

    Notes:
        BIG, SMALL and CHECK_POSITIVITY are read at call time, so tests may
        monkeypatch them on the module-level `settings` object.
    """

    PROJECT_NAME: str = "uniexp"
    THREADS: int = 1
    DEFAULT_EPS: float = 1e-16
    BIG: float = 1e100
    SMALL: float = 1e-100
    ROW_SUM_TOL: float = 1e-12
    CHECK_POSITIVITY: bool = False
    REPEATS: int = 3
    DATABASE_URL: str = "sqlite:///./uniexp_bench.db"
    LOG_LEVEL: str = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="UNIEXP_",
        env_file=".env",
        env_file_encoding="utf-8"
    )

settings = Settings()
