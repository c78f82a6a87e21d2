import sys
from typing import Mapping, Optional, Sequence

from uniexp.models.schemas import RunReport
from uniexp.services.sps import SpsResult
from uniexp.settings import settings
from uniexp.utils.io import artifact, file_digest


def build_report(
    result: SpsResult,
    eps: float,
    wall_ms: float,
    inputs: Mapping[str, str],
    outputs: Sequence[str],
    command: Optional[Sequence[str]] = None,
    n_sparse: Optional[int] = None,
) -> RunReport:
    """
    Describe one CLI kernel run.

    Args:
        result (SpsResult): A result of the run (the last one for multi-time runs).
        eps (float): Truncation tolerance used.
        wall_ms (float): Elapsed wall time.
        inputs (Mapping[str, str]): Input role -> path; each file is hashed.
        outputs (Sequence[str]): Paths written.
        command (Optional[Sequence[str]]): Echoed argv; defaults to sys.argv.
        n_sparse (Optional[int]): Overrides result.n_sparse.

    Returns:
        RunReport: The report.
    """
    return RunReport(
        project=settings.PROJECT_NAME,
        command=list(command if command is not None else sys.argv),
        input_digests={role: file_digest(path) for role, path in inputs.items()},
        eps=eps,
        variant=result.variant,
        m_lo=result.m_lo_used,
        m_hi=result.m_used,
        n_sparse=result.n_sparse if n_sparse is None else n_sparse,
        wall_ms=max(0.0, wall_ms),
        outputs=[str(p) for p in outputs],
    )


def append_report(report: RunReport, path) -> None:
    with artifact(path, "a") as handle:
        handle.write(report.model_dump_json() + "\n")
