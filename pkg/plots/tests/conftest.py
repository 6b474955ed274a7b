"""Shared fixture: produce real CSV exports through the netcredit CLI."""

import subprocess
import sys
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def paper_n50_outputs(tmp_path_factory) -> Path:
    """Run the 50-client reference preset once and return its output dir."""
    out_dir = tmp_path_factory.mktemp("paper-n50")
    subprocess.run(
        [
            sys.executable, "-m", "netcredit.cli", "montecarlo",
            "--preset", "paper-n50", "--seed", "12345", "--out", str(out_dir),
        ],
        check=True,
        capture_output=True,
    )
    return out_dir
