from __future__ import annotations

import pathlib
import subprocess
import sys

import pytest

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus() -> pathlib.Path:
    return CORPUS


def run_cli(*args: str, cwd=None, env=None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "sessioncheck", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=env,
    )


def check_source(text: str, **kwargs):
    from sessioncheck import check_file, parse

    return check_file(parse(text), **kwargs)
