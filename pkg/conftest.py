# conftest.py
# Shared fixtures for the test suites

from pathlib import Path

import numpy as np
import pytest

from decompose import CoefficientSet
from form_io import parse_form_matrix_file
from testing_utils import WORKED_S

HERE = Path(__file__).parent


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def worked_set():
    return CoefficientSet.from_matrices(WORKED_S)


@pytest.fixture
def worked_file():
    return parse_form_matrix_file((HERE / "worked_example.form").read_text(encoding="utf-8"))


@pytest.fixture
def worked_form(worked_file):
    return worked_file.form_matrix


@pytest.fixture
def fixture_path():
    return lambda name: HERE / name
