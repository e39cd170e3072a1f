from __future__ import annotations

import csv
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the netgen helper module

from shia.logic import Level, reference_netlist

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def reference_net():
    return reference_netlist()


@pytest.fixture(scope="session")
def frozen_reference_rows():
    """The canonical 32-row table committed to the repo."""
    rows = []
    with open(DATA_DIR / "reference_truth_table.csv", newline="") as fh:
        for record in csv.DictReader(fh):
            inputs = tuple(Level(int(record[f"in{i}"])) for i in range(1, 6))
            outputs = tuple(Level(int(record[f"out{i}"])) for i in range(1, 6))
            rows.append((inputs, outputs))
    return rows
