import json
import math
from pathlib import Path

import pytest

from odk.density import GeneratorFamily
from odk.number_field import NumberField

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GROUPS = CORPUS / "groups"


def load_corpus():
    """(name, family, expected classification, expected s) for every corpus file."""
    index = json.loads((CORPUS / "expected.json").read_text())
    out = []
    for entry in index:
        data = json.loads((CORPUS / entry["file"]).read_text())
        out.append((entry["file"][:-5], GeneratorFamily.from_json(data), entry["classification"], entry["s"]))
    return out


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def q_sqrt2():
    return NumberField.from_poly(["-2", "0", "1"], math.sqrt(2))


@pytest.fixture(scope="session")
def q_theta():
    """Q(sqrt2 + sqrt3) with sqrt2 and sqrt3 expressed in the power basis."""
    fld = NumberField.from_poly(["1", "0", "-10", "0", "1"], math.sqrt(2) + math.sqrt(3))
    t = fld.theta()
    t3 = t * t * t
    return fld, (t3 - 9 * t) / 2, (11 * t - t3) / 2


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=str):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
