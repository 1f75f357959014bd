import copy
import os

import numpy as np
import pytest
import yaml

from utils.experiment_functions import preset_text
from utils.linalg_functions import HilbertSpace, Ket
from utils.stern_gerlach_functions import build_sg_experiment, default_sg_spec

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def repeat(times: int):
    """Run a randomized test `times` times with seeds 0..times-1."""
    return pytest.mark.parametrize("seed", range(times))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def qubit():
    return HilbertSpace.of(("q", 2))


@pytest.fixture
def two_qubits():
    return HilbertSpace.of(("a", 2), ("b", 2))


@pytest.fixture
def plus_ket(qubit):
    return Ket(qubit, np.array([1.0, 1.0]) / np.sqrt(2))


@pytest.fixture(scope="session")
def sg_spec():
    return default_sg_spec()


@pytest.fixture(scope="session")
def sg_built(sg_spec):
    return build_sg_experiment(sg_spec)


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def read_data(name: str) -> str:
    with open(data_path(name), "r", encoding="utf-8") as f:
        return f.read()


FUZZ_VALUES = ["", "text", "1e999", "(nan+1j)", [], [[]], [1, "x"], {}, {"kind": None}, None, True, -1, 0,
               10 ** 400, 1e400, float("nan")]
FUZZ_FRAGMENTS = ["\x00", "\x07", "\ud800", "\ufeff", "\t", "{", "]", ": :", "*anchor", "!!python/object:os.system",
                  "9" * 5000, "-" * 3]


def _nodes(node, trail=()):
    yield trail, node
    if isinstance(node, dict):
        for key, value in node.items():
            yield from _nodes(value, trail + (key,))
    elif isinstance(node, list):
        for i, value in enumerate(node):
            yield from _nodes(value, trail + (i,))


def _mutate_structure(text: str, rng) -> str:
    doc = yaml.safe_load(text)
    for _ in range(int(rng.integers(1, 4))):
        trails = [t for t, _ in _nodes(doc) if t]
        if not trails:
            break
        trail = trails[int(rng.integers(len(trails)))]
        parent = doc
        for step in trail[:-1]:
            parent = parent[step]
        if rng.random() < 0.3:
            del parent[trail[-1]]
        else:
            parent[trail[-1]] = copy.deepcopy(FUZZ_VALUES[int(rng.integers(len(FUZZ_VALUES)))])
    return yaml.safe_dump(doc, sort_keys=False)


def _mutate_text(text: str, rng) -> str:
    at = int(rng.integers(len(text) + 1))
    kind = int(rng.integers(3))
    if kind == 0:
        return text[:at]
    if kind == 1:
        lines = text.splitlines(keepends=True)
        i = int(rng.integers(len(lines)))
        return "".join(lines[:i + 1] + lines[i:])
    return text[:at] + FUZZ_FRAGMENTS[int(rng.integers(len(FUZZ_FRAGMENTS)))] + text[at:]


def mutated_preset(seed: int) -> str:
    """A preset with seeded damage: swapped or dropped values, truncation, duplicated lines or stray characters."""
    rng = np.random.default_rng(seed)
    name = ("cnot-readout", "stern-gerlach-default")[seed % 2]
    text = preset_text(name)
    if rng.random() < 0.5:
        return _mutate_structure(text, rng)
    return _mutate_text(text, rng)
