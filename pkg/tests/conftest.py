import pathlib

import pytest

from frontier_race.dataset import load_uef_file, load_universe_file
from frontier_race.model import ProblemSpec

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"
DATASETS = ["port1", "port2", "port3", "port4", "port5"]


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def universes():
    return {name: load_universe_file(DATA_DIR / name) for name in DATASETS}


@pytest.fixture(scope="session")
def uefs():
    return {
        name: load_uef_file(DATA_DIR / name.replace("port", "portef"))
        for name in DATASETS
    }


@pytest.fixture(scope="session")
def port1(universes):
    return universes["port1"]


@pytest.fixture(scope="session")
def portef1(uefs):
    return uefs["port1"]


@pytest.fixture(scope="session")
def spec_port1(port1):
    return ProblemSpec(universe=port1)
