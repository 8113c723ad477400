import os

import pytest

from rclab.config import ExperimentConfig
from rclab.experiment import Experiment

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")
CASES_DIR = os.path.join(GOLDEN_DIR, "cases")


def make_config(**kw):
    base = dict(program="fig1", n=2, proposals=[10, 20])
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def make_experiment(**kw):
    return Experiment(make_config(**kw))


@pytest.fixture
def fig1_sim1():
    return make_experiment(failure="simultaneous", budget=1)


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture
def cases_dir():
    return CASES_DIR
