"""Shared test helpers: fixture access and seeded random generators."""

import random
from fractions import Fraction

import pytest

from pags import load_fixture_model
from pags.model import GameStructure
from pags.prob import Distribution, Relation


def random_distribution(rng: random.Random, states, max_den=12) -> Distribution:
    """Random distribution whose denominators all divide one value <= max_den."""
    den = rng.randint(1, max_den)
    chosen = rng.sample(states, rng.randint(1, len(states)))
    cuts = sorted(rng.randint(0, den) for _ in range(len(chosen) - 1))
    weights = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    entries = {s: Fraction(w, den) for s, w in zip(chosen, weights) if w}
    if not entries:
        entries = {chosen[0]: Fraction(1)}
    return Distribution(entries)


def random_relation(rng: random.Random, left, right, density=0.5) -> Relation:
    return Relation(
        (s, t) for s in left for t in right if rng.random() < density
    )


def random_model(rng: random.Random, n_states=3, n_acts1=2, n_acts2=2, n_props=2) -> GameStructure:
    states = [f"q{i}" for i in range(n_states)]
    acts1 = [f"a{i}" for i in range(n_acts1)]
    acts2 = [f"b{i}" for i in range(n_acts2)]
    props = [f"p{i}" for i in range(n_props)]
    labels = {
        s: [p for p in props if rng.random() < 0.5] for s in states
    }
    table = {}
    for s in states:
        for a1 in acts1:
            for a2 in acts2:
                table[(s, a1, a2)] = random_distribution(rng, states, max_den=6)
    return GameStructure("rand", states, states[0], props, labels, acts1, acts2, table)


@pytest.fixture
def rps():
    return load_fixture_model("rps.pgs")


@pytest.fixture
def halving():
    return load_fixture_model("halving.pgs")


@pytest.fixture
def lifthost():
    return load_fixture_model("lifthost.pgs")


@pytest.fixture
def dup():
    return load_fixture_model("dup.pgs")


@pytest.fixture
def single():
    return load_fixture_model("single.pgs")
