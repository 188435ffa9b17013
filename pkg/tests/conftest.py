import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.instance_utils import GenConfig, Instance, generate_instance


def make_tiny1() -> Instance:
    """Two bases, one terminal: a=(0.6, 0.3), delta=1.5, N=0.1, P=(1, 2), r=10, c=1."""
    return Instance(
        bases=("b1", "b2"),
        terminals=("t1",),
        levels=(1.0, 2.0),
        atten=((0.6, 0.3),),
        delta=(1.5,),
        noise=0.1,
        revenue=(10.0,),
        coop_cost=(1.0,),
        name="TINY1",
    )


def make_small(seed: int, num_terminals: int = 4, num_bases: int = 3, num_levels: int = 2) -> Instance:
    """Small synthetic instance on a compact area so that service is contested."""
    config = GenConfig(
        num_terminals=num_terminals,
        num_bases=num_bases,
        num_levels=num_levels,
        area_side=100.0,
        ref_distance_ratio=0.2,
        delta=1.5,
        noise=1e-3,
        revenue=1.0,
        coop_cost=0.2,
        seed=seed,
    )
    return generate_instance(config)


@pytest.fixture
def tiny1() -> Instance:
    return make_tiny1()


@pytest.fixture
def small_instance() -> Instance:
    return make_small(seed=3)


@pytest.fixture
def small_factory():
    return make_small
