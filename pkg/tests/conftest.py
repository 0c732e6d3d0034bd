import logging

import pytest

from drsync.instance import Instance, Ride, StationAccess, Stop, check_instance

logging.getLogger("drsync").setLevel(logging.ERROR)


def customer_stops(*names):
    return tuple(Stop(n, "customer") for n in names)


@pytest.fixture
def fig2():
    """One segment i->j (60 min) with one station (30 in / 35 out, detour 5)."""
    return check_instance(Instance(
        rides=(Ride("r1", "L1", ("i", "j"), (480, 540), (60,),
                    ((StationAccess("s", 30, 35),),)),),
        stops=customer_stops("i", "j") + (Stop("s", "station"),),
        theta_tw=10, zeta=10, ell=10,
    ))


@pytest.fixture
def sequential_pair():
    """Two rides meeting at one terminal with an hour between them."""
    return check_instance(Instance(
        rides=(
            Ride("a", "L1", ("P", "Q"), (480, 600), (120,), ((),)),
            Ride("b", "L1", ("Q", "R"), (660, 780), (120,), ((),)),
        ),
        stops=customer_stops("P", "Q", "R"),
        theta_tw=10, zeta=0, ell=10,
    ))


@pytest.fixture
def parallel_triplet():
    rides = tuple(
        Ride(f"p{i}", f"L{i}", (f"U{i}", f"V{i}"), (480, 600), (120,), ((),))
        for i in range(3)
    )
    stops = customer_stops(*(f"{c}{i}" for i in range(3) for c in "UV"))
    return check_instance(Instance(rides=rides, stops=stops,
                                   theta_tw=10, zeta=0, ell=10))
