import pytest

from carnot import GroupDescriptor, SamplingPlan, engel, euclidean, free_step2, heisenberg


@pytest.fixture(scope="session")
def h1():
    return heisenberg(1)


@pytest.fixture(scope="session")
def h2():
    return heisenberg(2)


@pytest.fixture(scope="session")
def fs3():
    return free_step2(3)


@pytest.fixture(scope="session")
def eng():
    return engel()


@pytest.fixture(scope="session")
def r3():
    return euclidean(3)


@pytest.fixture(scope="session")
def filiform4():
    # step-4 filiform: [e1,e2]=e3, [e1,e3]=e4, [e1,e4]=e5
    br = {
        (0, 1, 2): 1.0,
        (1, 0, 2): -1.0,
        (0, 2, 3): 1.0,
        (2, 0, 3): -1.0,
        (0, 3, 4): 1.0,
        (3, 0, 4): -1.0,
    }
    return GroupDescriptor("filiform4", (2, 1, 1, 1), br)


@pytest.fixture(scope="session")
def plan():
    return SamplingPlan(seed=0)
