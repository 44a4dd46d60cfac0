import math

import pytest

from carlemanlab.growth import GrowthProfile
from carlemanlab.moments import VARIANT_CLASSICAL, VARIANT_GENERAL, kernel, moment_table
from carlemanlab.proximate import gevrey_weight
from carlemanlab.sequences import build_builtin


@pytest.fixture(scope="session")
def gevrey1():
    return build_builtin("gevrey", 1.0)


@pytest.fixture(scope="session")
def gevrey2():
    return build_builtin("gevrey", 2.0)


@pytest.fixture(scope="session")
def gevrey05():
    return build_builtin("gevrey", 0.5)


@pytest.fixture(scope="session")
def alphabeta12():
    return build_builtin("alphabeta", 1.0, 2.0)


@pytest.fixture(scope="session")
def profile_g1(gevrey1):
    return GrowthProfile(gevrey1)


@pytest.fixture(scope="session")
def profile_g2(gevrey2):
    return GrowthProfile(gevrey2)


@pytest.fixture(scope="session")
def profile_g05(gevrey05):
    return GrowthProfile(gevrey05)


@pytest.fixture(scope="session")
def kernel_v_z():
    return kernel(gevrey_weight(1.0), VARIANT_GENERAL)


@pytest.fixture(scope="session")
def kernel_v_z2():
    return kernel(gevrey_weight(2.0), VARIANT_GENERAL)


@pytest.fixture(scope="session")
def kernel_classical2():
    return kernel(gevrey_weight(2.0), VARIANT_CLASSICAL)


@pytest.fixture(scope="session")
def table_v_z(kernel_v_z):
    return moment_table(kernel_v_z, 40, tol=1e-12)


@pytest.fixture(scope="session")
def table_v_z2(kernel_v_z2):
    return moment_table(kernel_v_z2, 40, tol=1e-12)


def factorial_power(p, alpha):
    return math.exp(alpha * math.lgamma(p + 1.0))
