import os

import pytest

from psflab.analysis.bump import default_kernel

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def pytest_configure(config):
  config.addinivalue_line("markers", "slow: full-size numerical checks, deselect with -m 'not slow'")


@pytest.fixture(scope="session")
def kernel():
  return default_kernel()


@pytest.fixture()
def fixture_path():

  def _path(name):
    return os.path.join(FIXTURES, name)

  return _path
