import importlib.resources

import pytest


@pytest.fixture(scope="session")
def config_dir():
    return importlib.resources.files("zplsim") / "configs"
