import os
from unittest.mock import patch

import numpy as np
import pytest
from fastapi.testclient import TestClient


@pytest.fixture
def test_client():
    """Create a test client for FastAPI app"""
    from src.api.main import app

    return TestClient(app)


@pytest.fixture
def mock_inequality_service():
    """Create a mock inequality service"""
    with patch("src.api.main.inequality_service") as mock_service:
        yield mock_service


@pytest.fixture
def mock_environment():
    """Mock environment variables"""
    original_env = os.environ.copy()
    test_env = {
        "VIOLATION_TOLERANCE": "1e-6",
        "DEFAULT_TRIALS": "40",
        "JOBS": "2",
        "LOG_LEVEL": "DEBUG",
    }

    for key, value in test_env.items():
        os.environ[key] = value

    yield test_env

    os.environ.clear()
    os.environ.update(original_env)


@pytest.fixture
def rng():
    """Seeded generator so random samples are reproducible"""
    return np.random.default_rng(12345)


@pytest.fixture
def pr_box():
    from src.core.nsbox import pr_box

    return pr_box()


@pytest.fixture
def pr_box_file(pr_box):
    """PR box in the on-disk format"""
    return pr_box.to_file().model_dump()


@pytest.fixture
def van_dam_file():
    from src.core.protocol import van_dam

    return van_dam().to_file().model_dump()


@pytest.fixture
def witness_biases():
    """Correlators of the mixture with q1 = 0.55, q2 = 0.05"""
    return np.array([[1.0, 0.9], [-0.2, -0.9]])


def pytest_configure(config):
    """Configure pytest"""
    config.addinivalue_line("markers", "unit: mark test as a unit test")


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests"""
    for item in items:
        # Add unit marker to all tests unless they have integration marker
        if not any(marker.name == "integration" for marker in item.iter_markers()):
            item.add_marker(pytest.mark.unit)
