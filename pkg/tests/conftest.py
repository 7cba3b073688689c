from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from dsfc import BasisSpec, PlantModel, supply_from_template
from dsfc.config import paper_example_config, setup_from_config
from dsfc.synthesis import prepare

settings.register_profile("dsfc", max_examples=50, deadline=None, derandomize=True)
settings.load_profile("dsfc")

# Plant of the worked example, typed in independently of the shipped config file.
DEMO_A = np.array([[-1.0, 1.0], [0.0, 0.1]])
DEMO_B = np.array([[0.0], [1.0]])
DEMO_D1 = np.array([[0.1], [-0.1]])
DEMO_C1 = np.array([[-0.3, 0.4, 0.1], [-0.3, 0.1, -0.1]])
DEMO_C2 = np.array([[0.0, 0.2, 0.0], [-0.2, 0.1, 0.0]])
DEMO_D2 = np.array([[0.12]])
DEMO_D3 = np.array([[0.14], [0.1]])
DEMO_EXPONENTS = [0.0, 1.0, 2.0, 3.0, -0.1]


def demo_c3bar() -> np.ndarray:
    """Plain-basis coefficients of C3~(tau) on f = (1, e^t, e^2t, e^3t, e^-0.1t), nu = 3."""
    C = np.zeros((2, 15))
    nu = 3
    # entry (i, j) of the k-th basis function sits at column k*nu + j
    C[0, 0 * nu + 0] = 0.2
    C[0, 1 * nu + 0] = 0.1
    C[0, 0 * nu + 1] = 0.1
    C[0, 3 * nu + 2] = 0.12
    C[1, 0 * nu + 0] = -0.2
    C[1, 0 * nu + 1] = 0.3
    C[1, 2 * nu + 1] = 0.14
    C[1, 3 * nu + 2] = 0.11
    return C


def demo_plant(r: float = 1.0) -> PlantModel:
    return PlantModel(DEMO_A, DEMO_B, DEMO_D1, DEMO_C1, DEMO_C2, demo_c3bar(), DEMO_D2, DEMO_D3, r)


def demo_spec(r: float = 1.0) -> BasisSpec:
    return BasisSpec.diagonal(DEMO_EXPONENTS, r)


def scalar_toy_plant(a: float = -1.0, r: float = 0.5) -> PlantModel:
    """x' = a x + u(t - r) + w, z = x (n = p = q = m = 1)."""
    return PlantModel([[a]], [[1.0]], [[1.0]], [[1.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0]], [[0.0]], r)


@pytest.fixture(scope="session")
def demo_problem():
    return prepare(demo_plant(), demo_spec(), supply_from_template("l2gain", 2, 1))


@pytest.fixture(scope="session")
def demo_setup():
    return setup_from_config(paper_example_config())


@pytest.fixture(scope="session")
def toy_problem():
    return prepare(scalar_toy_plant(), BasisSpec.diagonal([1.0], 0.5), supply_from_template("l2gain", 1, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled by test_acceptance and echoed at the end of the run
ACCEPTANCE: dict[str, str] = {}


def record_acceptance(key: str, ok: bool, detail: str) -> None:
    line = f"{key}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[key] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
