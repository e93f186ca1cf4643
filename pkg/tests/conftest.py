import sys
from pathlib import Path

import pytest

# Add src to Python path
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from habitprox.core import ObjectiveSpec, QuasiDistance, ResistanceProfile, SearchSpace, SolverSettings  # noqa: E402


@pytest.fixture
def quadratic():
    return ObjectiveSpec.quadratic([0.0])


@pytest.fixture
def euclidean():
    return QuasiDistance.euclidean()


@pytest.fixture
def weak_resistance():
    return ResistanceProfile.quadratic()


@pytest.fixture
def box():
    return SearchSpace.box([-10.0], [10.0])


@pytest.fixture
def small_grid():
    return SearchSpace.grid([-2.0], [2.0], 5)


@pytest.fixture
def full_length():
    """Settings under which only the step budget ends a converging run."""
    return SolverSettings(stop_step_tol=0.0)


QUADRATIC_GRID_CONFIG = """\
seed = 7
output_dir = "{out}"

[objective]
preset = "quadratic"

[space]
kind = "finite-grid"
lower = [-2.0]
upper = [2.0]
resolution = 5

[probes]
instances = 50
pairs = 50
kl_samples = 50

[[runs]]
name = "global"
mode = "global"

[[runs]]
name = "exact"
mode = "exact-prox"
x0 = [2.0]

[[runs]]
name = "checks"
mode = "probes"
"""


@pytest.fixture
def write_config(tmp_path):
    """Write a config text into tmp_path with {out} pointing at tmp_path/out."""

    def write(text: str = QUADRATIC_GRID_CONFIG, name: str = "experiment.toml") -> Path:
        path = tmp_path / name
        path.write_text(text.replace("{out}", str(tmp_path / "out").replace("\\", "/")), encoding="utf-8")
        return path

    return write
