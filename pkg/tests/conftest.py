import pytest

from src.common.models import ArrowDirection, Window
from src.environment.models import ChainSpec, ConstantModelSpec, SsepModelSpec
from src.graphical.arrows import Arrow, ArrowField
from src.orchestration.orchestrator import ReplicaExecutor

R, L = ArrowDirection.RIGHT, ArrowDirection.LEFT

# Hand-built field with two walks from 0 and 4 that meet at site 3, t = 8.0.
FIGURE_ARROWS = [
    # crossed by the walk from 0
    (0, 1.0, R), (1, 1.8, L), (0, 2.5, L), (-1, 3.8, R), (0, 4.6, R), (1, 5.1, R), (2, 6.0, R), (3, 8.4, L),
    # crossed by the walk from 4
    (4, 0.6, L), (3, 1.4, L), (2, 2.7, R), (3, 3.5, R), (4, 4.0, R), (5, 5.0, L), (4, 5.6, R), (5, 6.7, L),
    (4, 8.0, L),
    # never crossed
    (-1, 2.0, L), (-1, 6.0, L), (-1, 1.4, R), (-1, 7.6, R), (0, 5.4, L), (0, 3.2, R), (1, 6.5, L),
    (1, 2.2, R), (1, 8.1, R), (2, 4.1, L), (2, 7.1, L), (2, 0.9, R), (2, 4.7, R), (3, 1.9, R), (3, 5.3, R),
    (4, 6.4, L), (4, 3.1, R), (4, 8.5, R), (5, 1.4, L), (5, 2.3, R), (5, 7.5, R),
]
FIGURE_HORIZON = 9.0


@pytest.fixture
def figure_field() -> ArrowField:
    window = Window(x_min=-3, x_max=8, t_max=FIGURE_HORIZON)
    return ArrowField.from_arrows(window, [Arrow(x, t, d) for x, t, d in FIGURE_ARROWS], field_id="figure")


@pytest.fixture
def biased_constant() -> ConstantModelSpec:
    return ConstantModelSpec(p=2.0, q=1.0)


@pytest.fixture
def small_ssep() -> SsepModelSpec:
    return SsepModelSpec(alpha=2.0, beta=1.0, rho=0.5, half_width=40)


@pytest.fixture
def two_state_chain() -> ChainSpec:
    return ChainSpec(
        states=["slow", "fast"],
        generator=[[-1.0, 1.0], [1.0, -1.0]],
        alpha_plus={"slow": 1.5, "fast": 3.0},
        alpha_minus={"slow": 1.0, "fast": 1.0},
    )


@pytest.fixture
def executor() -> ReplicaExecutor:
    return ReplicaExecutor(workers=1)
