import numpy as np
import pytest

from qneat.genome import InnovationRegistry, Genome, mutate_add_cnot, mutate_add_rot, mutate_weights


def random_genome(rng, n_wires=4, n_mutations=8, registry=None):
    """A valid genome grown by a random sequence of structural and weight mutations."""
    registry = registry if registry is not None else InnovationRegistry()
    genome = Genome(n_wires)
    for _ in range(n_mutations):
        r = rng.random()
        if r < 0.45:
            genome = mutate_add_rot(genome, registry, rng)
        elif r < 0.9:
            genome = mutate_add_cnot(genome, registry, rng)
        else:
            genome = mutate_weights(genome, 0.3, 1.0, rng)
    return genome


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance report -----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
