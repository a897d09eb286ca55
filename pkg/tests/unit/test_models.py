"""
Tests for result models.
"""

import orjson
import pytest
from pydantic import ValidationError

from fortress_qd.models.results import EvalResult, TelemetryRecord


def make_result(**overrides) -> EvalResult:
    values = dict(
        fitness=0.5,
        explored=3,
        total=6,
        bc_instances=2.0,
        bc_nodes=15,
        entropy=0.0,
        seeds=[1, 2],
        horizon=100,
        final_counts=[2, 2],
        terminations=["step_limit", "step_limit"],
        populations=[[[1, 1]], [[1, 1]]],
    )
    values.update(overrides)
    return EvalResult(**values)


@pytest.mark.unit
class TestEvalResult:
    def test_json_has_sorted_keys(self) -> None:
        text = make_result().to_json()
        keys = list(orjson.loads(text))
        assert keys == sorted(keys)
        assert EvalResult.model_validate_json(text) == make_result()

    @pytest.mark.parametrize("fitness", [-0.1, 1.5])
    def test_fitness_bounds(self, fitness: float) -> None:
        with pytest.raises(ValidationError):
            make_result(fitness=fitness)

    def test_frozen(self) -> None:
        result = make_result()
        with pytest.raises(ValidationError):
            result.fitness = 0.9  # type: ignore[misc]


@pytest.mark.unit
def test_telemetry_record_fields() -> None:
    record = TelemetryRecord(
        generation=2, qd_score=1.5, best_score=0.75, occupied_cells=3, evaluations=20
    )
    assert list(record.model_dump()) == [
        "generation",
        "qd_score",
        "best_score",
        "occupied_cells",
        "evaluations",
    ]
