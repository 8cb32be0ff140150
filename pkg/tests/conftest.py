import pytest

from instructevo import model
from instructevo.model import Individual, Instruction, ObjectiveVector


@pytest.fixture(autouse=True)
def fresh_ids():
    model.reset_ids(0)
    yield


@pytest.fixture
def scorer():
    from instructevo.perplexity import bundled_scorer

    return bundled_scorer()


@pytest.fixture
def oracle():
    from instructevo.objectives import KeywordOracleEvaluator

    return KeywordOracleEvaluator()


SEED_DEFINITION = (
    "Classify the sentiment polarity of each review and label it as positive or negative. "
    "Use your own viewpoint to judge the attitude and the critique of every passage."
)
SEED_EXAMPLE = "Input: The soup was rich and the service was warm.\nOutput: positive"


@pytest.fixture
def seed_instruction():
    return Instruction(definition=SEED_DEFINITION, example=SEED_EXAMPLE)


def make_individual(vector, generation=0):
    perf, length, ppl = vector
    return Individual(
        instruction=Instruction(definition="x" * max(int(length), 1)),
        objectives=ObjectiveVector(performance=perf, length=int(length), perplexity=ppl),
        generation_born=generation,
    )


def brute_force_fronts(vectors):
    """Independent dominance-partition oracle: peel non-dominated sets."""

    def dom(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    remaining = list(range(len(vectors)))
    fronts = []
    while remaining:
        front = [
            i
            for i in remaining
            if not any(dom(vectors[j], vectors[i]) for j in remaining if j != i)
        ]
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def base_config_dict(tmp_path, **overrides):
    cfg = {
        "population_size": 8,
        "generations": 2,
        "seed": 42,
        "output_dir": str(tmp_path / "run"),
        "task_name": "sentiment analysis",
        "seed_instructions": [{"definition": SEED_DEFINITION, "example": SEED_EXAMPLE}],
        "gateway": {"backend": "mock", "mock_mode": "seeded-edit"},
    }
    cfg.update(overrides)
    return cfg
