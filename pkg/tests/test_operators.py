import hashlib
import random

import pytest

from instructevo.gateway import CompletionParams, GatewayError, MockGateway
from instructevo.model import Individual, Instruction, ObjectiveVector
from instructevo.operators import (
    TEMPLATE_CHECKSUMS,
    OperatorError,
    OperatorKind,
    apply_operator,
    build_prompt,
    format_objectives,
    load_templates,
    parse_operator_output,
    select_operator,
)

F1 = ObjectiveVector(0.5, 120, 1.1)
F2 = ObjectiveVector(0.25, 80, 2.3)


def _parent(definition="Classify the sentiment.", example="Ex: good -> positive", objectives=F1):
    return Individual(instruction=Instruction(definition, example), objectives=objectives)


class TestSelectOperator:
    def test_seeded_replay(self):
        assert select_operator(random.Random(11)) == select_operator(random.Random(11))

    def test_advances_stream_by_one_draw(self):
        a, b = random.Random(5), random.Random(5)
        select_operator(a)
        b.randrange(4)
        assert a.random() == b.random()

    def test_uniform_frequencies(self):
        rng = random.Random(1234)
        counts = {kind: 0 for kind in OperatorKind}
        n = 10_000
        for _ in range(n):
            counts[select_operator(rng)] += 1
        for kind, count in counts.items():
            assert 0.23 <= count / n <= 0.27, f"{kind}: {count / n}"


class TestTemplates:
    def test_checksums_pass(self):
        templates = load_templates()
        for kind in OperatorKind:
            digest = hashlib.sha256(templates[kind.value]["fixed"].encode()).hexdigest()
            assert digest == TEMPLATE_CHECKSUMS[kind.value]

    def test_task_slot_only_in_three_operators(self):
        templates = load_templates()
        assert "{task}" not in templates["definition_mutation"]["fixed"]
        for kind in ("definition_crossover", "example_mutation", "example_crossover"):
            assert "{task}" in templates[kind]["fixed"]


class TestBuildPrompt:
    def test_mutation_with_guidance(self):
        p = build_prompt(OperatorKind.DEFINITION_MUTATION, (_parent().instruction, F1), None, True)
        assert "professional prompt engineer" in p.fixed_text
        assert "Given the minimization objectives" in p.fixed_text
        assert "Classify the sentiment." in p.payload
        assert "(0.5, 120, 1.1)" in p.payload

    def test_mutation_without_guidance(self):
        p = build_prompt(OperatorKind.DEFINITION_MUTATION, (_parent().instruction, F1), None, False)
        assert "Given the minimization objectives" not in p.text
        assert "(0.5, 120, 1.1)" not in p.text
        assert "Classify the sentiment." in p.payload

    def test_crossover_carries_both_annotations(self):
        p1, p2 = _parent(), _parent("Label the tone.", "Ex: bad -> negative", F2)
        p = build_prompt(
            OperatorKind.EXAMPLE_CROSSOVER,
            (p1.instruction, F1),
            (p2.instruction, F2),
            True,
        )
        assert p.payload.count("Minimization objectives:") == 2
        assert "(0.5, 120, 1.1)" in p.payload
        assert "(0.25, 80, 2.3)" in p.payload
        assert "Ex: good -> positive" in p.payload
        assert "Ex: bad -> negative" in p.payload

    def test_each_annotation_appears_once(self):
        p = build_prompt(
            OperatorKind.DEFINITION_CROSSOVER,
            (_parent().instruction, F1),
            (_parent("Other definition.").instruction, F2),
            True,
        )
        assert p.text.count(format_objectives(F1)) == 1
        assert p.text.count(format_objectives(F2)) == 1

    def test_missing_parent2_rejected(self):
        with pytest.raises(ValueError):
            build_prompt(OperatorKind.DEFINITION_CROSSOVER, (_parent().instruction, F1), None, True)

    def test_task_name_substituted(self):
        p = build_prompt(
            OperatorKind.EXAMPLE_MUTATION,
            (_parent().instruction, F1),
            None,
            True,
            task_name="topic classification",
        )
        assert "for topic classification" in p.fixed_text
        assert "{task}" not in p.fixed_text

    def test_definition_operators_use_definitions(self):
        p = build_prompt(OperatorKind.DEFINITION_MUTATION, (_parent().instruction, F1), None, True)
        assert "Ex: good -> positive" not in p.payload


class TestFormatObjectives:
    def test_four_significant_digits(self):
        assert format_objectives(ObjectiveVector(0.5, 120, 1.1)) == "(0.5, 120, 1.1)"
        assert format_objectives(ObjectiveVector(0.343642, 1234, 7.89306)) == "(0.3436, 1234, 7.893)"


class TestParseOperatorOutput:
    def test_strips_fences(self):
        assert parse_operator_output("```\nNew definition text\n```") == "New definition text"

    def test_strips_language_tagged_fence(self):
        assert parse_operator_output("```text\nNew def\n```") == "New def"

    def test_strips_surrounding_quotes(self):
        assert parse_operator_output('"New def"') == "New def"

    def test_drops_objectives_line(self):
        raw = "New def\nMinimization objectives: (0.5, 100, 1.1)"
        assert parse_operator_output(raw) == "New def"

    def test_drops_objectives_line_case_insensitive(self):
        raw = "New def\nMINIMIZATION OBJECTIVES: (1, 2, 3)"
        assert parse_operator_output(raw) == "New def"

    def test_whitespace_only_signals_empty(self):
        assert parse_operator_output("   ") == ""


class _FnGateway:
    def __init__(self, fn):
        self.fn = fn

    def complete(self, prompt, params):
        from instructevo.gateway import split_payload_segments

        return self.fn(split_payload_segments(prompt))


class TestApplyOperator:
    def test_definition_mutation_uppercase(self):
        parent = _parent()
        gateway = MockGateway(mode="uppercase")
        child = apply_operator(OperatorKind.DEFINITION_MUTATION, parent, None, gateway, True)
        assert child.definition == parent.instruction.definition.upper()
        assert child.example == parent.instruction.example

    def test_example_crossover_keeps_parent1_definition(self):
        p1, p2 = _parent(), _parent("Other def.", "Other example", F2)
        gateway = _FnGateway(lambda segs: "merged example")
        child = apply_operator(OperatorKind.EXAMPLE_CROSSOVER, p1, p2, gateway, True)
        assert child.definition == p1.instruction.definition
        assert child.example == "merged example"

    def test_definition_crossover_splice(self):
        p1 = _parent("abcd", "keep me")
        p2 = _parent("wxyz", "other", F2)
        gateway = MockGateway(mode="splice")
        child = apply_operator(OperatorKind.DEFINITION_CROSSOVER, p1, p2, gateway, True)
        assert child.definition == "abyz"
        assert child.example == "keep me"

    def test_identity_gateway_reproduces_parent1(self):
        parent = _parent()
        gateway = MockGateway(mode="echo")
        for kind in OperatorKind:
            p2 = parent if kind.is_crossover else None
            child = apply_operator(kind, parent, p2, gateway, True)
            child_rendered = Instruction(child.definition, child.example).render()
            assert child_rendered == parent.instruction.render()

    def test_lineage_records_kind_and_parents(self):
        p1, p2 = _parent(), _parent("Other def.", objectives=F2)
        gateway = MockGateway(mode="echo")
        child = apply_operator(OperatorKind.DEFINITION_CROSSOVER, p1, p2, gateway, True)
        assert child.lineage[-1].operator == "definition_crossover"
        assert child.lineage[-1].parent_ids == (p1.instruction.id, p2.instruction.id)

    def test_gateway_failure_wrapped(self):
        class Boom:
            def complete(self, prompt, params):
                raise GatewayError("down")

        with pytest.raises(OperatorError) as err:
            apply_operator(OperatorKind.DEFINITION_MUTATION, _parent(), None, Boom(), True)
        assert err.value.kind == OperatorKind.DEFINITION_MUTATION

    def test_empty_output_falls_back_to_parent_copy(self):
        parent = _parent()
        warnings = []
        gateway = _FnGateway(lambda segs: "   ")
        child = apply_operator(
            OperatorKind.DEFINITION_MUTATION, parent, None, gateway, True, warn=warnings.append
        )
        assert child.definition == parent.instruction.definition
        assert child.example == parent.instruction.example
        assert child.id != parent.instruction.id
        assert warnings

    def test_field_preservation(self):
        p1, p2 = _parent(), _parent("Second def.", "Second ex", F2)
        gateway = _FnGateway(lambda segs: "replacement text")
        for kind in OperatorKind:
            child = apply_operator(kind, p1, p2 if kind.is_crossover else None, gateway, True)
            if kind.edits_definition:
                assert child.example == p1.instruction.example
            else:
                assert child.definition == p1.instruction.definition

    def test_seeded_edit_substitutes_known_words(self):
        parent = _parent("Use your own viewpoint to judge the attitude of every passage.")
        gateway = MockGateway(mode="seeded-edit", seed=9)
        child = apply_operator(OperatorKind.DEFINITION_MUTATION, parent, None, gateway, True)
        assert child.definition != parent.instruction.definition
        # replacements come only from the synonym table
        assert child.example == parent.instruction.example
