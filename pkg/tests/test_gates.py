import pytest

from shia.logic import (
    ArityError,
    BlockInstance,
    GateKind,
    Level,
    UnknownPortError,
    eval_gate,
    step_block,
)

L, H = Level.LOW, Level.HIGH

TWO_INPUT_TABLES = {
    GateKind.NAND: {(L, L): H, (L, H): H, (H, L): H, (H, H): L},
    GateKind.AND: {(L, L): L, (L, H): L, (H, L): L, (H, H): H},
    GateKind.OR: {(L, L): L, (L, H): H, (H, L): H, (H, H): H},
    GateKind.XOR: {(L, L): L, (L, H): H, (H, L): H, (H, H): L},
}


@pytest.mark.parametrize("kind", list(TWO_INPUT_TABLES))
def test_two_input_gates_exhaustive(kind):
    for inputs, expected in TWO_INPUT_TABLES[kind].items():
        assert eval_gate(kind, inputs) is expected


def test_nand_high_unless_both_high():
    assert eval_gate(GateKind.NAND, (H, H)) is L
    assert eval_gate(GateKind.NAND, (L, H)) is H


def test_not_complements():
    assert eval_gate(GateKind.NOT, (L,)) is H
    assert eval_gate(GateKind.NOT, (H,)) is L


def test_eval_gate_arity_errors():
    with pytest.raises(ArityError):
        eval_gate(GateKind.NAND, (H,))
    with pytest.raises(ArityError):
        eval_gate(GateKind.NOT, (H, L))
    with pytest.raises(ArityError):
        eval_gate(GateKind.SPLITTER, (H,))


def test_kind_arities():
    assert GateKind.NOT.n_inputs == 1 and GateKind.NOT.n_outputs == 1
    assert GateKind.SPLITTER.n_inputs == 1 and GateKind.SPLITTER.n_outputs == 2
    for kind in TWO_INPUT_TABLES:
        assert kind.n_inputs == 2 and kind.n_outputs == 1


def test_powered_on_outputs_match_low_inputs():
    for kind in GateKind:
        block = BlockInstance.powered_on("b", kind)
        assert block.input_state == (L,) * kind.n_inputs
        if kind is GateKind.SPLITTER:
            assert block.output_state == (L, L)
        else:
            assert block.output_state == (eval_gate(kind, block.input_state),)


def test_step_block_nand_output_falls():
    # Latched (high, low): output is high; raising input B drops it.
    block = BlockInstance("n", GateKind.NAND, (H, L), (H,))
    block, emitted = step_block(block, "in2", H)
    assert block.input_state == (H, H)
    assert block.output_state == (L,)
    assert emitted == [("out1", L)]


def test_step_block_splitter_emits_twice():
    block = BlockInstance.powered_on("s", GateKind.SPLITTER)
    block, emitted = step_block(block, "in1", H)
    assert emitted == [("out1", H), ("out2", H)]
    assert block.output_state == (H, H)


def test_step_block_idempotent_event_emits_nothing():
    block = BlockInstance.powered_on("n", GateKind.NAND)
    stepped, emitted = step_block(block, "in1", L)
    assert emitted == []
    assert stepped == block


def test_step_block_unknown_port():
    block = BlockInstance.powered_on("v", GateKind.NOT)
    with pytest.raises(UnknownPortError):
        step_block(block, "in2", H)
    with pytest.raises(UnknownPortError):
        step_block(block, "out1", H)


def test_step_block_is_pure():
    block = BlockInstance.powered_on("n", GateKind.NAND)
    step_block(block, "in1", H)
    assert block.input_state == (L, L)
