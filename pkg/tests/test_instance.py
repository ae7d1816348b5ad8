import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_objectives, random_instance
from l2nsga.instance import (
    Block,
    FaultMatrix,
    Instance,
    InstanceFormatError,
    compact,
    format_faults,
    format_instance,
    generate_faults,
    generate_synthetic,
    load_faults,
    load_instance,
    parse_block,
    parse_faults,
    parse_instance,
    write_instance,
)
from l2nsga.objectives import evaluate_population

THREE_TESTS = """tcs-instance v1 3 4 2
t1 5 S:0,1 B:0
t2 3 S:1,2 B:
t3 1.5 S: B:1
"""


def test_parse_three_tests():
    inst = parse_instance(THREE_TESTS)
    assert inst.num_tests == 3
    assert inst.test_ids == ("t1", "t2", "t3")
    assert inst.cost.tolist() == [5.0, 3.0, 1.5]
    assert inst.statement_cov.tolist() == [
        [True, True, False, False],
        [False, True, True, False],
        [False, False, False, False],
    ]
    assert inst.num_statements == 4 and inst.num_branches == 2


def test_format_round_trip_is_bit_exact():
    inst = parse_instance(THREE_TESTS)
    assert format_instance(inst) == THREE_TESTS
    assert parse_instance(format_instance(inst)) == inst


def test_load_uses_file_stem(tmp_path):
    p = tmp_path / "prog.txt"
    p.write_text(THREE_TESTS)
    assert load_instance(p).name == "prog"


@pytest.mark.parametrize(
    "text, line",
    [
        ("tcs-instance v2 1 1 1\nt 1 S:0 B:0\n", 1),
        ("tcs-instance v1 2 1 1\nt 1 S:0 B:0\n", 3),
        ("tcs-instance v1 1 1 1\nt 1 S:0 B:0\nu 1 S:0 B:0\n", 3),
        ("tcs-instance v1 1 1 1\nt -1 S:0 B:0\n", 2),
        ("tcs-instance v1 2 1 1\nt 1 S:0 B:0\nu 1 S:1 B:0\n", 3),
        ("tcs-instance v1 1 1 1\nt abc S:0 B:0\n", 2),
        ("tcs-instance v1 1 1 1\nt 1 X:0 B:0\n", 2),
    ],
)
def test_malformed_files_name_the_line(text, line):
    with pytest.raises(InstanceFormatError) as err:
        parse_instance(text, path="f.txt")
    assert err.value.line == line
    assert f"f.txt:{line}:" in str(err.value)


def test_all_zero_costs_rejected():
    with pytest.raises(InstanceFormatError):
        parse_instance("tcs-instance v1 1 1 1\nt 0 S:0 B:0\n")


def test_instance_invariants():
    with pytest.raises(ValueError):
        Instance("x", np.zeros((2, 1)), np.zeros((3, 1)), np.ones(2))
    with pytest.raises(ValueError):
        Instance("x", np.zeros((1, 1)), np.zeros((1, 1)), np.array([-1.0]))
    inst = Instance("x", np.ones((1, 2)), np.ones((1, 1)), np.ones(1))
    with pytest.raises(ValueError):
        inst.cost[0] = 3.0  # read-only


def test_fault_round_trip(tmp_path):
    inst = parse_instance(THREE_TESTS)
    fm = FaultMatrix(np.array([[1, 0], [0, 0], [1, 1]], dtype=bool), inst.test_ids)
    text = format_faults(fm)
    assert text == "tcs-faults v1 3 2\nt1 F:0\nt2 F:\nt3 F:0,1\n"
    assert parse_faults(text) == fm
    p = tmp_path / "f.faults"
    p.write_text(text)
    assert load_faults(p, inst) == fm
    small = Instance("x", np.ones((1, 1)), np.ones((1, 1)), np.ones(1))
    with pytest.raises(InstanceFormatError):
        load_faults(p, small)


# ------------------------------------------------------------------ compaction


def test_compaction_merges_identical_columns():
    # s1 and s2 are both covered by exactly {t2}
    S = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 0]], dtype=bool)
    inst = Instance("c", S, np.ones((3, 1), bool), np.ones(3))
    c = compact(inst)
    assert c.statement_cov.shape[1] == 2
    assert c.statement_weights.tolist() == [1, 2]
    assert c.total_statement_weight == 3
    x = np.array([[0, 1, 0]], dtype=bool)
    assert evaluate_population(x, inst).tolist() == evaluate_population(x, c).tolist()


def test_compaction_identity_on_distinct_columns():
    S = np.eye(3, dtype=bool)
    inst = Instance("c", S, S.copy(), np.ones(3))
    c = compact(inst)
    assert np.array_equal(c.statement_cov, S)
    assert c.statement_weights.tolist() == [1, 1, 1]


def test_compaction_drops_uncovered_but_keeps_denominator():
    S = np.array([[1, 0], [1, 0]], dtype=bool)
    inst = Instance("c", S, np.ones((2, 1), bool), np.ones(2))
    c = compact(inst)
    assert c.statement_cov.shape[1] == 1
    assert c.num_statements == 2
    assert evaluate_population(np.ones((1, 2), bool), c)[0, 1] == 0.5
    assert not c.is_raw
    with pytest.raises(ValueError):
        format_instance(c)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 9), s=st.integers(1, 12), b=st.integers(1, 12))
def test_compaction_lossless_and_idempotent(seed, n, s, b):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n, s, b, density=0.25)
    c = compact(inst)
    assert compact(c) == c
    X = rng.random((200, n)) < 0.5
    assert np.array_equal(evaluate_population(X, inst), evaluate_population(X, c))


# ------------------------------------------------------------------ generator


def test_generator_deterministic():
    a = generate_synthetic(20, 40, 10, seed=1)
    b = generate_synthetic(20, 40, 10, seed=1)
    assert a == b and format_instance(a) == format_instance(b)
    assert generate_synthetic(20, 40, 10, seed=2) != a


def test_block_union_covers_all_block_statements():
    inst = generate_synthetic(10, 20, 5, blocks=[parse_block("0-2:0-9")], seed=4)
    assert inst.statement_cov[:3, :10].any(axis=0).all()


def test_every_test_covers_something():
    inst = generate_synthetic(12, 5, 5, seed=7)
    assert (inst.statement_cov.any(axis=1) | inst.branch_cov.any(axis=1)).all()
    assert (inst.cost > 0).all()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(8, 40), k=st.integers(0, 3))
def test_generator_postconditions(seed, n, k):
    blocks = [Block(range(4 * i, 4 * i + 4), range(6 * i, 6 * i + 6), range(2 * i, 2 * i + 2)) for i in range(min(k, n // 4))]
    inst = generate_synthetic(n, 30, 12, blocks=blocks, seed=seed)
    assert (inst.cost > 0).all()
    assert (inst.statement_cov.any(axis=1) | inst.branch_cov.any(axis=1)).all()
    for blk in blocks:
        t = slice(blk.tests.start, blk.tests.stop)
        assert inst.statement_cov[t, blk.statements.start:blk.statements.stop].any(axis=0).all()
        assert inst.branch_cov[t, blk.branches.start:blk.branches.stop].any(axis=0).all()
        if n == 4 * len(blocks):
            continue  # no ordinary tests left, block tests must absorb the free entities
        # block tests only touch their own block
        outside = inst.statement_cov[t].copy()
        outside[:, blk.statements.start:blk.statements.stop] = False
        assert not outside.any()
    assert parse_instance(format_instance(inst)) == Instance(
        "instance", inst.statement_cov, inst.branch_cov, inst.cost, test_ids=inst.test_ids
    )


def test_block_makes_grouped_selection_cheap():
    blk = Block(range(0, 8), range(0, 40), range(0, 16))
    inst = generate_synthetic(100, 1000, 500, blocks=[blk], seed=3)
    ents = slice(0, 40)
    block_cost = inst.cost[:8].sum()
    # every other test that covers the whole block is more expensive than the group
    full = inst.statement_cov[8:, ents].all(axis=1)
    assert full.any()
    assert (inst.cost[8:][full] > block_cost).all()


@pytest.mark.parametrize(
    "spec",
    ["0-2", "a-b:0-3", "3-1:0-3", "0-2:0-9:0-1:5"],
)
def test_bad_block_specs(spec):
    with pytest.raises(ValueError):
        parse_block(spec)


@pytest.mark.parametrize(
    "blocks",
    [
        [Block(range(0, 3), range(0, 5)), Block(range(2, 4), range(6, 9))],  # overlapping tests
        [Block(range(0, 3), range(0, 5)), Block(range(3, 6), range(4, 9))],  # overlapping statements
        [Block(range(0, 30), range(0, 40))],  # more tests than the suite
        [Block(range(0, 3), range(0, 2))],  # fewer entities than tests
    ],
)
def test_invalid_block_structures(blocks):
    with pytest.raises(ValueError):
        generate_synthetic(10, 20, 5, blocks=blocks)


def test_generated_faults():
    inst = generate_synthetic(30, 60, 20, seed=5)
    fm = generate_faults(inst, 12, max_detectors=3, seed=5)
    counts = fm.detects.sum(axis=0)
    assert fm.num_faults == 12 and ((counts >= 1) & (counts <= 3)).all()
    assert fm == generate_faults(inst, 12, max_detectors=3, seed=5)


def test_brute_objectives_on_raw_file(worked_instance):
    got = evaluate_population(np.array([[1, 1, 0]], bool), worked_instance)[0]
    assert got == pytest.approx(brute_objectives(worked_instance, [1, 1, 0]), abs=1e-15)


def test_write_requires_raw(tmp_path):
    inst = parse_instance(THREE_TESTS)
    write_instance(inst, tmp_path / "a.txt")
    assert (tmp_path / "a.txt").read_text() == THREE_TESTS
