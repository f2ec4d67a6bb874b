"""Comb construction, the comb-condition checker, and the generator families."""

import numpy as np
import pytest

from causalcomb.combs import (
    CombSpec,
    RejectionBudgetError,
    build_choi,
    check_comb_condition,
    enumerate_orders,
    gen_fig3_comb,
    gen_memoryless_comb,
    gen_signaling_comb,
    gen_totalorder_comb,
    gen_unitary_comb,
    pairwise_correlation_floor,
    trace_out_tooth,
)
from causalcomb.tensors import (
    Op,
    WireSpace,
    contract_wire,
    correlation_norm,
    partial_trace,
    reorder,
    trace_norm,
)


def test_spec_validation_rejects_nonunitary():
    bad = np.eye(2, dtype=complex)
    bad[0, 0] = 2.0
    with pytest.raises(ValueError):
        CombSpec(1, 2, 1, np.ones(1), (bad,), (1,), (1,))


def test_spec_validation_rejects_bad_permutation():
    u = np.eye(4, dtype=complex)
    with pytest.raises(ValueError):
        CombSpec(2, 2, 1, np.ones(1), (u[:2, :2], u[:2, :2]), (1, 1), (1, 2))


def test_identity_comb_choi_is_bell_pairs():
    """A single identity tooth gives the maximally entangled Choi state."""
    spec = CombSpec(1, 2, 1, np.ones(1), (np.eye(2, dtype=complex),), (1,), (1,))
    choi = build_choi(spec)
    assert choi.labels == ("A1", "B1")
    expect = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            expect[2 * i + i, 2 * j + j] = 0.5
    np.testing.assert_allclose(choi.matrix, expect, atol=1e-12)


def test_choi_is_positive_unit_trace():
    rng = np.random.default_rng(0)
    spec = gen_unitary_comb(3, 2, 2, rng)
    choi = build_choi(spec)
    assert np.trace(choi.matrix) == pytest.approx(1.0)
    assert np.linalg.eigvalsh(choi.matrix).min() > -1e-12
    assert choi.labels == ("A1", "A2", "A3", "B1", "B2", "B3")


def test_choi_input_marginal_is_maximally_mixed():
    """Tracing out all outputs must leave I/d^n regardless of the teeth."""
    rng = np.random.default_rng(1)
    spec = gen_unitary_comb(2, 2, 4, rng)
    choi = build_choi(spec)
    marg = partial_trace(choi, ["A1", "A2"])
    np.testing.assert_allclose(marg.matrix, np.eye(4) / 4, atol=1e-12)


def test_true_order_passes_checker():
    rng = np.random.default_rng(2)
    for n, dm in [(2, 1), (2, 2), (3, 2), (4, 4)]:
        spec = gen_unitary_comb(n, 2, dm, rng)
        check = check_comb_condition(build_choi(spec), spec.true_order)
        assert check.ok, (n, dm, check.worst_deviation)
        assert check.worst_deviation < 1e-9


def test_checker_deviation_list_has_one_entry_per_prefix():
    rng = np.random.default_rng(3)
    spec = gen_unitary_comb(3, 2, 2, rng)
    check = check_comb_condition(build_choi(spec), spec.true_order)
    assert len(check.deviations) == 3


def test_signaling_comb_rejects_reversed_order():
    spec = gen_signaling_comb()
    choi = build_choi(spec)
    ok = check_comb_condition(choi, spec.true_order)
    assert ok.ok
    reversed_order = (("A2", "B2"), ("A1", "B1"))
    bad = check_comb_condition(choi, reversed_order)
    assert not bad.ok
    assert bad.worst_deviation == pytest.approx(1.0, abs=1e-9)


def test_signaling_comb_copies_first_input_to_second_output():
    spec = gen_signaling_comb()
    choi = build_choi(spec)
    pair = partial_trace(choi, ["A1", "B2"])
    # classical copy: perfectly correlated in the computational basis
    assert correlation_norm(pair, ["A1"]) == pytest.approx(1.0, abs=1e-9)


def test_signaling_dressing_keeps_the_gap():
    rng = np.random.default_rng(4)
    for _ in range(5):
        spec = gen_signaling_comb(rng)
        choi = build_choi(spec)
        assert check_comb_condition(choi, spec.true_order).ok
        bad = check_comb_condition(choi, (("A2", "B2"), ("A1", "B1")))
        assert bad.worst_deviation >= 0.1


def test_trace_out_tooth_reduces_to_smaller_comb():
    rng = np.random.default_rng(5)
    spec = gen_unitary_comb(3, 2, 2, rng)
    choi = build_choi(spec)
    last_in, last_out = spec.true_order[-1]
    reduced = trace_out_tooth(choi, last_in, last_out)
    assert set(reduced.labels) == set(choi.labels) - {last_in, last_out}
    assert np.trace(reduced.matrix) == pytest.approx(1.0)
    assert check_comb_condition(reduced, spec.true_order[:-1]).ok


def test_removing_nonfinal_tooth_depends_on_fed_state():
    """A tooth is only safely removable when nothing downstream sees it.

    For the signaling comb, wiring the first tooth shut leaves a residual
    that shifts with the state fed into A1 (output 2 carries a copy), so
    the (A1, B1) pair cannot be the temporally last tooth.  The true last
    pair leaves an invariant residual.
    """
    spec = gen_signaling_comb()
    choi = build_choi(spec)

    def residual(in_label, out_label, state):
        fed = contract_wire(choi, in_label, 2.0 * state.T)
        keep = [l for l in fed.labels if l != out_label]
        return partial_trace(fed, keep)

    zero = np.diag([1.0, 0.0]).astype(complex)
    mixed = np.eye(2, dtype=complex) / 2
    wrong = trace_norm(residual("A1", "B1", zero).matrix - residual("A1", "B1", mixed).matrix)
    right = trace_norm(residual("A2", "B2", zero).matrix - residual("A2", "B2", mixed).matrix)
    assert wrong >= 0.5
    assert right < 1e-10


def test_enumerate_orders_counts():
    assert len(enumerate_orders(2)) == 4
    assert len(enumerate_orders(3)) == 36
    orders = enumerate_orders(2)
    assert (("A1", "B1"), ("A2", "B2")) in orders
    assert (("A2", "B1"), ("A1", "B2")) in orders


def test_memoryless_comb_factorizes():
    rng = np.random.default_rng(6)
    spec = gen_memoryless_comb(3, 2, rng)
    assert spec.memory_dim == 1
    choi = build_choi(spec)
    # product structure: every paired marginal is pure and uncorrelated with the rest
    for a, b in spec.true_order:
        pair = partial_trace(choi, [a, b])
        purity = float(np.trace(pair.matrix @ pair.matrix).real)
        assert purity == pytest.approx(1.0, abs=1e-9)


def test_memoryless_constant_tooth_hides_one_output():
    rng = np.random.default_rng(7)
    spec = gen_memoryless_comb(3, 2, rng, constant_tooth=True)
    assert spec.memory_dim == 2
    choi = build_choi(spec)
    floors = []
    for a in spec.input_labels:
        row = [correlation_norm(partial_trace(choi, [a, b]), [a]) for b in spec.output_labels]
        floors.append(max(row))
    # exactly one input (the constant tooth's) is correlated with no output
    assert sum(f < 1e-9 for f in floors) == 1


def test_totalorder_comb_meets_floor():
    rng = np.random.default_rng(8)
    spec = gen_totalorder_comb(2, 2, 2, rng, corr_floor=0.05)
    floor = pairwise_correlation_floor(build_choi(spec), spec)
    assert floor >= 0.05
    assert spec.metadata["achieved_chi_min"] == pytest.approx(floor)
    assert check_comb_condition(build_choi(spec), spec.true_order).ok


def test_totalorder_rejection_budget_error_carries_best():
    rng = np.random.default_rng(9)
    with pytest.raises(RejectionBudgetError) as info:
        gen_totalorder_comb(2, 2, 2, rng, corr_floor=10.0, budget=5)
    assert info.value.best_floor < 10.0
    assert info.value.best_spec is not None


def test_fig3_comb_pairwise_blind_but_ordered():
    spec = gen_fig3_comb()
    choi = build_choi(spec)
    assert check_comb_condition(choi, spec.true_order).ok
    worst = 0.0
    for a in spec.input_labels:
        for b in spec.output_labels:
            worst = max(worst, correlation_norm(partial_trace(choi, [a, b]), [a]))
    assert worst < 1e-10
    # yet the four-wire joint does not factorize over A3
    joint = partial_trace(choi, ["A1", "A2", "A3", "B3"])
    rest = partial_trace(choi, ["A1", "A2", "B3"])
    prod = Op(
        WireSpace(("A1", "A2", "B3", "A3"), (2, 2, 2, 2)),
        np.kron(rest.matrix, np.eye(2) / 2),
    )
    assert trace_norm(joint.matrix - reorder(prod, joint.labels).matrix) >= 0.1


def test_unitary_comb_hidden_perms_are_recorded():
    rng = np.random.default_rng(10)
    spec = gen_unitary_comb(3, 2, 2, rng, input_perm=(2, 3, 1), output_perm=(3, 1, 2))
    assert spec.true_order == (("A2", "B3"), ("A3", "B1"), ("A1", "B2"))
