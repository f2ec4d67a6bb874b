"""Black-box session semantics: channel application, sampling, query billing."""

import io
import json

import numpy as np
import pytest

from causalcomb.combs import CombSpec, build_choi, gen_signaling_comb, gen_unitary_comb
from causalcomb.oracle import (
    OracleConfig,
    OracleSession,
    PrepRecipe,
    swap_test_estimate,
    swap_test_sample_size,
)
from causalcomb.povm import pair_probs, sic_qubit
from causalcomb.tensors import (
    Op,
    WireSpace,
    haar_unitary,
    random_density,
    random_pure_state,
    reorder,
)


def _unitary_channel_spec(u):
    return CombSpec(1, u.shape[0], 1, np.ones(1), (u,), (1,), (1,))


def test_sample_size_formula():
    assert swap_test_sample_size(0.1, 0.05) == 738
    assert swap_test_sample_size(1.0, 0.5) == 3
    with pytest.raises(ValueError):
        swap_test_sample_size(0.0, 0.5)


def test_swap_test_estimate_concentrates():
    rng = np.random.default_rng(0)
    misses = 0
    for _ in range(300):
        a = random_pure_state(2, rng)
        b = random_pure_state(2, rng)
        ov = abs(np.vdot(a, b)) ** 2
        misses += abs(swap_test_estimate(ov, 0.1, 0.05, rng) - ov) > 0.1
    assert misses / 300 <= 0.05 + 2 * np.sqrt(0.05 * 0.95 / 300)


def test_apply_reproduces_unitary_channel():
    """Feeding rho through the session equals conjugation by the tooth unitary."""
    rng = np.random.default_rng(1)
    u = haar_unitary(2, rng)
    session = OracleSession(_unitary_channel_spec(u))
    rho = random_density(2, rng=rng)
    out = session.apply(Op(WireSpace(("A1",), (2,)), rho))
    np.testing.assert_allclose(out.matrix, u @ rho @ u.conj().T, atol=1e-12)
    assert session.query_count == 1  # exact mode still counts apply calls


def test_apply_with_entangled_ancilla():
    rng = np.random.default_rng(2)
    u = haar_unitary(2, rng)
    session = OracleSession(_unitary_channel_spec(u))
    rho = random_density(4, rng=rng)
    joint = Op(WireSpace(("A1", "R"), (2, 2)), rho)
    out = session.apply(joint)
    big = np.kron(u, np.eye(2))
    np.testing.assert_allclose(
        reorder(out, ["B1", "R"]).matrix, big @ rho @ big.conj().T, atol=1e-12
    )


def test_session_labels_and_dims():
    rng = np.random.default_rng(3)
    session = OracleSession(gen_unitary_comb(3, 2, 2, rng))
    assert session.n_teeth == 3
    assert session.input_labels == ("A1", "A2", "A3")
    assert session.output_labels == ("B1", "B2", "B3")
    assert session.dim_of("A2") == 2


def test_outcome_distribution_matches_direct_born():
    rng = np.random.default_rng(4)
    spec = gen_unitary_comb(1, 2, 2, rng)
    session = OracleSession(spec)
    sic = sic_qubit()
    table = session.outcome_distribution(sic)
    choi = reorder(build_choi(spec), ["A1", "B1"])
    np.testing.assert_allclose(table, pair_probs(sic, sic, choi.matrix), atol=1e-12)
    assert table.sum() == pytest.approx(1.0)


def test_sampling_agrees_with_exact_table():
    rng = np.random.default_rng(5)
    spec = gen_unitary_comb(2, 2, 2, rng)
    sic = sic_qubit()
    exact = OracleSession(spec).outcome_distribution(sic)
    session = OracleSession(spec, OracleConfig(mode="sampled", seed=6))
    shots = 200_000
    counts = session.sample_batch(shots, sic)
    assert counts.shape == exact.shape
    assert counts.sum() == shots
    tv = 0.5 * np.abs(counts / shots - exact).sum()
    assert tv < 0.02
    assert session.query_count == shots


def test_single_shot_requires_sampled_mode():
    rng = np.random.default_rng(7)
    session = OracleSession(gen_unitary_comb(1, 2, 1, rng))
    with pytest.raises(ValueError):
        session.sample_prepare_measure([0], sic_qubit())


def test_single_shots_match_batch_statistics():
    rng = np.random.default_rng(8)
    spec = gen_unitary_comb(1, 2, 1, rng)
    sic = sic_qubit()
    session = OracleSession(spec, OracleConfig(mode="sampled", seed=9))
    weights = np.array([np.trace(e).real / 2 for e in sic.elements])
    draw = np.random.default_rng(10)
    counts = np.zeros((4, 4))
    shots = 20_000
    for _ in range(shots):
        a = draw.choice(4, p=weights)
        (b,) = session.sample_prepare_measure([a], sic)
        counts[a, b] += 1
    exact = OracleSession(spec).outcome_distribution(sic)
    tv = 0.5 * np.abs(counts / shots - exact).sum()
    assert tv < 0.03
    assert session.query_count == shots


def test_prepare_reduces_to_fed_channel_output():
    """Feed psi at A1, discard nothing else: result is the comb acting on psi."""
    rng = np.random.default_rng(11)
    u = haar_unitary(2, rng)
    session = OracleSession(_unitary_channel_spec(u))
    psi = random_pure_state(2, rng)
    proj = np.outer(psi, psi.conj())
    recipe = PrepRecipe("A1", proj, discard_label=None)
    out = session._prepare(recipe)
    np.testing.assert_allclose(out.matrix, u @ proj @ u.conj().T, atol=1e-12)


def test_overlap_estimate_exact_equals_true_overlap():
    spec = gen_signaling_comb()
    session = OracleSession(spec)
    zero = np.diag([1.0, 0.0]).astype(complex)
    one = np.diag([0.0, 1.0]).astype(complex)
    r0 = PrepRecipe("A1", zero, discard_label="B1")
    r1 = PrepRecipe("A1", one, discard_label="B1")
    same = session.overlap_estimate(r0, r0, eps=0.1, kappa=0.05)
    cross = session.overlap_estimate(r0, r1, eps=0.1, kappa=0.05)
    # residual after feeding |b> is I/2 (x) |b><b| since B2 copies A1:
    # self-overlap is the purity 1/2, cross-overlap vanishes
    assert same == pytest.approx(0.5, abs=1e-9)
    assert cross == pytest.approx(0.0, abs=1e-9)


def test_overlap_estimate_sampled_within_eps():
    spec = gen_signaling_comb()
    session = OracleSession(spec, OracleConfig(mode="sampled", seed=12))
    zero = np.diag([1.0, 0.0]).astype(complex)
    mixed = np.eye(2, dtype=complex) / 2
    r0 = PrepRecipe("A1", zero, discard_label="B1")
    rm = PrepRecipe("A1", mixed, discard_label="B1")
    est = session.overlap_estimate(r0, rm, eps=0.05, kappa=1e-6)
    # Tr[(I/2 (x) |0><0|) . I/4] = 1/4
    assert abs(est - 0.25) <= 0.05
    assert session.query_count == 2 * swap_test_sample_size(0.05, 1e-6)


def test_query_policies():
    """Exact mode bills nothing by default; the theoretical policy bills plans."""
    spec = gen_signaling_comb()
    zero = np.diag([1.0, 0.0]).astype(complex)
    r0 = PrepRecipe("A1", zero, discard_label="B1")

    actual = OracleSession(spec)
    actual.overlap_estimate(r0, r0, eps=0.1, kappa=0.05)
    assert actual.query_count == 0

    theo = OracleSession(spec, OracleConfig(query_policy="theoretical"))
    theo.overlap_estimate(r0, r0, eps=0.1, kappa=0.05)
    assert theo.query_count == 2 * 738


def test_query_log_records_jsonl():
    spec = gen_signaling_comb()
    buf = io.StringIO()
    session = OracleSession(
        spec, OracleConfig(mode="sampled", seed=13, query_log=buf, trial=3)
    )
    session.sample_batch(100, sic_qubit())
    records = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert records[-1]["total"] == session.query_count == 100
    assert records[-1]["trial"] == 3
    assert records[-1]["op"] == "sample_batch"


def test_reduce_shares_meter_and_matches_traced_choi():
    rng = np.random.default_rng(14)
    spec = gen_unitary_comb(2, 2, 2, rng)
    session = OracleSession(spec, OracleConfig(mode="sampled", seed=15))
    last_in, last_out = spec.true_order[-1]
    child = session.reduce(last_in, last_out)
    assert child.n_teeth == 1
    child.sample_batch(50, sic_qubit())
    assert session.query_count == 50  # shared meter
    # the child's statistics agree with the explicitly reduced comb
    from causalcomb.combs import trace_out_tooth

    want = trace_out_tooth(build_choi(spec), last_in, last_out)
    got = child.outcome_distribution(sic_qubit())
    np.testing.assert_allclose(
        got,
        OracleSession._from_choi(want, session)._joint_table(sic_qubit()),
        atol=1e-12,
    )


def test_sampled_mode_requires_seed():
    with pytest.raises(ValueError):
        OracleConfig(mode="sampled")


def test_dim_cap_refuses_monster_builds():
    rng = np.random.default_rng(16)
    spec = gen_unitary_comb(4, 2, 4, rng)
    with pytest.raises(ValueError, match="cap"):
        OracleSession(spec, OracleConfig(dim_cap=16))
