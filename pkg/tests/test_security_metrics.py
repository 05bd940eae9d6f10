import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skaudit.security_metrics import (
    KeyEveJoint,
    REPORT_CSV_FIELDS,
    brute_force_discrimination,
    conditional_entropy,
    ideal_joint,
    key_eve_joint,
    kl_divergence,
    regroup,
    report_row,
    security_report,
    variational_distance,
)
from skaudit.source_core import ProductSource, info_stats, random_tuple_joint
from skaudit.sw_codes import compose_encoder, constant_encoder, identity_encoder, random_binning


def _distribution(seed, size):
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.dirichlet(np.ones(size))


def test_variational_distance_basics():
    p = np.array([0.5, 0.5, 0.0])
    q = np.array([0.0, 0.5, 0.5])
    assert variational_distance(p, p) == 0.0
    assert variational_distance(p, q) == pytest.approx(0.5)
    assert variational_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_distances_reject_mismatched_inputs():
    with pytest.raises(ValueError):
        variational_distance([0.5, 0.5], [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        variational_distance([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        kl_divergence([0.5, 0.5], [0.9, 0.2])


def test_kl_divergence_conventions():
    assert kl_divergence([0.5, 0.5, 0.0], [0.25, 0.25, 0.5]) == pytest.approx(math.log(2))
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 12))
def test_variational_distance_triangle_and_pinsker(seed, size):
    p, q, r = (_distribution(seed + k, size) for k in range(3))
    assert variational_distance(p, r) <= variational_distance(p, q) + variational_distance(q, r) + 1e-12
    assert variational_distance(p, q) <= math.sqrt(kl_divergence(p, q) / 2) + 1e-12
    assert 0.0 <= variational_distance(p, q) <= 1.0


@settings(max_examples=40, derandomize=True, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 10))
def test_metrics_are_invariant_under_relabeling(seed, size):
    p, q = _distribution(seed, size), _distribution(seed + 1, size)
    order = np.random.Generator(np.random.PCG64(seed)).permutation(size)
    assert variational_distance(p[order], q[order]) == pytest.approx(variational_distance(p, q), abs=1e-14)
    assert kl_divergence(p[order], q[order]) == pytest.approx(kl_divergence(p, q), rel=1e-12, abs=1e-14)


def test_key_eve_joint_preserves_eve_marginal(bsc01_source):
    source = bsc01_source(6)
    kj = key_eve_joint(source, random_binning(6, 5, seed=3))
    assert kj.probs.shape == (5, 64)
    assert kj.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(kj.z_marginal, source.z_marginal(), atol=1e-15)


def test_key_eve_joint_rejects_mismatched_encoder(bsc01_source):
    with pytest.raises(ValueError):
        key_eve_joint(bsc01_source(3), random_binning(4, 2, seed=0))


def test_key_eve_joint_validates_its_matrix():
    with pytest.raises(ValueError):
        KeyEveJoint(n=1, m=2, probs=np.array([[0.5, 0.5]]))
    with pytest.raises(ValueError):
        KeyEveJoint(n=1, m=1, probs=np.array([[0.5, 0.4]]))


def test_constant_key_is_perfectly_secret(bsc01_source):
    report = security_report(bsc01_source(3), constant_encoder(3))
    assert report.divergence == 0.0
    assert report.delta_metric == pytest.approx(0.0, abs=1e-15)
    assert report.distinguish_prob == pytest.approx(0.5)


def test_identity_key_leaks_everything_eve_knows(bsc01_source, bsc01):
    h = info_stats(bsc01).h_cond
    report = security_report(bsc01_source(1), identity_encoder(1))
    assert report.h_sz == pytest.approx(h, abs=1e-12)
    assert report.divergence == pytest.approx(math.log(2) - h, abs=1e-12)
    assert report.delta_metric == pytest.approx(0.4, abs=1e-12)
    assert report.distinguish_prob == pytest.approx(0.7, abs=1e-12)
    assert report.second_order_rate == pytest.approx(math.log(2) - h, abs=1e-12)


@pytest.mark.parametrize("n,m,seed", [(2, 2, 0), (4, 3, 1), (6, 8, 2), (8, 16, 3), (8, 256, 4)])
def test_report_identities(bsc01_source, n, m, seed):
    source = bsc01_source(n)
    report = security_report(source, random_binning(n, m, seed))
    assert report.identity_residual < 1e-9
    assert report.pinsker_slack >= -1e-12
    assert report.divergence_floor_slack >= -1e-12
    assert report.normalized == pytest.approx(report.divergence / n)
    assert report.root_scaled == pytest.approx(report.divergence / math.sqrt(n))
    assert report.distinguish_prob == pytest.approx((1 + report.delta_metric) / 2)


@pytest.mark.parametrize("n,m", [(1, 2), (2, 4), (2, 3), (4, 5)])
def test_brute_force_discrimination_equals_half_one_plus_delta(bsc01_source, n, m):
    source = bsc01_source(n)
    encoder = random_binning(n, m, seed=9)
    kj = key_eve_joint(source, encoder)
    report = security_report(source, encoder)
    assert brute_force_discrimination(kj) == pytest.approx(report.distinguish_prob, abs=1e-12)


def test_conditional_entropy_and_ideal_joint():
    kj = KeyEveJoint(n=1, m=2, probs=np.array([[0.25, 0.5], [0.25, 0.0]]))
    assert conditional_entropy(kj) == pytest.approx(0.5 * math.log(2), abs=1e-14)
    assert np.allclose(ideal_joint(kj), [[0.25, 0.25], [0.25, 0.25]])


def test_post_processing_the_key_is_a_quotient(bsc01_source):
    source = bsc01_source(5)
    encoder = random_binning(5, 6, seed=4)
    g_table = np.array([0, 1, 2, 0, 1, 2])
    composed = key_eve_joint(source, compose_encoder(encoder, g_table, 3))
    quotient = regroup(key_eve_joint(source, encoder), g_table, 3)
    assert np.allclose(composed.probs, quotient.probs, atol=1e-15)
    # processing the key cannot increase the divergence
    assert security_report(source, compose_encoder(encoder, g_table, 3)).divergence <= \
        security_report(source, encoder).divergence + 1e-12
    with pytest.raises(ValueError):
        regroup(key_eve_joint(source, encoder), [0, 1], 3)


def test_reports_on_tuple_joints():
    joint = random_tuple_joint(4, 4, seed=2)
    encoder = compose_encoder(identity_encoder(1, x_size=4), [0, 1, 0, 1], 2)
    report = security_report(joint, encoder)
    assert report.identity_residual < 1e-9
    assert report.pinsker_slack >= -1e-12


def test_report_row_uses_fixed_header(bsc01_source):
    report = security_report(bsc01_source(2), random_binning(2, 2, seed=0))
    row = report_row(report, seed=0, eps=0.125)
    assert len(row) == len(REPORT_CSV_FIELDS)
    assert row[:4] == ["2", "2", "0", "0.125"]
    assert float(row[5]) == report.divergence
