import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skaudit.security_metrics import security_report
from skaudit.source_core import (
    ProductSource,
    TupleJoint,
    bsc_joint,
    construct_joint,
    det_joint,
    indep_joint,
    info_stats,
    random_tuple_joint,
)
from skaudit.sw_codes import constant_encoder, identity_encoder, random_binning
from skaudit.theory_bounds import (
    BERRY_ESSEEN_C1,
    clt_tail_check,
    delta_brute,
    delta_exact,
    fit_root_n_slope,
    gaussian,
    lemma2_bound,
    partition_report,
    thm2_lower_bound,
    thm2_proof_chain,
    thm2_quadrature,
    thm4_lower_bound,
)


def test_gaussian_values():
    cdf, density = gaussian(0.0)
    assert cdf == 0.5
    assert density == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert gaussian(math.inf) == (1.0, 0.0)
    assert gaussian(-math.inf) == (0.0, 0.0)
    with pytest.raises(ValueError):
        gaussian(math.nan)


def test_gaussian_floor_at_zero_rate(bsc01):
    sigma = info_stats(bsc01).sigma
    assert thm2_lower_bound(0.0, sigma) == pytest.approx(sigma / math.sqrt(2 * math.pi), rel=1e-12)
    assert thm2_lower_bound(0.0, sigma) == pytest.approx(0.263, abs=5e-4)


@pytest.mark.parametrize("b", [-3.0, -1.0, 0.0, 0.5, 2.0])
def test_gaussian_floor_matches_quadrature(b):
    assert thm2_lower_bound(b, 0.65) == pytest.approx(thm2_quadrature(b, 0.65), abs=1e-10)


def test_gaussian_floor_shape():
    sigma = 0.7
    values = [thm2_lower_bound(b, sigma) for b in np.linspace(-6, 6, 49)]
    assert all(v > 0 for v in values)
    assert all(later > earlier for earlier, later in zip(values, values[1:]))
    assert thm2_lower_bound(-20.0, 1.0) > 0
    # approaches b for large b
    assert thm2_lower_bound(10.0, sigma) == pytest.approx(10.0, abs=1e-12)
    with pytest.raises(ValueError):
        thm2_lower_bound(0.0, 0.0)


@pytest.mark.parametrize("n,expected,best_m", [(1, 0.1, 1), (2, 0.19, 1)])
def test_delta_for_bsc01(bsc01_source, n, expected, best_m):
    result = delta_exact(bsc01_source(n))
    assert result.delta == pytest.approx(expected, abs=1e-12)
    assert result.best_m == best_m
    assert result.delta == pytest.approx(delta_brute(bsc01_source(n)).delta, abs=1e-12)


def test_delta_prefers_two_sets_for_noisy_channel():
    result = delta_exact(ProductSource(base=bsc_joint(0.4), n=1))
    assert result.delta == pytest.approx(0.1, abs=1e-12)
    assert result.best_m == 2
    assert result.curve[1] == pytest.approx(0.4, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_delta_vanishes_for_degenerate_sources(n):
    assert delta_exact(ProductSource(base=indep_joint(2), n=n)).delta <= 1e-12
    assert delta_exact(ProductSource(base=det_joint(2), n=n)).delta <= 1e-12


@settings(max_examples=50, derandomize=True, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 4), st.integers(2, 4))
def test_delta_matches_brute_force(seed, x_count, z_count):
    joint = random_tuple_joint(x_count, z_count, seed)
    exact = delta_exact(joint)
    brute = delta_brute(joint)
    assert exact.delta == pytest.approx(brute.delta, abs=1e-12)
    for m, value in brute.curve.items():
        assert exact.curve[m] == pytest.approx(value, abs=1e-12)


@settings(max_examples=40, derandomize=True, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 5), st.integers(2, 5))
def test_delta_is_invariant_under_relabeling(seed, x_count, z_count):
    joint = random_tuple_joint(x_count, z_count, seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    rows, columns = rng.permutation(x_count), rng.permutation(z_count)
    relabeled = TupleJoint(pmf=construct_joint(joint.joint_matrix[rows][:, columns]))
    exact, moved = delta_exact(joint), delta_exact(relabeled)
    assert moved.delta == pytest.approx(exact.delta, abs=1e-12)
    for m, value in exact.curve.items():
        assert moved.curve[m] == pytest.approx(value, abs=1e-12)


def test_delta_of_a_relabeled_product_source():
    base = construct_joint([[0.4, 0.05, 0.05], [0.1, 0.25, 0.15]])
    swapped = construct_joint(base.probs[::-1][:, [2, 0, 1]])
    for n in (2, 3):
        original = delta_exact(ProductSource(base=base, n=n))
        relabeled = delta_exact(ProductSource(base=swapped, n=n))
        assert relabeled.delta == pytest.approx(original.delta, abs=1e-12)


def test_delta_brute_refuses_large_alphabets(bsc01_source):
    with pytest.raises(ValueError):
        delta_brute(bsc01_source(3))


def test_delta_rejects_bad_family_sizes(bsc01_source):
    with pytest.raises(ValueError):
        delta_exact(bsc01_source(2), m_range=[0, 1])
    with pytest.raises(ValueError):
        delta_exact(bsc01_source(2), m_range=[5])
    assert list(delta_exact(bsc01_source(2), m_range=[2, 3]).curve) == [2, 3]


def test_delta_grows_for_bsc02(bsc02):
    deltas = [delta_exact(ProductSource(base=bsc02, n=n)).delta for n in range(1, 13)]
    assert deltas[0] == pytest.approx(0.2, abs=1e-12)
    assert deltas[-1] > deltas[0]
    assert deltas[-1] > 0.45


@pytest.mark.parametrize("n", range(1, 13))
@pytest.mark.parametrize("b", [0.1, 0.3, 0.5])
def test_certified_floor_never_exceeds_delta(bsc02, n, b):
    source = ProductSource(base=bsc02, n=n)
    delta = delta_exact(source)
    assert thm4_lower_bound(source, b, delta) <= delta.delta + 1e-9


@pytest.mark.parametrize("n", [4, 9, 12])
@pytest.mark.parametrize("b", [0.1, 0.3, 0.5])
@pytest.mark.parametrize("p", [0.1, 0.2])
def test_partition_masses_respect_their_bounds(n, b, p):
    source = ProductSource(base=bsc_joint(p), n=n)
    report = partition_report(source, delta_exact(source).best_m, b)
    assert report.p_c_aplus <= report.bound_exp + 1e-12
    assert report.p_aminus_cbar <= report.bound_exp + 1e-12
    assert report.p_a0 <= report.bound_a0 + 1e-12
    assert report.bound_exp == pytest.approx(math.exp(-b * math.sqrt(n)))


def test_partition_of_a_degenerate_source(indep2):
    source = ProductSource(base=indep2, n=3)
    report = partition_report(source, 8, 0.3)
    assert report.p_a0 == pytest.approx(1.0, abs=1e-12)
    assert report.p_c_aplus == 0.0 and report.p_aminus_cbar == 0.0
    assert report.bound_a0 == math.inf
    with pytest.raises(ValueError):
        partition_report(source, 8, 0.0)
    with pytest.raises(ValueError):
        partition_report(source, 9, 0.3)


@pytest.mark.parametrize("n,m,seed", [(2, 2, 0), (4, 3, 1), (6, 4, 2), (8, 13, 3), (8, 256, 4)])
@pytest.mark.parametrize("b", [0.0, 0.3, -0.5])
def test_entropy_bound_and_divergence_chain(bsc01_source, n, m, seed, b):
    source = bsc01_source(n)
    encoder = random_binning(n, m, seed)
    report = lemma2_bound(source, encoder, b)
    assert report.h_sz <= report.lemma2_rhs + 1e-9
    assert 0.0 <= report.tn_mass <= 1.0
    for step in thm2_proof_chain(source, encoder, b):
        assert step.holds(), step


def test_entropy_bound_is_tight_for_the_identity_key(bsc01_source):
    report = lemma2_bound(bsc01_source(3), identity_encoder(3), 100.0)
    assert report.tn_mass == pytest.approx(1.0)
    assert report.lemma2_rhs == pytest.approx(report.h_sz, abs=1e-12)


def test_degenerate_source_uses_positive_part_of_b(indep2):
    source = ProductSource(base=indep2, n=2)
    assert lemma2_bound(source, constant_encoder(2), 0.4).thm2_rhs == 0.4
    assert lemma2_bound(source, constant_encoder(2), -0.4).thm2_rhs == 0.0


@pytest.mark.parametrize("n", [25, 100, 400])
@pytest.mark.parametrize("b", [-1.0, 0.0, 1.0])
def test_gaussian_tail_within_berry_esseen_band(bsc01, n, b):
    check = clt_tail_check(bsc01, n, b, BERRY_ESSEEN_C1)
    assert check.within
    assert 0.0 <= check.exact <= 1.0


def test_gaussian_tail_needs_spread(indep2):
    with pytest.raises(ValueError):
        clt_tail_check(indep2, 10, 0.0)


def test_root_n_slope():
    ns = [1, 4, 9, 16]
    assert fit_root_n_slope(ns, [0.5 * math.sqrt(n) for n in ns]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fit_root_n_slope([1, 2], [1.0])


def test_divergence_grows_like_root_n(bsc01):
    h = info_stats(bsc01).h_cond
    floor = thm2_lower_bound(0.0, info_stats(bsc01).sigma)
    for n in range(4, 13):
        source = ProductSource(base=bsc01, n=n)
        m = math.ceil(math.exp(n * h))
        scaled = []
        for seed in range(20 if n == 12 else 3):
            scaled.append(security_report(source, random_binning(n, m, seed)).root_scaled)
        assert min(scaled) > 0
    assert float(np.median(scaled)) >= 0.5 * floor
