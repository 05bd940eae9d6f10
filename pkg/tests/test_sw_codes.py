import math

import numpy as np
import pytest

from skaudit.source_core import EnumerationLimitError, ProductSource, bsc_joint, info_stats, random_tuple_joint
from skaudit.sw_codes import (
    CodePair,
    Decoder,
    EncoderMap,
    best_code_search,
    constant_encoder,
    converse_bound,
    converse_terms,
    default_alpha_grid,
    encoder_from_table,
    error_probability,
    exhaustive_best_decoder,
    identity_encoder,
    load_code_manifest,
    map_decoder,
    random_binning,
    repair_decoder,
    save_code_manifest,
    second_order_rate,
    seeded_encoder,
)


def test_random_binning_is_reproducible():
    first = random_binning(8, 16, seed=42)
    second = random_binning(8, 16, seed=42)
    other = random_binning(8, 16, seed=43)
    assert np.array_equal(first.table, second.table)
    assert not np.array_equal(first.table, other.table)
    assert first.table.min() >= 0 and first.table.max() < 16
    assert first.seed == 42


def test_random_binning_spreads_tuples_over_bins():
    sizes = random_binning(12, 8, seed=1).bin_sizes()
    assert sizes.sum() == 4096
    assert sizes.min() > 400 and sizes.max() < 630


def test_random_binning_validates_arguments():
    with pytest.raises(ValueError):
        random_binning(3, 0, seed=0)
    with pytest.raises(ValueError):
        random_binning(0, 2, seed=0)
    with pytest.raises(ValueError):
        random_binning(3, 2, seed=-5)


def test_encoder_table_must_fit_bins():
    with pytest.raises(ValueError):
        encoder_from_table([0, 1, 2, 3], n=2, m=3)
    with pytest.raises(ValueError):
        EncoderMap(n=2, m=2, x_count=4, table=[0, 1, 0])


def test_seeded_encoder_matches_random_binning(bsc01_source):
    source = bsc01_source(5)
    assert np.array_equal(seeded_encoder(source, 7, 3).table, random_binning(5, 7, 3).table)


def test_identity_code_never_errs(bsc01_source):
    source = bsc01_source(3)
    encoder = identity_encoder(3)
    code = CodePair(encoder, map_decoder(source, encoder))
    assert error_probability(source, code).eps == 0.0


@pytest.mark.parametrize("n,expected", [(1, 0.1), (2, 0.19)])
def test_constant_code_decodes_the_side_information(bsc01_source, n, expected):
    source = bsc01_source(n)
    encoder = constant_encoder(n)
    decoder = map_decoder(source, encoder)
    # with one bin the MAP guess is x^n = z^n
    assert np.array_equal(decoder.table[0], np.arange(2 ** n))
    assert error_probability(source, CodePair(encoder, decoder)).eps == pytest.approx(expected, abs=1e-12)


def test_map_decoder_breaks_ties_by_smallest_index(indep2):
    source = ProductSource(base=indep2, n=2)
    encoder = encoder_from_table([1, 0, 1, 0], n=2, m=3)
    decoder = map_decoder(source, encoder)
    assert decoder.table[0].tolist() == [1, 1, 1, 1]
    assert decoder.table[1].tolist() == [0, 0, 0, 0]
    # empty bins decode to index 0
    assert decoder.table[2].tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("n,m,seed", [(1, 2, 0), (1, 1, 0), (2, 1, 0), (2, 2, 5)])
def test_map_decoder_is_optimal(bsc01_source, n, m, seed):
    source = bsc01_source(n)
    encoder = random_binning(n, m, seed)
    map_eps = error_probability(source, CodePair(encoder, map_decoder(source, encoder))).eps
    assert map_eps == pytest.approx(exhaustive_best_decoder(source, encoder), abs=1e-12)


def test_exhaustive_decoder_refuses_large_cases(bsc01_source):
    with pytest.raises(ValueError):
        exhaustive_best_decoder(bsc01_source(3), random_binning(3, 4, seed=0))


def test_repair_moves_outputs_into_the_bin(bsc01_source):
    source = bsc01_source(2)
    encoder = encoder_from_table([0, 0, 1, 1], n=2, m=2)
    broken = CodePair(encoder, Decoder(n=2, m=2, z_count=4, table=np.zeros((2, 4), dtype=int)))
    assert not broken.is_injective_on_bins()
    repaired = repair_decoder(broken)
    assert repaired.decoder.repaired
    assert repaired.is_injective_on_bins()
    assert repaired.decoder.table[0].tolist() == [0, 0, 0, 0]
    assert repaired.decoder.table[1].tolist() == [2, 2, 2, 2]
    assert error_probability(source, repaired).eps <= error_probability(source, broken).eps + 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_repair_never_increases_error(bsc01_source, seed):
    source = bsc01_source(5)
    rng = np.random.Generator(np.random.PCG64(seed))
    encoder = random_binning(5, 4, seed)
    arbitrary = CodePair(encoder, Decoder(n=5, m=4, z_count=32, table=rng.integers(0, 32, size=(4, 32))))
    repaired = repair_decoder(arbitrary)
    assert repaired.is_injective_on_bins()
    assert error_probability(source, repaired).eps <= error_probability(source, arbitrary).eps + 1e-15


def test_code_pair_rejects_mismatch():
    encoder = random_binning(2, 2, seed=0)
    with pytest.raises(ValueError):
        CodePair(encoder, Decoder(n=2, m=3, z_count=4, table=np.zeros((3, 4), dtype=int)))
    with pytest.raises(ValueError):
        CodePair(encoder, Decoder(n=2, m=2, z_count=4, table=np.full((2, 4), 9)))


def test_monte_carlo_error_agrees_with_exact(bsc01_source):
    source = bsc01_source(6)
    encoder = random_binning(6, 4, seed=2)
    code = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
    exact = error_probability(source, code)
    estimate = error_probability(source, code, mode="mc", seed=5, trials=200_000)
    assert exact.exact and not estimate.exact
    assert estimate.half_width > 0
    assert abs(estimate.eps - exact.eps) <= 2 * estimate.half_width
    with pytest.raises(ValueError):
        error_probability(source, code, mode="approximate")


def test_monte_carlo_interval_covers_rare_errors():
    source = ProductSource(base=bsc_joint(0.01), n=6)
    encoder = random_binning(6, 32, seed=0)
    code = CodePair(encoder, map_decoder(source, encoder))
    exact = error_probability(source, code)
    estimate = error_probability(source, code, mode="mc", seed=0, trials=200)
    assert exact.ci_low == exact.ci_high == exact.eps
    assert 0.0 < exact.eps < 0.05
    # a run with few or no errors still gets an interval of positive width
    assert estimate.half_width > 0
    assert estimate.ci_low <= estimate.eps <= estimate.ci_high
    assert estimate.ci_low <= exact.eps <= estimate.ci_high
    assert abs(estimate.eps - exact.eps) <= estimate.half_width


def test_second_order_rate():
    assert second_order_rate(4, 1, 0.0) == 0.0
    assert second_order_rate(4, 8, 0.25) == pytest.approx((math.log(8) - 1.0) / 2.0)
    with pytest.raises(ValueError):
        second_order_rate(4, 0, 0.25)


def test_converse_bound_single_letter_value(bsc01_source):
    source = bsc01_source(1)
    # W takes -ln 0.9 and -ln 0.1; at alpha = -ln 0.1 the term vanishes
    terms = converse_terms(source, 1, [-math.log(0.9), -math.log(0.1)])
    assert terms[0] == pytest.approx(0.1, abs=1e-12)
    assert terms[1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_converse_bound_is_below_every_code_error(bsc01_source, bsc01, n):
    source = bsc01_source(n)
    grid = default_alpha_grid(source)
    assert len(grid) == 61
    for m in (1, 2, max(1, math.ceil(math.exp(n * info_stats(bsc01).h_cond))), 2 ** n):
        bound = converse_bound(source, m, grid)
        for seed in range(5):
            encoder = random_binning(n, m, seed)
            code = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
            assert error_probability(source, code).eps >= bound - 1e-12


def test_converse_bound_below_the_entropy_rate(bsc01_source, bsc01):
    stats = info_stats(bsc01)
    n = 10
    m = math.ceil(math.exp(n * stats.h_cond - 2 * math.sqrt(n) * stats.sigma))
    source = bsc01_source(n)
    bound = converse_bound(source, m)
    assert bound > 0.5
    _, best = best_code_search(source, m, range(3))
    assert best.eps >= bound - 1e-12


@pytest.mark.parametrize("n", [4, 8, 10])
def test_best_searched_code_respects_the_converse(bsc01_source, bsc01, n):
    source = bsc01_source(n)
    h_cond = info_stats(bsc01).h_cond
    for m in (math.ceil(math.exp(n * h_cond)), math.ceil(math.exp(n * h_cond + math.sqrt(n)))):
        _, best = best_code_search(source, m, range(200))
        assert best.eps >= converse_bound(source, m) - 1e-12


def test_converse_bound_falls_back_to_sampling(bsc01):
    source = ProductSource(base=bsc01, n=12, materialize_threshold=5)
    with pytest.raises(EnumerationLimitError):
        converse_bound(source, 4)
    assert -4.0 <= converse_bound(source, 4, seed=1, trials=2000) <= 1.0


def test_converse_bound_rejects_empty_grid(bsc01_source):
    with pytest.raises(ValueError):
        converse_bound(bsc01_source(2), 2, [])


def test_best_code_search_keeps_lowest_error(bsc01_source):
    source = bsc01_source(4)
    code, estimate = best_code_search(source, 4, range(6))
    for seed in range(6):
        encoder = random_binning(4, 4, seed)
        candidate = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
        assert estimate.eps <= error_probability(source, candidate).eps + 1e-15
    assert code.decoder.repaired


def test_codes_on_tuple_joints():
    joint = random_tuple_joint(4, 3, seed=8)
    encoder = seeded_encoder(joint, 2, seed=1)
    code = repair_decoder(CodePair(encoder, map_decoder(joint, encoder)))
    assert 0.0 <= error_probability(joint, code).eps <= 1.0
    assert code.is_injective_on_bins()


def test_code_manifest_round_trip_for_seeded_code(bsc01_source, tmp_path):
    source = bsc01_source(4)
    encoder = random_binning(4, 3, seed=17)
    code = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
    written = save_code_manifest(code, str(tmp_path / "code.yml"))
    assert written == [str(tmp_path / "code.yml")]
    loaded = load_code_manifest(str(tmp_path / "code.yml"), source)
    assert loaded.encoder.seed == 17
    assert np.array_equal(loaded.decoder.table, code.decoder.table)


def test_code_manifest_stores_explicit_tables(bsc01_source, tmp_path):
    source = bsc01_source(2)
    code = CodePair(encoder_from_table([0, 1, 1, 0], n=2, m=2),
                    map_decoder(source, encoder_from_table([0, 1, 1, 0], n=2, m=2)))
    written = save_code_manifest(code, str(tmp_path / "table.yml"))
    assert len(written) == 2
    loaded = load_code_manifest(str(tmp_path / "table.yml"), source)
    assert loaded.encoder.table.tolist() == [0, 1, 1, 0]
    assert not loaded.decoder.repaired


@pytest.mark.parametrize("repair", [False, True])
def test_code_manifest_keeps_non_map_decoders(bsc01_source, tmp_path, repair):
    source = bsc01_source(3)
    rng = np.random.Generator(np.random.PCG64(4))
    encoder = random_binning(3, 2, seed=9)
    code = CodePair(encoder, Decoder(n=3, m=2, z_count=8, table=rng.integers(0, 8, size=(2, 8))))
    if repair:
        code = repair_decoder(code)
    assert not code.decoder.is_map
    written = save_code_manifest(code, str(tmp_path / "custom.yml"))
    assert written == [str(tmp_path / "custom.yml"), str(tmp_path / "custom_decoder.npy")]
    loaded = load_code_manifest(str(tmp_path / "custom.yml"), source)
    assert np.array_equal(loaded.decoder.table, code.decoder.table)
    assert loaded.decoder.repaired == repair
    assert error_probability(source, loaded).eps == error_probability(source, code).eps

    (tmp_path / "custom_decoder.npy").unlink()
    with pytest.raises(FileNotFoundError):
        load_code_manifest(str(tmp_path / "custom.yml"), source)


def test_repaired_map_decoder_stays_map(bsc01_source):
    source = bsc01_source(4)
    encoder = random_binning(4, 3, seed=17)
    decoder = map_decoder(source, encoder)
    repaired = repair_decoder(CodePair(encoder, decoder))
    assert decoder.is_map and repaired.decoder.is_map
    assert np.array_equal(repaired.decoder.table, decoder.table)


def test_code_manifest_errors(bsc01_source, tmp_path):
    with pytest.raises(FileNotFoundError):
        load_code_manifest(str(tmp_path / "absent.yml"), bsc01_source(2))
    path = tmp_path / "bad.yml"
    path.write_text("n: 2\nm: 2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_code_manifest(str(path), bsc01_source(2))
