import math

import numpy as np
import pytest

from dkwlab.classes import (class_sup_ks, dense_directions,
                            pointwise_class_deviation, project, project_block,
                            read_directions, sparse_directions,
                            write_directions)
from dkwlab.ecdf import build_ecdf, ks_sup_deviation
from dkwlab.laws import rademacher_law, std_normal_law
from dkwlab.models import ConfigurationError, LazySample, VectorModel, sample

SN = std_normal_law()


def unit_rows(rng, n, d):
    mat = rng.standard_normal((n, d))
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def test_direction_set_validation():
    with pytest.raises(ValueError):
        dense_directions(np.array([[1.0, 1.0]]))  # not unit
    with pytest.raises(ValueError):
        sparse_directions([1], [0.6], [0.8], d=4)  # k must be >= 2
    with pytest.raises(ValueError):
        sparse_directions([2], [0.9], [0.9], d=4)  # not normalized
    ds = sparse_directions([2, 3], [0.6, 0.6], [0.8, 0.8], d=3)
    assert ds.n == 2 and ds.is_uniform_spiked


def test_projection_e1_is_first_column():
    src = sample(VectorModel("gaussian", 3), 50, 1)
    dirs = dense_directions(np.array([[1.0, 0.0, 0.0]]))
    assert np.allclose(project(src, dirs)[:, 0], src.values[:, 0])


def test_sparse_identity_case_matches_dense():
    src = sample(VectorModel("gaussian", 3), 50, 2)
    sp = sparse_directions([2], [1.0], [0.0], d=3)
    dn = dense_directions(np.array([[1.0, 0.0, 0.0]]))
    assert np.allclose(project(src, sp), project(src, dn), atol=1e-15)


def test_sparse_dense_equivalence_tight():
    rng = np.random.default_rng(7)
    src = sample(VectorModel("gaussian", 12), 300, 3)
    ks = rng.integers(2, 13, size=20)
    bs = rng.uniform(-0.9, 0.9, size=20)
    as_ = np.sqrt(1 - bs**2)
    sp = sparse_directions(ks, as_, bs, d=12)
    dn = dense_directions(sp.densify())
    assert np.abs(project(src, sp) - project(src, dn)).max() <= 1e-12
    rep_s = class_sup_ks(src, sp, SN)
    rep_d = class_sup_ks(src, dn, SN)
    assert abs(rep_s.sup_over_class - rep_d.sup_over_class) <= 1e-12
    assert rep_s.argmax_direction == rep_d.argmax_direction


def test_dimension_mismatch_raises():
    src = sample(VectorModel("gaussian", 3), 10, 1)
    with pytest.raises(ConfigurationError):
        project(src, dense_directions(np.eye(4)))


def test_class_sup_single_direction_reduces_to_ks():
    src = sample(VectorModel("gaussian", 2), 400, 5)
    dirs = dense_directions(np.array([[0.0, 1.0]]))
    rep = class_sup_ks(src, dirs, SN)
    direct = ks_sup_deviation(build_ecdf(src.values[:, 1]), SN)
    assert rep.sup_over_class == pytest.approx(direct.sup_deviation, abs=1e-15)
    assert rep.winner is not None
    assert rep.winner.argmax_t == pytest.approx(direct.argmax_t)


def test_class_sup_reflection_pair():
    src = sample(VectorModel("gaussian", 2), 300, 6)
    dirs = dense_directions(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    rep = class_sup_ks(src, dirs, SN)
    k1 = ks_sup_deviation(build_ecdf(src.values[:, 0]), SN).sup_deviation
    k2 = ks_sup_deviation(build_ecdf(-src.values[:, 0]), SN).sup_deviation
    assert rep.sup_over_class == pytest.approx(max(k1, k2), abs=1e-12)


def test_class_sup_monotone_under_inclusion():
    rng = np.random.default_rng(11)
    src = sample(VectorModel("gaussian", 6), 500, 7)
    mat = unit_rows(rng, 12, 6)
    small = dense_directions(mat[:5])
    big = dense_directions(mat)
    assert class_sup_ks(src, big, SN).sup_over_class >= \
        class_sup_ks(src, small, SN).sup_over_class - 1e-15


def test_row_permutation_invariance():
    rng = np.random.default_rng(13)
    src = sample(VectorModel("gaussian", 4), 200, 8)
    dirs = dense_directions(unit_rows(rng, 6, 4))
    rep1 = class_sup_ks(src, dirs, SN)
    perm = rng.permutation(200)
    from dkwlab.models import SampleBatch
    src2 = SampleBatch(values=src.values[perm], m=200, seed=0, model=src.model)
    rep2 = class_sup_ks(src2, dirs, SN)
    assert rep1.sup_over_class == pytest.approx(rep2.sup_over_class, abs=1e-15)
    assert rep1.argmax_direction == rep2.argmax_direction


def test_streamed_chunks_match_single_shot():
    rng = np.random.default_rng(17)
    src = sample(VectorModel("gaussian", 5), 256, 9)
    dirs = dense_directions(unit_rows(rng, 33, 5))
    rep1 = class_sup_ks(src, dirs, SN, chunk_elems=256 * 4)
    rep2 = class_sup_ks(src, dirs, SN, chunk_elems=1 << 24)
    assert rep1.sup_over_class == rep2.sup_over_class
    assert rep1.argmax_direction == rep2.argmax_direction


def test_lazy_source_matches_batch():
    model = VectorModel("gaussian", 40)
    batch = sample(model, 64, 21)
    lazy = LazySample(model, 64, 21)
    rng = np.random.default_rng(23)
    dirs = dense_directions(unit_rows(rng, 10, 40))
    r1 = class_sup_ks(batch, dirs, SN)
    r2 = class_sup_ks(lazy, dirs, SN)
    assert r1.sup_over_class == r2.sup_over_class
    sp = sparse_directions(np.arange(2, 12), np.full(10, 0.8),
                           np.full(10, 0.6), d=40)
    p1 = project_block(batch, sp, 0, 10)
    p2 = project_block(lazy, sp, 0, 10)
    assert np.array_equal(p1, p2)


def test_sup_band_for_random_class():
    # 64 random directions at m = 1e4: the class sup sits above the typical
    # single-direction level but within a union-bound window of it
    rng = np.random.default_rng(29)
    d, n, m, trials = 16, 64, 10**4, 100
    dirs = dense_directions(unit_rows(rng, n, d))
    model = VectorModel("gaussian", d)
    singles, sups = [], []
    for t in range(trials):
        src = sample(model, m, 1000 + t)
        proj0 = src.values @ dirs.dense[0]
        singles.append(ks_sup_deviation(build_ecdf(proj0), SN).sup_deviation)
        sups.append(class_sup_ks(src, dirs, SN).sup_over_class)
    med_single = float(np.median(singles))
    band_hi = med_single + 3 * math.sqrt(math.log(64) / (2 * m))
    sups = np.array(sups)
    assert np.all(sups >= med_single * 0.5)
    assert np.all(sups <= band_hi)
    assert np.median(sups) >= med_single


def test_per_direction_reports_consistent():
    rng = np.random.default_rng(43)
    src = sample(VectorModel("gaussian", 5), 150, 44)
    dirs = dense_directions(unit_rows(rng, 7, 5))
    rep = class_sup_ks(src, dirs, SN, keep_per_direction=True)
    assert rep.per_direction is not None and len(rep.per_direction) == 7
    sups = [r.sup_deviation for r in rep.per_direction]
    assert rep.sup_over_class == max(sups)
    assert rep.argmax_direction == int(np.argmax(sups))


def test_pointwise_class_deviation_basics():
    src = sample(VectorModel("gaussian", 3), 100, 31)
    dirs = dense_directions(np.eye(3))
    dev, arg = pointwise_class_deviation(src, dirs, SN, -50.0)
    assert dev == pytest.approx(float(SN.cdf(-50.0)), abs=1e-12)
    one = dense_directions(np.array([[1.0, 0.0, 0.0]]))
    dev1, _ = pointwise_class_deviation(src, one, SN, 0.3)
    fm = np.mean(src.values[:, 0] <= 0.3)
    assert dev1 == pytest.approx(abs(fm - SN.cdf(0.3)), abs=1e-15)


def test_direction_file_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(37)
    dn = dense_directions(unit_rows(rng, 5, 3))
    p = tmp_path / "dirs.txt"
    write_directions(dn, str(p))
    back = read_directions(str(p))
    assert np.array_equal(back.dense, dn.dense)
    sp = sparse_directions([2, 4], [0.6, 1 / math.sqrt(2)],
                           [0.8, 1 / math.sqrt(2)], d=4)
    write_directions(sp, str(p))
    back = read_directions(str(p), d=4)
    assert np.array_equal(back.sparse_a, sp.sparse_a)
    assert np.array_equal(back.sparse_b, sp.sparse_b)
    assert np.array_equal(back.sparse_k, sp.sparse_k)


def test_oracle_reference_path():
    model = VectorModel(kind="product", d=3, coord=rademacher_law())
    rng = np.random.default_rng(41)
    dirs = dense_directions(unit_rows(rng, 2, 3))
    from dkwlab.models import oracle_projection_law
    refs = [oracle_projection_law(model, dirs.dense[j], 10**5, seed=j)
            for j in range(2)]
    src = sample(model, 200, 43)
    rep = class_sup_ks(src, dirs, refs)
    assert rep.ref_kind == "oracle"
    assert 0.0 <= rep.sup_over_class <= 1.0
