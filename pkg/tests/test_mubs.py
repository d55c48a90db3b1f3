import json
import math

import numpy as np
import pytest

from mubspectra.mubs import (
    MubFamily,
    coherence,
    construct_complete_mubs,
    inner,
    load_family,
    save_family,
    verify_unbiased,
)


@pytest.mark.parametrize("n", [2, 3, 5, 7, 9, 11, 13, 25])
def test_complete_family_is_unbiased(n):
    fam = construct_complete_mubs(n)
    assert fam.m == n + 1
    assert fam.n == n
    report = verify_unbiased(fam)
    assert report.passed
    assert report.within_defect <= 1e-10
    assert report.cross_defect <= 1e-10
    assert coherence(fam) == pytest.approx(1 / math.sqrt(n))


@pytest.mark.parametrize(
    "n, message",
    [(6, "not a prime power"), (1, "not a prime power"), (4, "characteristic-2")],
)
def test_construct_rejects(n, message):
    with pytest.raises(ValueError, match=message):
        construct_complete_mubs(n)


def test_construct_respects_field_cap():
    with pytest.raises(ValueError, match="exceeds the cap"):
        construct_complete_mubs(25, max_order=16)


def test_first_basis_is_standard():
    fam = construct_complete_mubs(5)
    assert np.allclose(fam.bases[0], np.eye(5))


def test_inner_is_linear_in_first_argument():
    fam = construct_complete_mubs(3)
    u, v = fam.bases[1, 0], fam.bases[2, 1]
    assert inner(u, u) == pytest.approx(1)
    assert inner(2j * u, v) == pytest.approx(2j * inner(u, v))
    assert inner(u, 2j * v) == pytest.approx(-2j * inner(u, v))


class TestMubFamily:
    def test_pool(self):
        fam = construct_complete_mubs(3)
        assert fam.pool.shape == (12, 3)
        assert fam.pool_size == 12
        assert np.array_equal(fam.pool[4], fam.bases[1, 1])
        assert fam.locate(4) == (1, 1)

    def test_pool_gram(self):
        fam = construct_complete_mubs(3)
        gram = fam.pool_gram
        assert gram.shape == (12, 12)
        assert np.allclose(gram.diagonal(), 1)
        assert np.allclose(gram, gram.conj().T)
        assert gram[0, 3] == pytest.approx(inner(fam.pool[0], fam.pool[3]))

    def test_is_read_only(self):
        fam = construct_complete_mubs(3)
        with pytest.raises(ValueError):
            fam.bases[0, 0, 0] = 2

    def test_subfamily(self):
        fam = construct_complete_mubs(5)
        sub = fam.subfamily(3)
        assert sub.m == 3
        assert np.array_equal(sub.bases, fam.bases[:3])
        with pytest.raises(ValueError, match="Cannot take"):
            fam.subfamily(0)
        with pytest.raises(ValueError, match="Cannot take"):
            fam.subfamily(7)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="Expected an"):
            MubFamily(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="Expected an"):
            MubFamily(np.zeros((2, 3, 2)))

    def test_rejects_too_many_bases(self):
        with pytest.raises(ValueError, match="exceed"):
            MubFamily(np.tile(np.eye(2), (4, 1, 1)))


def test_verify_detects_repeated_basis():
    fam = construct_complete_mubs(5)
    repeated = MubFamily(np.stack([fam.bases[1], fam.bases[1]]))
    report = verify_unbiased(repeated)
    assert not report.passed
    assert report.within_defect <= 1e-10
    assert report.cross_defect == pytest.approx(1 - 1 / math.sqrt(5))


def test_coherence_of_single_basis():
    assert coherence(construct_complete_mubs(3).subfamily(1)) == 0.0


def test_save_load(tmp_path):
    fam = construct_complete_mubs(3)
    path = save_family(fam, tmp_path / "mubs.json")
    loaded = load_family(path)
    assert loaded.m == 4 and loaded.n == 3
    assert np.array_equal(loaded.bases, fam.bases)


TWO_VECTORS = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]


@pytest.mark.parametrize(
    "payload, message",
    [
        ({"n": 2, "m": 1}, "missing"),
        ({"n": 2, "m": 2, "bases": [TWO_VECTORS]}, "holds 1"),
        ({"n": 3, "m": 1, "bases": [TWO_VECTORS]}, "does not"),
    ],
)
def test_load_rejects_malformed(tmp_path, payload, message):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError, match=message):
        load_family(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ValueError, match="Cannot read basis file"):
        load_family(tmp_path / "missing.json")


def test_load_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="Cannot read basis file"):
        load_family(path)


def test_load_non_numeric_entry(tmp_path):
    path = tmp_path / "bad.json"
    vectors = [[["a", 0], [0, 0]], [[0, 0], [1, 0]]]
    path.write_text(json.dumps({"n": 2, "m": 1, "bases": [vectors]}))
    with pytest.raises(ValueError, match="non-numeric"):
        load_family(path)
