import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from idiomdetect.corpus import Label, Sample, SplitKind
from idiomdetect.embedding import (
    EmbeddingTable,
    HashedNgramEncoder,
    TableProvider,
    compose_text,
    load_table,
    write_table,
)
from idiomdetect.errors import EmbeddingLookupError, FormatError

from conftest import make_sample


class TestTableFormat:
    def test_load_two_rows(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text(
            "#dim\t4\n#meta\t{}\ndev\ta\t1\t2\t3\t4\ndev\tb\t0.5\t-1\t0\t2.25\n",
            encoding="utf-8",
        )
        table = load_table(path)
        assert table.dim == 4
        assert len(table.entries) == 2
        assert table.entries[("dev", "a")].tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_short_row_names_the_id(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("#dim\t4\n#meta\t{}\ndev\tbad-row\t1\t2\t3\n", encoding="utf-8")
        with pytest.raises(FormatError, match="bad-row"):
            load_table(path)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text(
            "#dim\t2\n#meta\t{}\ndev\ta\t1\t2\ndev\ta\t3\t4\n", encoding="utf-8"
        )
        with pytest.raises(FormatError, match="duplicate"):
            load_table(path)

    def test_header_required(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("dev\ta\t1\t2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_table(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("#dim\t2\n#meta\t{}\ndev\ta\t1\tx\n", encoding="utf-8")
        with pytest.raises(FormatError, match="'a'"):
            load_table(path)

    @settings(max_examples=40)
    @given(
        st.lists(
            st.tuples(
                st.text(alphabet="abcdef", min_size=1, max_size=6),
                st.lists(
                    st.floats(width=32, allow_nan=False, allow_infinity=False),
                    min_size=3,
                    max_size=3,
                ),
            ),
            max_size=5,
            unique_by=lambda row: row[0],
        )
    )
    def test_write_load_roundtrip_bit_identical(self, tmp_path_factory, rows):
        table = EmbeddingTable(dim=3, meta={"model": "test", "pooling": "mean"})
        for sample_id, values in rows:
            table.add("dev", sample_id, np.array(values, dtype=np.float32))
        base = tmp_path_factory.mktemp("tables")
        p1, p2 = base / "a.tsv", base / "b.tsv"
        write_table(table, p1)
        reloaded = load_table(p1)
        write_table(reloaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        for key, vector in table.entries.items():
            assert np.array_equal(reloaded.entries[key], vector)
        assert reloaded.meta == table.meta


class TestTableProvider:
    def test_lookup_returns_stored_vector(self):
        table = EmbeddingTable(dim=2)
        table.add("one_shot_train", "a", np.array([1.5, -2.0], dtype=np.float32))
        provider = TableProvider(table)
        sample = make_sample("a")
        vec = provider.embed(sample)
        assert vec.dtype == np.float64
        assert vec.tolist() == [1.5, -2.0]

    def test_missing_key_carries_split_and_id(self):
        provider = TableProvider(EmbeddingTable(dim=2))
        sample = make_sample("ghost", split=SplitKind.DEV)
        with pytest.raises(EmbeddingLookupError) as err:
            provider.embed(sample)
        assert err.value.split == "dev"
        assert err.value.sample_id == "ghost"


def oracle_encode(text: str, dim: int, sizes, seed: int, normalize: bool) -> np.ndarray:
    """Independent enumeration: collect all n-grams first, then hash each."""
    key = seed.to_bytes(8, "little")
    ngrams: list[str] = []
    for n in sorted(set(sizes)):
        ngrams.extend(text[i : i + n] for i in range(len(text) - n + 1))
    out = np.zeros(dim)
    for g in ngrams:
        h = int.from_bytes(
            hashlib.blake2b(g.encode("utf-8"), digest_size=8, key=key).digest(), "big"
        )
        out[h % dim] += 1.0 if h & (1 << 63) else -1.0
    if normalize and np.linalg.norm(out) > 0:
        out = out / np.linalg.norm(out)
    return out


class TestHashedNgramEncoder:
    def test_empty_text_is_zero_vector(self):
        enc = HashedNgramEncoder(dim=16, normalize=False)
        assert np.array_equal(enc.encode(""), np.zeros(16))
        # normalization skipped for the zero vector
        assert np.array_equal(HashedNgramEncoder(dim=16).encode(""), np.zeros(16))

    def test_unit_norm_when_normalized(self):
        enc = HashedNgramEncoder(dim=64)
        v = enc.encode("kick the bucket")
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9

    def test_matches_enumeration_oracle(self):
        enc = HashedNgramEncoder(dim=32, ngram_sizes=(2, 3), seed=7, normalize=True)
        for text in ["salt of the earth", "pão de açúcar", "ab", "a"]:
            expected = oracle_encode(text, 32, (2, 3), 7, True)
            assert np.array_equal(enc.encode(text), expected)

    def test_seed_changes_vector(self):
        text = "under the weather"
        a = HashedNgramEncoder(dim=64, seed=0).encode(text)
        b = HashedNgramEncoder(dim=64, seed=1).encode(text)
        assert not np.array_equal(a, b)

    @settings(max_examples=40)
    @given(st.text(alphabet="abcd éñ", max_size=20))
    def test_purity(self, text):
        enc = HashedNgramEncoder(dim=32)
        assert np.array_equal(enc.encode(text), enc.encode(text))

    def test_embed_ignores_identity_fields(self):
        enc = HashedNgramEncoder(dim=64)
        a = make_sample("a", language="EN", target="same words", prev="x", nxt="y")
        b = make_sample("zzz", mwe="other mwe", language="PT", target="same words",
                        prev="other", nxt="ctx", label=Label.LITERAL, split=SplitKind.DEV)
        assert np.array_equal(enc.embed(a), enc.embed(b))

    def test_context_mode_uses_neighbor_sentences(self):
        enc = HashedNgramEncoder(dim=64, context="with-context")
        a = make_sample("a", target="same words", prev="before", nxt="after")
        b = make_sample("b", target="same words", prev="", nxt="")
        assert not np.array_equal(enc.embed(a), enc.embed(b))
        joined = compose_text(a, "with-context")
        assert joined == "before same words after"
        assert np.array_equal(enc.embed(a), enc.encode(joined))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HashedNgramEncoder(dim=0).encode("x")
        with pytest.raises(ValueError):
            HashedNgramEncoder(ngram_sizes=()).encode("x")
        with pytest.raises(ValueError):
            HashedNgramEncoder(ngram_sizes=(0,)).encode("x")
        with pytest.raises(ValueError):
            HashedNgramEncoder(context="everything").fit()

    def test_transform_stacks_rows(self):
        enc = HashedNgramEncoder(dim=16)
        X = enc.transform(["one", "two", "three"])
        assert X.shape == (3, 16)
        assert np.array_equal(X[1], enc.encode("two"))

    def test_sklearn_estimator_protocol(self):
        enc = HashedNgramEncoder(dim=8, seed=3)
        params = enc.get_params()
        assert params["dim"] == 8 and params["seed"] == 3
        cloned = clone(enc)
        assert np.array_equal(cloned.encode("abc"), enc.encode("abc"))
