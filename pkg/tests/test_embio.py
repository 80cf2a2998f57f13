import random

import numpy as np
import pytest

from propdet.embio import (
    SeqEmbeddingTable,
    TokenEmbeddingTable,
    hash_embedding,
    read_seq_embeddings,
    read_token_embeddings,
    seq_hash_embedding,
    write_seq_embeddings,
    write_token_embeddings,
)
from propdet.errors import FormatError


class TestTokenSidecar:
    def test_read_single_row(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("#dim=4\n12\t0\t0\t0.1 0.2 -0.3 1\n")
        table = read_token_embeddings(p)
        assert table.dim == 4
        assert np.allclose(table.rows[("12", 0, 0)], [0.1, 0.2, -0.3, 1.0])

    def test_wrong_vector_length(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("#dim=4\n12\t0\t0\t0.1 0.2 -0.3\n")
        with pytest.raises(FormatError, match=":2"):
            read_token_embeddings(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("#dim=2\n12\t0\t0\t0.1 nan\n")
        with pytest.raises(FormatError, match="non-finite"):
            read_token_embeddings(p)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("12\t0\t0\t0.1 0.2\n")
        with pytest.raises(FormatError, match="#dim="):
            read_token_embeddings(p)

    def test_duplicate_key_last_wins_with_warning(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("#dim=1\n12\t0\t0\t1\n12\t0\t0\t2\n")
        with pytest.warns(UserWarning, match="duplicate"):
            table = read_token_embeddings(p)
        assert table.rows[("12", 0, 0)][0] == 2.0

    def test_round_trip_within_tolerance(self, tmp_path):
        rng = np.random.default_rng(4)
        rows = {}
        for a in range(3):
            for f in range(2):
                for t in range(4):
                    rows[(str(a), f, t)] = rng.uniform(-2, 2, 8)
        table = TokenEmbeddingTable(8, rows)
        p = tmp_path / "t.tsv"
        write_token_embeddings(p, table)
        back = read_token_embeddings(p)
        assert back.dim == 8
        assert set(back.rows) == set(rows)
        for key, vec in rows.items():
            assert np.max(np.abs(back.rows[key] - vec)) < 1e-6

    def test_row_order_insensitive(self, tmp_path):
        lines = ["#dim=2", "1\t0\t0\t1 2", "1\t0\t1\t3 4", "2\t0\t0\t5 6"]
        p1 = tmp_path / "a.tsv"
        p2 = tmp_path / "b.tsv"
        p1.write_text("\n".join(lines) + "\n")
        p2.write_text("\n".join([lines[0]] + lines[1:][::-1]) + "\n")
        t1 = read_token_embeddings(p1)
        t2 = read_token_embeddings(p2)
        assert set(t1.rows) == set(t2.rows)
        for key in t1.rows:
            assert np.array_equal(t1.rows[key], t2.rows[key])


class TestSeqSidecar:
    def test_read_rows(self, tmp_path):
        p = tmp_path / "s.tsv"
        p.write_text("#dim=3\n0\t1 2 3\n5\t4 5 6\n")
        table = read_seq_embeddings(p)
        assert table.dim == 3
        assert np.allclose(table.rows[5], [4, 5, 6])

    def test_wrong_length(self, tmp_path):
        p = tmp_path / "s.tsv"
        p.write_text("#dim=3\n0\t1 2\n")
        with pytest.raises(FormatError, match="expected 3 values"):
            read_seq_embeddings(p)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        rows = {i: rng.normal(size=6) for i in range(20)}
        p = tmp_path / "s.tsv"
        write_seq_embeddings(p, SeqEmbeddingTable(6, rows))
        back = read_seq_embeddings(p)
        for key, vec in rows.items():
            assert np.max(np.abs(back.rows[key] - vec)) < 1e-6


class TestHashEmbedding:
    def test_deterministic(self):
        a = hash_embedding("Token", 16, seed=3)
        b = hash_embedding("token", 16, seed=3)
        assert np.array_equal(a, b)

    def test_seed_changes_vectors(self):
        words = [f"word{i}" for i in range(100)]
        same = [
            np.array_equal(hash_embedding(w, 8, 0), hash_embedding(w, 8, 1))
            for w in words
        ]
        assert not all(same)

    def test_range(self):
        rng = random.Random(0)
        for _ in range(50):
            word = "".join(rng.choice("abcxyz") for _ in range(rng.randint(1, 10)))
            vec = hash_embedding(word, 12, seed=rng.randint(0, 5))
            assert np.all(vec >= -1.0) and np.all(vec <= 1.0)

    def test_dim_validated(self):
        with pytest.raises(ValueError):
            hash_embedding("x", 0)

    def test_returned_array_is_private_copy(self):
        a = hash_embedding("x", 4)
        a[0] = 99.0
        assert hash_embedding("x", 4)[0] != 99.0


class TestSeqHashEmbedding:
    def test_duplication_changes_vector(self):
        single = seq_hash_embedding(["war"], 8)
        double = seq_hash_embedding(["war", "war"], 8)
        assert not np.allclose(single, double)

    def test_empty_is_zeros(self):
        assert np.array_equal(seq_hash_embedding([], 5), np.zeros(5))
