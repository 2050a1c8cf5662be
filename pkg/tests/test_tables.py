import numpy as np
import pytest

from polyembed.errors import NumericsError, ParseError, ValidationError
from polyembed.tables import (EmbeddingTables, init_tables, load_embeddings,
                              save_embeddings)


def test_embedding_file_round_trip(tmp_path):
    t = init_tables(3, 2, 4, seed=1)
    t.u[:] = np.random.default_rng(0).normal(0, 1, t.u.shape)
    path = tmp_path / "emb.txt"
    save_embeddings(path, t.u)
    assert path.read_text().splitlines()[0] == "3 2 4"
    assert np.array_equal(load_embeddings(path), t.u)


def test_load_rejects_missing_rows(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 1 2\n0 0 1.0 2.0\n")
    with pytest.raises(ParseError, match="missing"):
        load_embeddings(path)


def test_asymmetric_context_count():
    t = init_tables(3, 2, 4, seed=0, num_context=7)
    assert t.num_target == 3 and t.num_context == 7


def test_check_finite():
    t = init_tables(2, 1, 2, seed=0)
    t.u[0, 0, 0] = np.inf
    with pytest.raises(NumericsError):
        t.check_finite()


def test_shape_validation():
    with pytest.raises(ValidationError):
        EmbeddingTables(u=np.zeros((2, 2, 3)), h=np.zeros((2, 2, 4)))
    with pytest.raises(ValidationError):
        init_tables(0, 1, 1)
