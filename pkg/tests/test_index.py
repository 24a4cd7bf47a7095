"""Exact-cosine vector index: scoring, ordering and the on-disk format."""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from truster.errors import IndexFormatError, ProviderMismatchError
from truster.index import FORMAT_VERSION, MAGIC, IndexEntry, Match, VectorIndex, cosine

from oracles import cosine_reference


def entry(entry_id: str, vector, text: str | None = None) -> IndexEntry:
    return IndexEntry(entry_id=entry_id, vector=tuple(vector), sentence_text=text or entry_id)


def unit(vector) -> tuple[float, ...]:
    arr = np.asarray(vector, dtype=np.float64)
    return tuple(arr / np.linalg.norm(arr))


# --- cosine -------------------------------------------------------------------


def test_cosine_known_values() -> None:
    assert cosine([1.0, 0.0], [1.0, 0.0]) == 1.0
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine([1.0, 0.0], [-1.0, 0.0]) == -1.0
    assert cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(0.7071067811865475, abs=1e-15)
    # scale invariance
    assert cosine([2.0, 0.0], [5.0, 0.0]) == 1.0


def test_cosine_rejects_zero_vector() -> None:
    with pytest.raises(ValueError, match="zero vector"):
        cosine([0.0, 0.0], [1.0, 0.0])


def test_cosine_rejects_dimension_mismatch() -> None:
    with pytest.raises(ValueError, match="dimension mismatch"):
        cosine([1.0, 0.0], [1.0, 0.0, 0.0])


_component = st.floats(-10, 10, allow_subnormal=False)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(_component, min_size=2, max_size=16),
    st.data(),
)
def test_cosine_matches_reference_and_is_symmetric(u: list[float], data) -> None:
    v = data.draw(st.lists(_component, min_size=len(u), max_size=len(u)))
    # tiny components square-underflow to a zero norm; cosine rejects those
    if not any(abs(x) > 1e-3 for x in u) or not any(abs(x) > 1e-3 for x in v):
        return
    ours = cosine(u, v)
    assert abs(ours - cosine_reference(u, v)) < 1e-12
    assert abs(ours - cosine(v, u)) < 1e-15
    assert -1.0 - 1e-12 <= ours <= 1.0 + 1e-12


# --- in-memory behavior ----------------------------------------------------------


def test_index_rejects_bad_dimension() -> None:
    with pytest.raises(ValueError, match="positive"):
        VectorIndex("p", 0)


def test_upsert_and_get_renormalizes() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (3.0, 4.0))])
    got = idx.get("a")
    assert got is not None
    assert got.vector == (0.6, 0.8)
    assert idx.get("missing") is None


def test_upsert_replaces_in_place() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (1.0, 0.0), "old"), entry("b", (0.0, 1.0))])
    idx.upsert([entry("a", (0.0, 1.0), "new")])
    assert len(idx) == 2
    assert idx.entry_ids == ("a", "b")
    got = idx.get("a")
    assert got.sentence_text == "new"
    assert got.vector == (0.0, 1.0)


def test_upsert_rejects_wrong_shape_and_degenerate() -> None:
    idx = VectorIndex("p", 3)
    with pytest.raises(ValueError, match="expects 3"):
        idx.upsert([entry("a", (1.0, 0.0))])
    with pytest.raises(ValueError, match="degenerate"):
        idx.upsert([entry("a", (0.0, 0.0, 0.0))])
    with pytest.raises(ValueError, match="degenerate"):
        idx.upsert([entry("a", (float("inf"), 0.0, 0.0))])


def test_query_filters_sorts_and_breaks_ties_by_id() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert(
        [
            entry("z-low", unit((1.0, 1.0))),  # cos 0.707...
            entry("b-tie", (1.0, 0.0)),  # cos 1.0
            entry("a-tie", (1.0, 0.0)),  # cos 1.0, same score, earlier id
            entry("anti", (-1.0, 0.0)),  # cos -1.0
        ]
    )
    matches = idx.query((2.0, 0.0), t1=0.5)
    assert [m.entry_id for m in matches] == ["a-tie", "b-tie", "z-low"]
    assert matches[0].score == pytest.approx(2.0)  # raw dot with the unnormalized query


def test_query_uses_raw_query_vector() -> None:
    # scores are dot products against stored unit rows; callers pass unit queries
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (1.0, 0.0))])
    (m,) = idx.query((1.0, 0.0), t1=0.9)
    assert m.score == 1.0
    assert m.sentence_text == "a"


def test_query_threshold_excludes_below() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (1.0, 0.0)), entry("b", unit((1.0, 1.0)))])
    assert [m.entry_id for m in idx.query((1.0, 0.0), t1=0.8)] == ["a"]
    assert idx.query((1.0, 0.0), t1=1.01) == []


def test_query_empty_index_is_empty() -> None:
    assert VectorIndex("p", 2).query((1.0, 0.0), t1=0.0) == []


def test_query_rejects_zero_or_misshapen() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (1.0, 0.0))])
    with pytest.raises(ValueError, match="zero vector"):
        idx.query((0.0, 0.0), t1=0.0)
    with pytest.raises(ValueError, match="expects"):
        idx.query((1.0, 0.0, 0.0), t1=0.0)


def test_threshold_boundary_is_inclusive() -> None:
    idx = VectorIndex("p", 2)
    idx.upsert([entry("a", (1.0, 0.0))])
    (m,) = idx.query((1.0, 0.0), t1=1.0)
    assert m.entry_id == "a"


# --- persistence -------------------------------------------------------------------


def small_index() -> VectorIndex:
    idx = VectorIndex("remote:toy:3", 3)
    idx.upsert(
        [
            entry("s0000", unit((0.3, 0.2, 0.1)), "first sentence with é"),
            entry("s0001", unit((0.1, 0.9, 0.4)), 'second "quoted" sentence'),
            entry("s0002", unit((0.7, 0.1, 0.2)), "third 中文 sentence"),
        ]
    )
    return idx


def test_persist_load_bit_exact(tmp_path: Path) -> None:
    idx = small_index()
    path = tmp_path / "x.idx"
    idx.persist(path)
    back = VectorIndex.load(path)
    assert back.provider_id == idx.provider_id
    assert back.dimension == idx.dimension
    assert back.entry_ids == idx.entry_ids
    for eid in idx.entry_ids:
        orig = idx.get(eid)
        loaded = back.get(eid)
        assert loaded.sentence_text == orig.sentence_text
        # bit-exact: struct packs must be identical, not merely close
        assert struct.pack(f"<{len(orig.vector)}d", *loaded.vector) == struct.pack(
            f"<{len(orig.vector)}d", *orig.vector
        )


def test_persist_is_deterministic(tmp_path: Path) -> None:
    idx = small_index()
    idx.persist(tmp_path / "a.idx")
    idx.persist(tmp_path / "b.idx")
    assert (tmp_path / "a.idx").read_bytes() == (tmp_path / "b.idx").read_bytes()
    # and load -> persist reproduces the same bytes
    VectorIndex.load(tmp_path / "a.idx").persist(tmp_path / "c.idx")
    assert (tmp_path / "c.idx").read_bytes() == (tmp_path / "a.idx").read_bytes()


def test_file_layout_starts_with_magic_and_version(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    small_index().persist(path)
    data = path.read_bytes()
    assert data.startswith(MAGIC)
    assert struct.unpack_from("<H", data, len(MAGIC))[0] == FORMAT_VERSION


def test_load_rejects_bad_magic(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    path.write_bytes(b"NOTIDX" + b"\x00" * 32)
    with pytest.raises(IndexFormatError, match="bad magic"):
        VectorIndex.load(path)


def test_load_rejects_unknown_version(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    small_index().persist(path)
    data = bytearray(path.read_bytes())
    struct.pack_into("<H", data, len(MAGIC), 99)
    path.write_bytes(bytes(data))
    with pytest.raises(IndexFormatError, match="version 99"):
        VectorIndex.load(path)


def test_load_rejects_truncation(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    small_index().persist(path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 5])
    with pytest.raises(IndexFormatError, match="truncated"):
        VectorIndex.load(path)


def test_load_rejects_trailing_bytes(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    small_index().persist(path)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(IndexFormatError, match="trailing bytes"):
        VectorIndex.load(path)


def test_load_rejects_garbage_header(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    header = b"not json"
    path.write_bytes(MAGIC + struct.pack("<H", FORMAT_VERSION) + struct.pack("<I", len(header)) + header)
    with pytest.raises(IndexFormatError, match="unreadable header"):
        VectorIndex.load(path)


def test_load_checks_provider(tmp_path: Path) -> None:
    path = tmp_path / "x.idx"
    small_index().persist(path)
    loaded = VectorIndex.load(path, expected_provider_id="remote:toy:3")
    assert len(loaded) == 3
    with pytest.raises(ProviderMismatchError, match="remote:other:3"):
        VectorIndex.load(path, expected_provider_id="remote:other:3")


def test_empty_index_round_trips(tmp_path: Path) -> None:
    idx = VectorIndex("p", 4)
    path = tmp_path / "empty.idx"
    idx.persist(path)
    back = VectorIndex.load(path)
    assert len(back) == 0
    assert back.dimension == 4
    assert back.query((1.0, 0.0, 0.0, 0.0), t1=0.0) == []


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(lambda v: any(abs(x) > 1e-3 for x in v)),
        min_size=1,
        max_size=8,
    )
)
def test_round_trip_preserves_query_results(vectors: list[list[float]]) -> None:
    import tempfile

    idx = VectorIndex("p", 4)
    idx.upsert([entry(f"e{i:03d}", unit(v)) for i, v in enumerate(vectors)])
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "r.idx"
        idx.persist(path)
        back = VectorIndex.load(path)
    q = unit((0.5, 0.5, -0.5, 0.5))
    assert idx.query(q, t1=-1.0) == back.query(q, t1=-1.0)
