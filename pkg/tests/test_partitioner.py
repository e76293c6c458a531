"""Chunk calculator tests.

The exact sequences below were produced by an independent transcription
of the size formulas (separate script, no shared code) and are frozen
here as the reference behavior.
"""

import math
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlsched.core import InvalidParams, SchemeId, SchemeParams
from dlsched.partitioner import ChunkRange, Partitioner, chunk_sequence

S = SchemeId


def seq(scheme, n, p, **kw):
    return chunk_sequence(scheme, n, p, **kw)


# -- frozen reference sequences -------------------------------------------


def test_static_splits_evenly():
    assert seq(S.STATIC, 100, 4) == [25, 25, 25, 25]
    assert seq(S.STATIC, 10, 4) == [3, 3, 3, 1]
    assert seq(S.STATIC, 5, 1) == [5]


def test_ss_unit_chunks():
    assert seq(S.SS, 5, 2) == [1, 1, 1, 1, 1]
    assert seq(S.SS, 3, 7) == [1, 1, 1]


def test_gss_reference_sequence():
    assert seq(S.GSS, 100, 4) == [25, 19, 14, 11, 8, 6, 5, 3, 3, 2, 1, 1, 1, 1]
    assert seq(S.GSS, 10, 1) == [10]


def test_fac2_reference_sequence():
    assert seq(S.FAC2, 100, 4) == [13, 13, 13, 13, 7, 7, 7, 7, 4, 4, 4, 4, 2, 2]


def test_tss_derived_constants():
    part = Partitioner(S.TSS, 1000, 4)
    assert part.derived["tss_first"] == 125
    assert part.derived["tss_count"] == 16
    assert abs(part.derived["tss_delta"] - 124 / 15) < 1e-12
    small = Partitioner(S.TSS, 100, 4)
    assert small.derived["tss_first"] == 13
    assert small.derived["tss_count"] == 15
    assert abs(small.derived["tss_delta"] - 12 / 14) < 1e-12


def test_tss_reference_sequences():
    assert seq(S.TSS, 100, 4) == [13, 12, 11, 10, 10, 9, 8, 7, 6, 5, 4, 4, 1]
    assert seq(S.TSS, 1000, 4) == [125, 117, 108, 100, 92, 84, 75, 67, 59, 51, 42, 34, 26, 18, 2]


def test_tfss_reference_sequences():
    assert seq(S.TFSS, 100, 4) == [12, 12, 12, 12, 9, 9, 9, 9, 5, 5, 5, 1]
    assert seq(S.TFSS, 1000, 4) == [113, 113, 113, 113, 80, 80, 80, 80, 47, 47, 47, 47, 14, 14, 12]


def test_fiss_derived_constants_and_sequence():
    part = Partitioner(S.FISS, 1000, 4)
    assert part.derived["init_chunk"] == 42
    assert part.derived["bump"] == 14
    assert seq(S.FISS, 1000, 4) == [42] * 4 + [56] * 4 + [70] * 4 + [84, 84, 84, 76]


def test_viss_reference_sequence():
    assert seq(S.VISS, 1000, 4) == [42] * 4 + [63] * 4 + [74] * 4 + [80, 80, 80, 44]


def test_mfsc_reference_sequence():
    part = Partitioner(S.MFSC, 1000, 4)
    assert part.derived["chunk"] == 45
    assert seq(S.MFSC, 1000, 4) == [45] * 22 + [10]


def test_mfsc_single_worker_takes_everything():
    assert seq(S.MFSC, 1000, 1) == [1000]


def test_pls_reference_sequence():
    assert seq(S.PLS, 1000, 4) == [
        125, 125, 125, 125, 125, 94, 71, 53, 40, 30, 22, 17, 12, 9, 7, 5, 4, 3, 2, 2, 1, 1, 1, 1,
    ]


def test_pss_reference_sequence():
    assert seq(S.PSS, 1000, 4) == [
        167, 139, 116, 97, 81, 67, 56, 47, 39, 32, 27, 22, 19, 16, 13, 11, 9, 7, 6, 5,
        4, 4, 3, 3, 2, 2, 1, 1, 1, 1, 1, 1,
    ]


def test_min_chunk_floors_every_request():
    # trace by hand: sizes follow min(remaining, max(5, ceil(R/P)))
    assert seq(S.GSS, 100, 4, min_chunk=5) == [25, 19, 14, 11, 8, 6, 5, 5, 5, 2]
    assert all(c >= 5 for c in seq(S.SS, 40, 4, min_chunk=5)[:-1])
    assert sum(seq(S.SS, 43, 4, min_chunk=5)) == 43


# -- parameter handling ----------------------------------------------------


def test_custom_params_change_sequences():
    base = seq(S.PSS, 1000, 4)
    fast = seq(S.PSS, 1000, 4, params=SchemeParams(pss_factor=3.0))
    assert fast[0] == math.ceil(1000 / (3.0 * 4))
    assert fast != base
    two_stage = seq(S.FISS, 1000, 4, params=SchemeParams(fiss_stages=2))
    assert two_stage[0] == math.ceil(1000 / (4 * 4))


def test_invalid_inputs_rejected():
    with pytest.raises(InvalidParams):
        Partitioner(S.GSS, 0, 4)
    with pytest.raises(InvalidParams):
        Partitioner(S.GSS, 10, 0)
    with pytest.raises(InvalidParams):
        Partitioner(S.GSS, 10, 4, min_chunk=0)
    with pytest.raises(InvalidParams):
        Partitioner(S.FISS, 10, 4, params=SchemeParams(fiss_stages=1))


def test_update_revalidates_and_swaps_params():
    part = Partitioner(S.PSS, 100, 4)
    part.update(SchemeParams(pss_factor=2.0))
    assert part.params.pss_factor == 2.0
    with pytest.raises(InvalidParams):
        part.update(SchemeParams(pss_factor=0.0))
    part.update()  # no-op revalidation


def test_chunkrange_accounting():
    part = Partitioner(S.GSS, 100, 4)
    first = part.next_chunk()
    assert first == ChunkRange(0, 25)
    assert part.issued == 1
    assert part.next_start == 25
    assert part.remaining == 75
    second = part.next_chunk()
    assert second.start == 25


def test_exhaustion_returns_none_forever():
    part = Partitioner(S.STATIC, 10, 4)
    while part.next_chunk() is not None:
        pass
    assert part.next_chunk() is None
    assert part.remaining == 0


# -- concurrency -------------------------------------------------------------


def test_concurrent_draining_is_gap_free():
    part = Partitioner(S.SS, 500, 8)
    taken: list[ChunkRange] = []
    lock = threading.Lock()

    def drain():
        while True:
            c = part.next_chunk()
            if c is None:
                return
            with lock:
                taken.append(c)

    threads = [threading.Thread(target=drain) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    taken.sort(key=lambda c: c.start)
    assert sum(c.size for c in taken) == 500
    pos = 0
    for c in taken:
        assert c.start == pos
        pos += c.size


# -- scheme-shape properties ---------------------------------------------


@settings(max_examples=300, deadline=None)
@given(
    scheme=st.sampled_from(list(SchemeId)),
    n=st.integers(1, 400),
    p=st.integers(1, 32),
    min_chunk=st.integers(1, 16),
)
def test_coverage_property(scheme, n, p, min_chunk):
    sizes = chunk_sequence(scheme, n, p, min_chunk=min_chunk)
    assert sum(sizes) == n
    assert all(c >= 1 for c in sizes)
    assert len(sizes) <= n
    # only the range-exhausting final chunk may dip under the floor
    assert all(c >= min_chunk for c in sizes[:-1])


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 2000), p=st.integers(1, 64))
def test_static_issues_at_most_p_chunks(n, p):
    assert len(chunk_sequence(S.STATIC, n, p)) <= p


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 500), p=st.integers(1, 64))
def test_ss_issues_exactly_n_chunks(n, p):
    assert chunk_sequence(S.SS, n, p) == [1] * n


def test_monotonicity_over_random_pairs():
    rng = random.Random(20260819)
    decreasing = (S.GSS, S.TSS, S.FAC2, S.TFSS)
    increasing = (S.FISS, S.VISS)
    for _ in range(1000):
        n = rng.randint(1, 1500)
        p = rng.randint(1, 48)
        for scheme in decreasing:
            sizes = chunk_sequence(scheme, n, p)
            body = sizes[:-1]
            assert all(a >= b for a, b in zip(body, body[1:])), (scheme, n, p, sizes)
        for scheme in increasing:
            sizes = chunk_sequence(scheme, n, p)
            body = sizes[:-1]
            assert all(a <= b for a, b in zip(body, body[1:])), (scheme, n, p, sizes)


def test_gss_first_chunk_rule_formula():
    for n in (1, 7, 100, 999):
        for p in (1, 3, 16):
            assert chunk_sequence(S.GSS, n, p)[0] == -(-n // p)
