import itertools

import numpy as np
import pytest

from modules.decoding_graph import (
    BoundaryKind,
    CodeFamily,
    CodeParams,
    ErrorConfiguration,
    build_graph,
    extract_syndrome,
    sample_error,
)
from modules.errors import ContractViolation, SizeLimitError
from modules.inner_decoders import (
    Correction,
    DefectSet,
    ExactPairingOracle,
    Growth,
    UnionFindDecoder,
    correction_weight,
    exact_pairing_oracle,
    uf_decode,
)


def graph(family=CodeFamily.REPETITION, d=3, rounds=3, p=0.02):
    return build_graph(CodeParams(family=family, distance=d, rounds=rounds, physical_error_rate=p))


def assert_valid(view, defects, correction):
    """Syndrome of the correction inside the window equals the defect set"""
    g = view.graph
    flips, _ = g.syndrome_of(sorted(correction.edges))
    lo = view.start * g.n_stabilizers
    hi = view.end * g.n_stabilizers
    inside = set((np.flatnonzero(flips[lo:hi]) + lo).tolist())
    assert inside == set(defects)


def random_window_defects(g, view, rng, max_defects=14):
    """Defects of a random error restricted to the window, capped at max_defects"""
    while True:
        err = ErrorConfiguration.from_faults(np.flatnonzero(rng.random(g.num_edges) < 0.03))
        stream = extract_syndrome(g, err)
        ns = g.n_stabilizers
        ids = [v for v in stream.defect_ids().tolist() if view.start * ns <= v < view.end * ns]
        if len(ids) <= max_defects:
            return ids


DECODERS = [UnionFindDecoder(), UnionFindDecoder(Growth.FULL), ExactPairingOracle()]


@pytest.mark.parametrize("decoder", DECODERS, ids=repr)
class TestCommonBehaviour:
    def test_empty_defects(self, decoder):
        g = graph()
        view = g.window_view(0, 3)
        c = decoder.decode(view, DefectSet.of([]))
        assert c.edges == frozenset()
        assert correction_weight(c, g) == 0

    def test_single_edge_between_two_defects(self, decoder):
        g = graph(d=5, rounds=1)
        view = g.window_view(0, 1)
        # qubit 2 sits between stabilizers 1 and 2
        c = decoder.decode(view, DefectSet.of([1, 2]))
        assert c.edges == {2}

    def test_single_defect_next_to_boundary(self, decoder):
        g = graph(d=5, rounds=1)
        view = g.window_view(0, 1)
        c = decoder.decode(view, DefectSet.of([0]))
        assert c.edges == {0}
        assert c.logical_flip == 1

    def test_defect_next_to_rough_time_face(self, decoder):
        g = graph(d=7, rounds=10)
        view = g.window_view(2, 6, BoundaryKind.SMOOTH, BoundaryKind.ROUGH)
        # stabilizer 3 sits 3 hops from either spatial boundary
        v = 5 * g.n_stabilizers + 3
        c = decoder.decode(view, DefectSet.of([v]))
        assert c.edges == {5 * g.faults_per_round + g.n_qubits + 3}

    def test_smooth_time_face_blocks_boundary(self, decoder):
        g = graph(d=7, rounds=10)
        view = g.window_view(2, 6, BoundaryKind.SMOOTH, BoundaryKind.SMOOTH)
        v = 5 * g.n_stabilizers + 3
        c = decoder.decode(view, DefectSet.of([v]))
        assert len(c.edges) == 3
        assert_valid(view, [v], c)

    def test_defect_outside_window(self, decoder):
        g = graph(rounds=6)
        view = g.window_view(0, 3)
        with pytest.raises(ContractViolation):
            decoder.decode(view, DefectSet.of([4 * g.n_stabilizers]))

    @pytest.mark.parametrize("family", list(CodeFamily))
    def test_single_fault_keeps_logical_parity(self, decoder, family):
        if getattr(decoder, "growth", None) == Growth.FULL:
            pytest.skip("full-edge growth does not correct every single fault at d=3")
        g = graph(family, d=3, rounds=3)
        view = g.window_view(0, 3)
        for fault in range(g.num_edges):
            stream = extract_syndrome(g, ErrorConfiguration.from_faults([fault]))
            c = decoder.decode(view, DefectSet.of(stream.defect_ids()))
            assert_valid(view, stream.defect_ids().tolist(), c)
            assert c.logical_flip == stream.logical_frame


@pytest.mark.parametrize("family", list(CodeFamily))
def test_random_windows_valid_and_oracle_no_heavier(family):
    g = graph(family, d=3 if family == CodeFamily.ROTATED_PLANAR else 5, rounds=12)
    rng = np.random.default_rng(2024)
    uf, oracle = UnionFindDecoder(), ExactPairingOracle()
    for trial in range(150):
        start = int(rng.integers(0, 6))
        end = start + int(rng.integers(1, 7))
        bottom = BoundaryKind.ROUGH if rng.random() < 0.5 else BoundaryKind.SMOOTH
        top = BoundaryKind.ROUGH if rng.random() < 0.5 else BoundaryKind.SMOOTH
        view = g.window_view(start, end, bottom, top)
        ids = random_window_defects(g, view, rng)
        cu = uf.decode(view, ids)
        co = oracle.decode(view, ids)
        assert_valid(view, ids, cu)
        assert_valid(view, ids, co)
        assert correction_weight(co, g, unit_weights=True) <= correction_weight(cu, g, unit_weights=True)


def test_oracle_prefers_short_pair_path():
    g = graph(d=5, rounds=4)
    view = g.window_view(0, 4)
    a = g.detector_id(0, 1)
    b = g.detector_id(2, 2)
    c = exact_pairing_oracle(view, DefectSet.of([a, b]))
    # pairing costs 3 hops, sending both to the boundary costs 2 + 2
    assert correction_weight(c, g, unit_weights=True) == 3
    assert_valid(view, [a, b], c)


def _brute_force_pairing(dist, boundary):
    """Minimum pairing cost by enumerating every matching of the defects"""
    k = len(boundary)

    def best(remaining):
        if not remaining:
            return 0
        i, rest = remaining[0], remaining[1:]
        options = [boundary[i] + best(rest)]
        for j in rest:
            options.append(dist[i][j] + best(tuple(x for x in rest if x != j)))
        return min(options)

    return best(tuple(range(k)))


def test_oracle_matches_brute_force_on_repetition_line():
    g = graph(d=9, rounds=1)
    view = g.window_view(0, 1)
    for ids in itertools.combinations(range(g.n_stabilizers), 4):
        dist = [[abs(a - b) for b in ids] for a in ids]
        boundary = [min(s + 1, g.n_stabilizers - s) for s in ids]
        c = exact_pairing_oracle(view, DefectSet.of(ids))
        assert correction_weight(c, g, unit_weights=True) == _brute_force_pairing(dist, boundary)


def test_oracle_size_limit():
    g = graph(d=9, rounds=4)
    view = g.window_view(0, 4)
    with pytest.raises(SizeLimitError):
        ExactPairingOracle(max_defects=4).decode(view, DefectSet.of(range(6)))


def test_uf_is_deterministic():
    g = graph(CodeFamily.ROTATED_PLANAR, d=5, rounds=5, p=0.05)
    view = g.window_view(0, 5)
    stream = extract_syndrome(g, sample_error(g, 0.05, seed=3))
    ids = stream.defect_ids()
    first = uf_decode(view, ids)
    assert all(uf_decode(view, ids) == first for _ in range(3))


def test_correction_weight():
    g = graph(p=0.02)
    assert correction_weight(Correction(), g) == 0
    single = Correction.from_faults(g, [1])
    assert correction_weight(single, g, unit_weights=True) == 1
    assert correction_weight(single, g) == pytest.approx(g.weight)


def test_correction_combine_is_xor():
    g = graph()
    a = Correction.from_faults(g, [0, 1])
    b = Correction.from_faults(g, [1, 2])
    assert a.combine(b).edges == {0, 2}
    assert a.combine(b).logical_flip == 1
