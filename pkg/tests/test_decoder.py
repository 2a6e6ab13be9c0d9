import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfflo import decoder as dec
from surfflo import layout as lo
from surfflo.oracle import DenseCode


def all_syndromes(k):
    for bits in itertools.product((1, -1), repeat=k):
        yield np.array(bits)


def min_weight_by_search(lay, s, pauli="X"):
    """Smallest Pauli support reproducing s, by enumerating every qubit subset."""
    synd = dec.syndrome_of_z_error if pauli == "X" else dec.syndrome_of_x_error
    best = None
    for bits in itertools.product((0, 1), repeat=lay.n):
        if np.array_equal(synd(lay, np.array(bits)), s):
            w = sum(bits)
            best = w if best is None else min(best, w)
    return best


def test_trivial_syndrome_gives_empty_correction(lay5):
    k = len(lay5.x_faces)
    for backend in dec.BACKENDS:
        assert dec.mwpm_decode(lay5, np.ones(k, dtype=int), backend).weight == 0
    assert dec.prep_correction(lay5, np.ones(len(lay5.faces), dtype=int)).weight == 0


@pytest.mark.parametrize("backend", dec.BACKENDS)
def test_d3_every_syndrome_is_minimum_weight(lay3, backend):
    for s in all_syndromes(len(lay3.x_faces)):
        corr = dec.mwpm_decode(lay3, s, backend)
        np.testing.assert_array_equal(dec.syndrome_of_z_error(lay3, corr.z_support), s)
        assert corr.weight == min_weight_by_search(lay3, s)


def test_adjacent_defects_share_one_qubit(lay5):
    g = dec.defect_graph(lay5, "X")
    (a, b), u = next(((a, b), u) for (a, b), u in g.edge_qubit.items() if b != g.boundary and a < b)
    s = np.ones(len(lay5.x_faces), dtype=int)
    s[[a, b]] = -1
    corr = dec.mwpm_decode(lay5, s)
    assert np.flatnonzero(corr.z_support).tolist() == [u]


def test_d5_random_syndromes_match_exhaustive(lay5, rng):
    g = dec.defect_graph(lay5, "X")
    k = len(g.faces)
    for _ in range(1000):
        defects = rng.choice(k, rng.integers(0, 7), replace=False)
        s = np.ones(k, dtype=int)
        s[defects] = -1
        want = dec.exhaustive_matching_weight(g, np.flatnonzero(s < 0))
        for backend in dec.BACKENDS:
            corr = dec.mwpm_decode(lay5, s, backend)
            np.testing.assert_array_equal(dec.syndrome_of_z_error(lay5, corr.z_support), s)
            assert corr.weight <= want  # a shortest-path union never exceeds the matching weight
        assert dec.match_defects(g, np.flatnonzero(s < 0))[2] == want


def test_decoder_is_deterministic(lay5, rng):
    s = np.ones(len(lay5.x_faces), dtype=int)
    s[rng.choice(len(s), 4, replace=False)] = -1
    a = dec.mwpm_decode(lay5, s).z_support
    lay5.__dict__.pop("_decoder_cache", None)
    b = dec.mwpm_decode(lay5, s).z_support
    np.testing.assert_array_equal(a, b)


def test_prep_correction_reproduces_every_d3_syndrome(lay3):
    for s in all_syndromes(len(lay3.faces)):
        corr = dec.prep_correction(lay3, s)
        sx, sz = dec.split_syndrome(lay3, s)
        np.testing.assert_array_equal(dec.syndrome_of_z_error(lay3, corr.z_support), sx)
        np.testing.assert_array_equal(dec.syndrome_of_x_error(lay3, corr.x_support), sz)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**40), st.sampled_from(["peel", "mwpm"]))
def test_prep_correction_reproduces_random_syndromes(seed, method):
    lay = lo.build(7)
    rng = np.random.default_rng(seed)
    s = rng.choice([-1, 1], len(lay.faces))
    corr = dec.prep_correction(lay, s, method)
    sx, sz = dec.split_syndrome(lay, s)
    np.testing.assert_array_equal(dec.syndrome_of_z_error(lay, corr.z_support), sx)
    np.testing.assert_array_equal(dec.syndrome_of_x_error(lay, corr.x_support), sz)


def test_single_z_face_defect(lay5):
    s = np.ones(len(lay5.faces), dtype=int)
    f = lay5.z_faces[len(lay5.z_faces) // 2]
    s[f] = -1
    corr = dec.prep_correction(lay5, s)
    g = dec.defect_graph(lay5, "Z")
    assert not corr.z_support.any()
    assert corr.weight == g.boundary_distance(list(lay5.z_faces).index(f))


def test_syndrome_shape_errors(lay3):
    with pytest.raises(dec.SyndromeShapeError):
        dec.mwpm_decode(lay3, np.ones(3))
    with pytest.raises(dec.SyndromeShapeError):
        dec.mwpm_decode(lay3, np.zeros(4))
    with pytest.raises(dec.DecoderError):
        dec.prep_correction(lay3, np.ones(8), "nope")


def test_commutation_sign_examples(lay5):
    assert dec.Correction.from_supports(lay5, None).lambda_x == 1
    z = np.zeros(lay5.n, dtype=bool)
    z[lay5.logical_x_support[1]] = True
    c = dec.Correction.from_supports(lay5, z)
    assert (c.lambda_x, c.lambda_y, c.lambda_z) == (-1, -1, 1)


def test_commutation_signs_match_dense_operators(lay3, rng):
    code = DenseCode(lay3)
    psi = rng.normal(size=code.dim) + 1j * rng.normal(size=code.dim)
    for _ in range(20):
        z, x = rng.random(lay3.n) < 0.4, rng.random(lay3.n) < 0.4
        corr = dec.Correction.from_supports(lay3, z, x)

        def C(v):
            return code.apply_z(code.apply_x(v, np.flatnonzero(x)), np.flatnonzero(z))

        def XL(v):
            return code.apply_x(v, lay3.logical_x_support)

        def ZL(v):
            return code.apply_z(v, lay3.logical_z_support)

        np.testing.assert_allclose(C(XL(psi)), corr.lambda_x * XL(C(psi)), atol=1e-12)
        np.testing.assert_allclose(C(ZL(psi)), corr.lambda_z * ZL(C(psi)), atol=1e-12)


def test_fix_sign(lay5):
    corr = dec.Correction.from_supports(lay5, None)
    same, flipped = dec.fix_sign(lay5, corr, 0.9)
    assert same is corr and not flipped
    tie, flipped = dec.fix_sign(lay5, corr, 0.0)
    assert tie is corr and not flipped
    new, flipped = dec.fix_sign(lay5, corr, -0.9)
    assert flipped
    assert (new.lambda_x, new.lambda_y, new.lambda_z) == (-1, -1, 1)
    assert np.flatnonzero(new.z_support).tolist() == sorted(lay5.logical_z_support)


def test_defect_graph_is_shared_across_threads(lay5):
    from concurrent.futures import ThreadPoolExecutor

    rng = np.random.default_rng(3)
    syns = [np.where(rng.random(len(lay5.x_faces)) < 0.2, -1, 1) for _ in range(200)]
    serial = [dec.mwpm_decode(lay5, s).z_support for s in syns]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(lambda s: dec.mwpm_decode(lay5, s).z_support, syns))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a, b)
