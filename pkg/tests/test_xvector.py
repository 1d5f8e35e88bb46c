"""TDNN forward pass, extraction protocol, and binary formats."""
import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechseg.errors import (
    BadMagic,
    CorruptArchive,
    DimMismatch,
    EmptyInput,
    InvalidConfig,
    NonFiniteWeight,
    StreamTooShort,
)
from speechseg.frontend import FeatureMatrix
from speechseg.xvector import (
    AffineLayer,
    ExtractionConfig,
    StatsPool,
    XVector,
    XVectorNet,
    extract_sequence,
    forward_window,
    load_archive,
    load_weights,
    make_test_net,
    save_archive,
    save_weights,
    stats_pool,
)

from reference import ref_forward_xvector, ref_stats_pool, ref_window_spans


def net_to_plain(net):
    """Unpack a net into the plain-array form the reference oracle takes."""
    out = []
    for layer in net.layers:
        if isinstance(layer, StatsPool):
            out.append("pool")
        else:
            out.append(
                dict(
                    kind=layer.kind,
                    offsets=layer.offsets,
                    weight=layer.weight,
                    bias=layer.bias,
                    bn_mean=layer.bn_mean,
                    bn_var=layer.bn_var,
                )
            )
    return out


def tiny_net(seed=0, d_in=6, hidden=8, emb=512):
    """Two frame layers, pool, two segment layers; small enough to read."""
    rng = np.random.default_rng(seed)

    def layer(kind, offsets, d1, d2):
        fan = d1 * len(offsets)
        return AffineLayer(
            kind, offsets, d1, d2,
            weight=rng.standard_normal((d2, fan)).astype(np.float32),
            bias=rng.standard_normal(d2).astype(np.float32),
            bn_mean=rng.standard_normal(d2).astype(np.float32) * 0.1,
            bn_var=rng.uniform(0.5, 1.5, d2).astype(np.float32),
        )

    return XVectorNet(
        (
            layer("frame", (-1, 0, 1), d_in, hidden),
            layer("frame", (-2, 0, 2), hidden, hidden),
            StatsPool(),
            layer("segment", (0,), 2 * hidden, emb),
            layer("segment", (0,), emb, emb),
        )
    )


# -----------------------------------------------------------------------------
# stats pooling
# -----------------------------------------------------------------------------

class TestStatsPool:
    def test_constant_frames(self):
        v = np.array([3.0, -1.0, 0.5])
        out = stats_pool(np.tile(v, (7, 1)))
        np.testing.assert_array_equal(out, np.concatenate([v, np.zeros(3)]))

    def test_two_frames_one_dim(self):
        np.testing.assert_array_equal(
            stats_pool(np.array([[0.0], [2.0]])), [1.0, 1.0]
        )

    def test_matches_two_pass_oracle(self):
        x = np.random.default_rng(0).standard_normal((100, 1500))
        np.testing.assert_allclose(
            stats_pool(x), ref_stats_pool(x), rtol=1e-6, atol=1e-12
        )

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            stats_pool(np.zeros((0, 4)))

    @given(t=st.integers(1, 40), d=st.integers(1, 6), seed=st.integers(0, 999))
    @settings(max_examples=40, deadline=None)
    def test_std_nonnegative_zero_iff_constant(self, t, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((t, d))
        x[:, 0] = 2.5  # one constant column
        out = stats_pool(x)
        std = out[d:]
        assert (std >= 0).all()
        assert std[0] == 0.0
        for j in range(d):
            assert (std[j] == 0.0) == (x[:, j].max() == x[:, j].min())


# -----------------------------------------------------------------------------
# forward pass
# -----------------------------------------------------------------------------

class TestForward:
    def test_deterministic(self):
        net = tiny_net()
        x = np.random.default_rng(1).standard_normal((40, 6))
        assert np.array_equal(forward_window(net, x), forward_window(net, x))

    def test_matches_reference_oracle(self):
        for seed in range(3):
            net = tiny_net(seed)
            x = np.random.default_rng(100 + seed).standard_normal((40, 6))
            got = forward_window(net, x)
            want = ref_forward_xvector(net_to_plain(net), x)
            np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)

    def test_standard_preset_matches_oracle(self):
        net = make_test_net(seed=7)
        x = np.random.default_rng(7).standard_normal((150, 30))
        got = forward_window(net, x)
        want = ref_forward_xvector(net_to_plain(net), x)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)
        assert got.shape == (512,)

    def test_short_input_padded(self):
        net = tiny_net()
        for t in (1, 2, 6):  # receptive field of tiny_net is 7 frames
            x = np.random.default_rng(t).standard_normal((t, 6))
            got = forward_window(net, x)
            want = ref_forward_xvector(net_to_plain(net), x)
            np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)

    def test_empty_and_mismatched_input(self):
        net = tiny_net()
        with pytest.raises(EmptyInput):
            forward_window(net, np.zeros((0, 6)))
        with pytest.raises(DimMismatch):
            forward_window(net, np.zeros((20, 5)))

    def test_receptive_field(self):
        assert make_test_net().min_frames == 15  # 7 frames context per side
        assert tiny_net().min_frames == 7


class TestNetValidation:
    def test_broken_chain_rejected(self):
        net = tiny_net()
        bad = list(net.layers)
        bad[1] = tiny_net(d_in=6, hidden=9).layers[1]  # in_dim 9 != 8
        with pytest.raises(DimMismatch):
            XVectorNet(tuple(bad))

    def test_nan_weight_rejected(self):
        net = tiny_net()
        layer = net.layers[0]
        w = layer.weight.copy()
        w[0, 0] = np.nan
        bad = AffineLayer(
            layer.kind, layer.offsets, layer.in_dim, layer.out_dim,
            w, layer.bias, layer.bn_mean, layer.bn_var,
        )
        with pytest.raises(NonFiniteWeight):
            XVectorNet((bad,) + net.layers[1:])

    def test_pool_required(self):
        net = tiny_net()
        no_pool = tuple(l for l in net.layers if not isinstance(l, StatsPool))
        with pytest.raises(DimMismatch):
            XVectorNet(no_pool)


# -----------------------------------------------------------------------------
# weight file
# -----------------------------------------------------------------------------

class TestWeightsFormat:
    def test_standard_net_shape(self, tmp_path):
        path = tmp_path / "m.xvnw"
        save_weights(make_test_net(seed=3), path)
        assert path.read_bytes()[:4] == b"XVNW"
        net = load_weights(path)
        assert net.input_dim == 30
        assert net.embedding_dim == 512
        assert len(net.frame_layers) == 5

    def test_roundtrip_forward_bit_identical(self, tmp_path):
        path = tmp_path / "m.xvnw"
        net = make_test_net(seed=4, preset="small")
        save_weights(net, path)
        back = load_weights(path)
        x = np.random.default_rng(4).standard_normal((60, 30))
        assert np.array_equal(forward_window(net, x), forward_window(back, x))

    def test_nan_in_file_rejected(self, tmp_path):
        path = tmp_path / "m.xvnw"
        save_weights(tiny_net(), path)
        raw = bytearray(path.read_bytes())
        # first frame-layer weight starts after the 8-byte header plus the
        # record prefix: type u8, count u8, 3 i16 offsets, two u32 dims
        off = 8 + 1 + 1 + 6 + 8
        raw[off : off + 4] = struct.pack("<f", np.nan)
        body = bytes(raw[:-4])
        path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
        with pytest.raises(NonFiniteWeight):
            load_weights(path)

    def test_corrupted_crc(self, tmp_path):
        path = tmp_path / "m.xvnw"
        save_weights(tiny_net(), path)
        raw = bytearray(path.read_bytes())
        raw[20] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptArchive):
            load_weights(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.xvnw"
        path.write_bytes(b"WXYZ" + b"\x00" * 20)
        with pytest.raises(BadMagic):
            load_weights(path)

    def test_dim_mismatch_in_file(self, tmp_path):
        path = tmp_path / "m.xvnw"
        net = tiny_net()
        save_weights(net, path)
        raw = bytearray(path.read_bytes())
        # patch the declared input dim of the first layer (u32 after
        # type, offset count, and 3 i16 offsets)
        struct.pack_into("<I", raw, 8 + 1 + 1 + 6, 7)
        body = bytes(raw[:-4])
        path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
        with pytest.raises((DimMismatch, CorruptArchive)):
            load_weights(path)


# -----------------------------------------------------------------------------
# extraction protocol
# -----------------------------------------------------------------------------

def feats_of(duration_s, shift=0.01, dim=30, seed=0):
    t = round(duration_s / shift)
    rows = np.random.default_rng(seed).standard_normal((t, dim))
    return FeatureMatrix(rows, shift)


class TestExtraction:
    def test_three_second_stream(self):
        vecs = extract_sequence(make_test_net(preset="small"), feats_of(3.0))
        spans = [(v.window_start_s, v.window_end_s) for v in vecs]
        assert spans == [(0.0, 1.5), (0.75, 2.25), (1.5, 3.0)]

    def test_exactly_one_window(self):
        vecs = extract_sequence(make_test_net(preset="small"), feats_of(1.5))
        assert [(v.window_start_s, v.window_end_s) for v in vecs] == [(0.0, 1.5)]

    def test_clamped_tail(self):
        vecs = extract_sequence(make_test_net(preset="small"), feats_of(3.2))
        spans = [(v.window_start_s, v.window_end_s) for v in vecs]
        assert spans[:3] == [(0.0, 1.5), (0.75, 2.25), (1.5, 3.0)]
        assert spans[3] == (2.25, pytest.approx(3.2))
        assert spans[3][1] - spans[3][0] == pytest.approx(0.95)

    def test_too_short(self):
        with pytest.raises(StreamTooShort):
            extract_sequence(make_test_net(preset="small"), feats_of(0.4))

    def test_values_match_forward_of_slice(self):
        net = make_test_net(preset="small")
        feats = feats_of(2.0)
        vecs = extract_sequence(net, feats)
        want = forward_window(net, feats.rows[75 : 75 + 150])
        np.testing.assert_array_equal(
            vecs[1].values, want.astype(np.float32)
        )

    @given(
        duration=st.floats(0.5, 12.0),
        window=st.sampled_from([1.0, 1.5, 2.0]),
        stride=st.sampled_from([0.25, 0.5, 0.75, 1.0]),
    )
    @settings(max_examples=25, deadline=None)
    def test_matches_hand_enumeration(self, duration, window, stride):
        if stride > window:
            return
        feats = feats_of(round(duration, 2))
        cfg = ExtractionConfig(window_s=window, stride_s=stride)
        net = make_test_net(preset="small")
        try:
            vecs = extract_sequence(net, feats, cfg)
        except StreamTooShort:
            assert feats.span_s < cfg.min_window_s
            return
        got = [(v.window_start_s, v.window_end_s) for v in vecs]
        want = ref_window_spans(feats.span_s, window, stride)
        assert got == pytest.approx(want)
        starts = [s for s, _ in got]
        for a, b in zip(starts, starts[1:]):
            assert b - a == pytest.approx(stride)

    def test_bad_config(self):
        with pytest.raises(InvalidConfig):
            ExtractionConfig(window_s=1.0, stride_s=1.5)


# -----------------------------------------------------------------------------
# archive
# -----------------------------------------------------------------------------

class TestArchive:
    def test_empty(self, tmp_path):
        path = tmp_path / "e.xvec"
        save_archive([], path)
        assert load_archive(path) == []
        assert len(path.read_bytes()) == 12  # magic, count, crc

    def test_single_zero_vector(self, tmp_path):
        path = tmp_path / "z.xvec"
        vec = XVector(np.zeros(512, dtype=np.float32), 0.0, 1.5)
        save_archive([vec], path)
        (back,) = load_archive(path)
        assert np.array_equal(back.values, vec.values)
        assert (back.window_start_s, back.window_end_s) == (0.0, 1.5)

    def test_bulk_roundtrip_and_size(self, tmp_path):
        rng = np.random.default_rng(9)
        vecs = [
            XVector(
                rng.standard_normal(512).astype(np.float32),
                0.75 * i,
                0.75 * i + 1.5,
            )
            for i in range(10_000)
        ]
        path = tmp_path / "big.xvec"
        save_archive(vecs, path)
        assert path.stat().st_size == 8 + 10_000 * (16 + 512 * 4) + 4
        back = load_archive(path)
        assert len(back) == 10_000
        for a, b in zip(vecs[::997], back[::997]):
            assert np.array_equal(a.values, b.values)
            assert a.window_start_s == b.window_start_s
            assert a.window_end_s == b.window_end_s

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "c.xvec"
        save_archive(
            [XVector(np.ones(512, dtype=np.float32), 0.0, 1.5)], path
        )
        raw = bytearray(path.read_bytes())
        raw[30] ^= 1
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptArchive):
            load_archive(path)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "t.xvec"
        save_archive(
            [XVector(np.ones(512, dtype=np.float32), 0.0, 1.5)], path
        )
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(CorruptArchive):
            load_archive(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.xvec"
        path.write_bytes(b"FEAT" + b"\x00" * 40)
        with pytest.raises(BadMagic):
            load_archive(path)

    def test_vector_validation(self):
        with pytest.raises(DimMismatch):
            XVector(np.zeros(100), 0.0, 1.5)
        with pytest.raises(NonFiniteWeight):
            XVector(np.full(512, np.inf), 0.0, 1.5)
