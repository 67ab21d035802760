import struct

import numpy as np
import pytest

from fracschwarz.assembly import build_operator, discretize_measure
from fracschwarz.errors import NumericalError
from fracschwarz.mesh import build_decomposition, build_mesh, coarse_prolongation
from fracschwarz.operators import (build_coarse, extract_local, load_symbol_cache,
                                   save_symbol_cache)

BOUNDS = [[0.0, 2.0], [0.0, 2.0]]


def make_op(n, alpha=0.75, c=0.0, measure="axes4", L=None):
    mesh = build_mesh(BOUNDS, n)
    return mesh, build_operator(mesh, alpha, c, discretize_measure(measure, L))


class TestMatvec:
    def test_zero_vector(self):
        _, op = make_op(8)
        assert np.array_equal(op.matvec(np.zeros(op.dim)), np.zeros(op.dim))

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_fft_equals_dense(self, n, rng):
        _, op = make_op(n)
        A = op.to_dense()
        for _ in range(5):
            x = rng.standard_normal(op.dim)
            y_fft = op.matvec(x)
            y_dense = A @ x
            assert np.linalg.norm(y_fft - y_dense) <= 1e-12 * np.linalg.norm(y_dense)

    def test_operator_symmetry(self, rng):
        _, op = make_op(8, measure="uniform", L=8)
        x = rng.standard_normal(op.dim)
        y = rng.standard_normal(op.dim)
        lhs = op.matvec(x) @ y
        rhs = x @ op.matvec(y)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_rayleigh_positivity(self, rng):
        _, op = make_op(8)
        for _ in range(100):
            x = rng.standard_normal(op.dim)
            assert op.matvec(x) @ x > 0

    def test_dimension_mismatch(self):
        _, op = make_op(8)
        with pytest.raises(ValueError):
            op.matvec(np.zeros(op.dim + 1))

    def test_symbol_lookup_even(self):
        _, op = make_op(8)
        for off in ((0, 0), (1, 0), (2, 1), (3, -1)):
            assert op.symbol(*off) == op.symbol(-off[0], -off[1])
        assert op.symbol(10, 0) == 0.0


class TestExtractLocal:
    def test_full_set_is_dense(self):
        _, op = make_op(8)
        block = extract_local(op, np.arange(op.dim))
        assert np.array_equal(block, op.to_dense())

    def test_singleton(self):
        _, op = make_op(8)
        block = extract_local(op, np.array([17]))
        assert block.shape == (1, 1)
        assert block[0, 0] == op.symbol(0, 0)

    def test_congruent_subdomains_identical(self):
        mesh, op = make_op(16)
        dec = build_decomposition(mesh, 4, 1)
        interior = [i for i in range(dec.J)
                    if dec.core_to_exterior_distance(i) == dec.delta
                    and dec.subdomains[i].extended[0] > 0
                    and dec.subdomains[i].extended[2] > 0
                    and dec.subdomains[i].extended[1] < mesh.n
                    and dec.subdomains[i].extended[3] < mesh.n]
        assert len(interior) >= 2
        a = extract_local(op, dec.subdomains[interior[0]].dofs)
        b = extract_local(op, dec.subdomains[interior[1]].dofs)
        assert np.array_equal(a, b)

    def test_out_of_range(self):
        _, op = make_op(8)
        with pytest.raises(IndexError):
            extract_local(op, np.array([op.dim]))


class TestCoarse:
    def test_identity_prolongation_reproduces_dense(self):
        mesh, op = make_op(8)
        coarse = build_coarse(op, coarse_prolongation(mesh, 8))
        np.testing.assert_allclose(coarse.A0, op.to_dense(), rtol=1e-12, atol=1e-15)

    def test_galerkin_identity(self, rng):
        mesh, op = make_op(16)
        P0 = coarse_prolongation(mesh, 4)
        coarse = build_coarse(op, P0)
        for _ in range(5):
            vc = rng.standard_normal(coarse.dim)
            wc = rng.standard_normal(coarse.dim)
            lhs = (coarse.A0 @ vc) @ wc
            rhs = op.matvec(P0 @ vc) @ (P0 @ wc)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_coarse_spd(self):
        mesh, op = make_op(16)
        coarse = build_coarse(op, coarse_prolongation(mesh, 4))
        assert np.linalg.eigvalsh(coarse.A0)[0] > 0

    def test_galerkin_equals_direct_coarse_assembly(self):
        mesh, op = make_op(16)
        coarse = build_coarse(op, coarse_prolongation(mesh, 4))
        coarse_mesh = build_mesh(BOUNDS, 4)
        direct = build_operator(coarse_mesh, 0.75, 0.0,
                                discretize_measure("axes4")).to_dense()
        assert np.abs(coarse.A0 - direct).max() <= 1e-10 * np.abs(direct).max()

    def test_dimension_check(self):
        mesh, op = make_op(8)
        other = build_mesh(BOUNDS, 16)
        with pytest.raises(ValueError):
            build_coarse(op, coarse_prolongation(other, 4))


class TestSymbolCache:
    def test_roundtrip(self, tmp_path):
        _, op = make_op(8, alpha=0.8, c=0.5, measure="uniform", L=8)
        path = tmp_path / "op.fsym"
        save_symbol_cache(op, path)
        loaded = load_symbol_cache(path)
        assert loaded.n == op.n
        assert loaded.alpha == op.alpha
        assert loaded.c == op.c
        assert len(loaded.measure) == 8
        np.testing.assert_array_equal(loaded.window, op.window)
        x = np.linspace(0, 1, op.dim)
        np.testing.assert_allclose(loaded.matvec(x), op.matvec(x), rtol=1e-14)

    def test_layout_is_little_endian_records(self, tmp_path):
        _, op = make_op(4)
        path = tmp_path / "op.fsym"
        save_symbol_cache(op, path)
        raw = path.read_bytes()
        assert raw[:4] == b"FSYM"
        version, n, ndir = struct.unpack_from("<III", raw, 4)
        assert (version, n, ndir) == (1, 4, 4)
        alpha, c = struct.unpack_from("<dd", raw, 16)
        assert (alpha, c) == (0.75, 0.0)
        body = len(raw) - 32 - 16 * ndir
        assert body % 16 == 0  # (i32, i32, f64) records

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fsym"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(ValueError):
            load_symbol_cache(path)

    def test_bad_version(self, tmp_path):
        _, op = make_op(4)
        path = tmp_path / "op.fsym"
        save_symbol_cache(op, path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError):
            load_symbol_cache(path)

    def test_asymmetric_symbol_rejected(self, tmp_path):
        _, op = make_op(4)
        path = tmp_path / "op.fsym"
        save_symbol_cache(op, path)
        raw = bytearray(path.read_bytes())
        # corrupt the value of the last record to break evenness
        raw[-8:] = struct.pack("<d", 123.456)
        path.write_bytes(bytes(raw))
        with pytest.raises(NumericalError):
            load_symbol_cache(path)


def test_dense_limit_guard():
    _, op = make_op(8)
    op.dim_backup = op.dim
    op.dim = 30_000
    with pytest.raises(ValueError):
        op.to_dense()
    op.dim = op.dim_backup
