import numpy as np
import pytest

from fastphase import (
    ShapeError,
    TensorFormatError,
    circular_shift,
    dft_oversampled,
    idft,
    read_complex_tensor,
    read_real_tensor,
    read_tensor,
    write_tensor,
)
from conftest import dft_direct, rand_complex


class TestDftOversampled:
    def test_delta_has_flat_spectrum(self):
        x = np.zeros(4, dtype=complex)
        x[0] = 1.0
        X = dft_oversampled(x, (8,))
        assert np.allclose(X, np.full(8, 1 / np.sqrt(8)), atol=1e-14)

    def test_two_ones_hand_computed(self):
        # X_k = (1 + (-j)^k) / 2 for m = 4
        X = dft_oversampled(np.array([1.0 + 0j, 1.0]), (4,))
        expected = np.array([1.0, (1 - 1j) / 2, 0.0, (1 + 1j) / 2])
        assert np.allclose(X, expected, atol=1e-14)

    @pytest.mark.parametrize(
        "n,m",
        [((5,), (11,)), ((3, 4), (7, 9)), ((2, 3, 2), (5, 6, 4))],
    )
    def test_unitarity(self, n, m, rng):
        x = rand_complex(n, rng)
        X = dft_oversampled(x, m)
        assert np.linalg.norm(X) == pytest.approx(np.linalg.norm(x), rel=1e-12)

    @pytest.mark.parametrize(
        "n,m",
        [((4,), (8,)), ((3,), (7,)), ((2, 3), (5, 6)), ((2, 2, 2), (4, 4, 3))],
    )
    def test_matches_direct_summation(self, n, m, rng):
        x = rand_complex(n, rng)
        assert np.max(np.abs(dft_oversampled(x, m) - dft_direct(x, m))) < 1e-10

    def test_undersampled_target_rejected(self):
        with pytest.raises(ShapeError):
            dft_oversampled(np.ones((4, 4), dtype=complex), (3, 8))


class TestIdft:
    def test_constant_spectrum_is_scaled_delta(self):
        c = 2.5 - 0.5j
        out = idft(np.full(8, c))
        expected = np.zeros(8, dtype=complex)
        expected[0] = c * np.sqrt(8)
        assert np.allclose(out, expected, atol=1e-14)

    def test_round_trip_restricted_to_support(self, rng):
        x = rand_complex((3, 5), rng)
        X = dft_oversampled(x, (8, 8))
        back = idft(X)
        assert np.max(np.abs(back[:3, :5] - x)) < 1e-12
        assert np.max(np.abs(back[3:, :])) < 1e-12

    def test_inverse_of_two_ones_example(self):
        X = dft_oversampled(np.array([1.0 + 0j, 1.0]), (4,))
        assert np.allclose(idft(X), [1, 1, 0, 0], atol=1e-14)


class TestCircularShift:
    def test_zero_and_full_wrap_are_identity(self, rng):
        g = rand_complex((4, 6), rng)
        assert np.array_equal(circular_shift(g, (0, 0)), g)
        assert np.array_equal(circular_shift(g, (4, 6)), g)

    def test_shift_one(self):
        out = circular_shift(np.array([1.0, 2.0, 3.0]), (1,))
        assert np.array_equal(out, [3.0, 1.0, 2.0])

    def test_group_law(self, rng):
        g = rand_complex((5, 3), rng)
        a, b = (2, 1), (4, 2)
        ab = tuple(x + y for x, y in zip(a, b))
        assert np.allclose(
            circular_shift(circular_shift(g, a), b), circular_shift(g, ab)
        )

    def test_negative_shift_inverts(self, rng):
        g = rand_complex((7,), rng)
        assert np.allclose(circular_shift(circular_shift(g, (3,)), (-3,)), g)


class TestTensorFormat:
    def test_complex_round_trip_bit_exact(self, tmp_path, rng):
        g = rand_complex((4, 4), rng)
        p1, p2 = tmp_path / "a.fpt", tmp_path / "b.fpt"
        write_tensor(p1, g)
        back = read_tensor(p1)
        assert back.dtype == np.complex128
        assert np.array_equal(back, g)
        write_tensor(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_real_round_trip(self, tmp_path, rng):
        g = rng.standard_normal((3, 2, 5))
        write_tensor(tmp_path / "r.fpt", g)
        assert np.array_equal(read_real_tensor(tmp_path / "r.fpt"), g)

    def test_header_layout(self, tmp_path):
        write_tensor(tmp_path / "h.fpt", np.zeros((2, 3)))
        raw = (tmp_path / "h.fpt").read_bytes()
        assert raw[:4] == b"FPT1"
        assert raw[4] == 0x01 and raw[5] == 2
        assert raw[6:22] == (2).to_bytes(8, "little") + (3).to_bytes(8, "little")
        assert len(raw) == 22 + 8 * 6

    def test_truncated_file_reports_offset(self, tmp_path, rng):
        p = tmp_path / "t.fpt"
        write_tensor(p, rand_complex((4,), rng))
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(TensorFormatError) as exc:
            read_tensor(p)
        assert "byte offset" in str(exc.value)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "m.fpt"
        p.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(TensorFormatError) as exc:
            read_tensor(p)
        assert exc.value.offset == 0

    def test_reading_real_as_complex_is_type_error(self, tmp_path):
        p = tmp_path / "x.fpt"
        write_tensor(p, np.ones((2, 2)))
        with pytest.raises(TensorFormatError) as exc:
            read_complex_tensor(p)
        assert exc.value.offset == 4
        write_tensor(p, np.ones((2, 2), dtype=complex))
        with pytest.raises(TensorFormatError):
            read_real_tensor(p)
