"""Basis construction: dimensions, orthonormality, bigrading, derivatives.

The frame-derivative oracle never touches the spectral machinery: basis
functions are polynomials in (z, zbar), so Z f, Zbar f and T f can be
checked against Wirtinger derivatives assembled from central differences
in the four real coordinates of C^2.
"""

import numpy as np

from conftest import cached_basis
from crsphere import build_basis, frame_derivative, fs_norm, multiply

FD_STEP = 1e-6


def wirtinger_fd(eval_fn, z1, z2):
    """d/dz1, d/dz2, d/dzbar1, d/dzbar2 of eval_fn by central differences."""
    h = FD_STEP
    out = []
    for slot in range(2):
        args = [z1, z2]
        dx = (eval_fn(*_shift(args, slot, h)) - eval_fn(*_shift(args, slot, -h))) / (2 * h)
        dy = (eval_fn(*_shift(args, slot, 1j * h)) - eval_fn(*_shift(args, slot, -1j * h))) / (2 * h)
        out.append(0.5 * (dx - 1j * dy))   # d/dz
        out.append(0.5 * (dx + 1j * dy))   # d/dzbar
    # reorder to (dz1, dz2, dzbar1, dzbar2)
    return out[0], out[2], out[1], out[3]


def _shift(args, slot, delta):
    shifted = list(args)
    shifted[slot] = shifted[slot] + delta
    return shifted


def frame_derivative_fd(basis, f, word, z1, z2):
    def eval_fn(w1, w2):
        return basis.eval_columns(w1, w2, f.coeffs[:, None])[:, 0]
    d1, d2, db1, db2 = wirtinger_fd(eval_fn, z1, z2)
    zb1, zb2 = np.conj(z1), np.conj(z2)
    if word == "Z":
        return zb2 * d1 - zb1 * d2
    if word == "Zb":
        return z2 * db1 - z1 * db2
    if word == "T":
        return 2j * (z1 * d1 + z2 * d2 - zb1 * db1 - zb2 * db2)
    raise ValueError(word)


def test_dimension_formula():
    for N in (4, 6, 8):
        basis = cached_basis(N)
        assert basis.size == (N + 1) * (N + 2) * (2 * N + 3) // 6
    assert cached_basis(6).size == 140
    assert cached_basis(8).size == 285


def test_orthonormality_via_quadrature(basis6):
    vals = basis6.node_values
    w = basis6.grid.weights_normalized
    gram = (vals.conj().T * w) @ vals
    assert np.max(np.abs(gram - np.eye(basis6.size))) < 1e-12


def test_torus_bigrading(basis6):
    # a weight-(k1, k2) function picks up the phase e^{i(k1 a + k2 b)} under
    # the torus action (z1, z2) -> (e^{ia} z1, e^{ib} z2)
    rng = np.random.default_rng(4)
    a, b = 0.7, -1.3
    n = 40
    w = rng.standard_normal((n, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    z1, z2 = w[:, 0] + 1j * w[:, 1], w[:, 2] + 1j * w[:, 3]
    cols = np.eye(basis6.size)
    before = basis6.eval_columns(z1, z2, cols)
    after = basis6.eval_columns(np.exp(1j * a) * z1, np.exp(1j * b) * z2, cols)
    phases = np.exp(1j * (basis6.k1 * a + basis6.k2 * b))
    assert np.max(np.abs(after - before * phases[None, :])) < 1e-10


def test_bigrade_integer_split(basis6):
    p = (basis6.degrees + basis6.k1 + basis6.k2) / 2
    q = (basis6.degrees - basis6.k1 - basis6.k2) / 2
    assert np.all(p == p.astype(int)) and np.all(q == q.astype(int))
    assert np.all(p >= 0) and np.all(q >= 0)
    assert np.all(p + q == basis6.degrees)


def test_frame_derivatives_against_finite_differences(basis6):
    rng = np.random.default_rng(5)
    w = rng.standard_normal((30, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    z1, z2 = w[:, 0] + 1j * w[:, 1], w[:, 2] + 1j * w[:, 3]
    f = basis6.random_scalar(rng, max_degree=4)
    for word in ("Z", "Zb", "T"):
        spectral = frame_derivative(f, [word])
        got = basis6.eval_columns(z1, z2, spectral.coeffs[:, None])[:, 0]
        expect = frame_derivative_fd(basis6, f, word, z1, z2)
        scale = max(1.0, np.max(np.abs(expect)))
        assert np.max(np.abs(got - expect)) / scale < 1e-6, word


def test_derivative_matrices_one_sparse(basis6):
    # Z and Zbar map each basis function to a single real multiple of
    # another basis function (weights shift by (+1,-1) within a degree)
    for word in ("Z", "Zb"):
        cols = np.empty((basis6.size, basis6.size), dtype=complex)
        for j in range(basis6.size):
            e = np.zeros(basis6.size)
            e[j] = 1.0
            cols[:, j] = frame_derivative(basis6.scalar(e), [word]).coeffs
        nnz_per_col = np.sum(np.abs(cols) > 1e-12, axis=0)
        assert np.max(nnz_per_col) <= 1
        assert np.max(np.abs(cols.imag)) < 1e-12


def test_reeb_derivative_is_diagonal_weight(basis6):
    # T has eigenvalue i*kappa*(p - q) on bigrade (p, q), and p - q = k1 + k2
    kappa = float(basis6.geometry.kappa)
    for j in rng_indices(basis6.size, 25):
        e = np.zeros(basis6.size)
        e[j] = 1.0
        got = frame_derivative(basis6.scalar(e), ["T"]).coeffs
        eigen = 1j * kappa * (basis6.k1[j] + basis6.k2[j])
        expect = eigen * e
        assert np.max(np.abs(got - expect)) < 1e-12


def rng_indices(size, count):
    return np.random.default_rng(6).choice(size, size=min(count, size), replace=False)


def test_multiply_matches_pointwise(basis6):
    rng = np.random.default_rng(7)
    f = basis6.random_scalar(rng, max_degree=2)
    g = basis6.random_scalar(rng, max_degree=3)
    product = multiply(f, g)
    z1, z2 = basis6.grid.z1, basis6.grid.z2
    lhs = basis6.eval_columns(z1, z2, product.coeffs[:, None])[:, 0]
    rhs = (basis6.eval_columns(z1, z2, f.coeffs[:, None])[:, 0]
           * basis6.eval_columns(z1, z2, g.coeffs[:, None])[:, 0])
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_norm_zero_order_is_l2(basis6):
    rng = np.random.default_rng(8)
    f = basis6.random_scalar(rng)
    assert abs(fs_norm(f, 0) - np.linalg.norm(f.coeffs)) < 1e-12


def test_norm_order_monotone(basis6):
    rng = np.random.default_rng(9)
    f = basis6.random_scalar(rng)
    norms = [fs_norm(f, s) for s in range(5)]
    assert all(norms[i] <= norms[i + 1] + 1e-12 for i in range(4))


def test_projection_roundtrip(basis6):
    rng = np.random.default_rng(10)
    f = basis6.random_scalar(rng)
    z1, z2 = basis6.grid.z1, basis6.grid.z2
    vals = basis6.eval_columns(z1, z2, f.coeffs[:, None])[:, 0]
    back = basis6.project_values(vals)
    assert np.max(np.abs(back - f.coeffs)) < 1e-11


def test_basis_id_stability():
    a = build_basis(4)
    b = build_basis(4)
    assert a.basis_id == b.basis_id
    assert a.basis_id != cached_basis(6).basis_id


def test_real_part_conjugation(basis6):
    rng = np.random.default_rng(11)
    f = basis6.random_scalar(rng)
    re = f.real_part()
    z1, z2 = basis6.grid.z1[:50], basis6.grid.z2[:50]
    vals = basis6.eval_columns(z1, z2, re.coeffs[:, None])[:, 0]
    assert np.max(np.abs(vals.imag)) < 1e-12
    assert re.is_real()
