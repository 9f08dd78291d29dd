"""Linear CR operator suite on the truncated spectral spaces.

Everything here is a finite matrix acting on basis coefficients. The frame
derivative Z̄ preserves total degree, so every operator in this module is
block diagonal over the degree blocks of the basis; homotopy inverses are
per-block pseudo-inverses and the associated projectors are orthogonal in
the inner products induced by the adapted metric.

Metric weights (derived from the Levi constant ℓ = 1/2):

* scalars: weight 1;
* (0,1)-forms a ω̄: weight 1/ℓ (|ω̄|² = 1/ℓ);
* fields f T + h Z: weights (1, ℓ);
* field-valued forms (p ω̄)⊗T + (q ω̄)⊗Z: weights (1/ℓ, 1).

The tangential complex on fields, in components, is

    ∂̄(f T + h Z) = (Z̄f + iℓ h) ω̄⊗T + (Z̄h) ω̄⊗Z,

where the iℓ h term is the T-component of π₍₁,₀₎[Z̄, hZ] coming from the
bracket [Z̄, Z] = iℓ T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import Basis, SpectralScalar

PINV_RCOND = 1e-9


# ---------------------------------------------------------------------------
# coefficient-space value types


@dataclass
class ScalarForm01:
    """A scalar (0,1)-form α = a ω̄."""

    a: SpectralScalar

    def fs_norm(self, order):
        weight = 1.0 / float(self.a.basis.geometry.levi)
        return np.sqrt(weight) * self.a.fs_norm(order)

    def __add__(self, other):
        return ScalarForm01(self.a + other.a)

    def __sub__(self, other):
        return ScalarForm01(self.a - other.a)

    def __mul__(self, scalar):
        return ScalarForm01(self.a * scalar)

    __rmul__ = __mul__


@dataclass
class HolField:
    """A section V = f T + h Z of the holomorphic tangent sum C·T ⊕ H₍₁,₀₎."""

    f: SpectralScalar
    h: SpectralScalar

    def fs_norm(self, order):
        levi = float(self.f.basis.geometry.levi)
        return float(np.sqrt(self.f.fs_norm(order) ** 2 + levi * self.h.fs_norm(order) ** 2))

    def __add__(self, other):
        return HolField(self.f + other.f, self.h + other.h)

    def __sub__(self, other):
        return HolField(self.f - other.f, self.h - other.h)

    def __mul__(self, scalar):
        return HolField(self.f * scalar, self.h * scalar)

    __rmul__ = __mul__


@dataclass
class FieldForm01:
    """A field-valued (0,1)-form Φ = (p ω̄)⊗T + (q ω̄)⊗Z.

    Deformation tensors are the H-valued case p = 0.
    """

    p: SpectralScalar
    q: SpectralScalar

    def fs_norm(self, order):
        levi = float(self.p.basis.geometry.levi)
        return float(np.sqrt(self.p.fs_norm(order) ** 2 / levi + self.q.fs_norm(order) ** 2))

    def h_valued_defect(self, order=0):
        return np.sqrt(1.0 / float(self.p.basis.geometry.levi)) * self.p.fs_norm(order)

    def __add__(self, other):
        return FieldForm01(self.p + other.p, self.q + other.q)

    def __sub__(self, other):
        return FieldForm01(self.p - other.p, self.q - other.q)

    def __mul__(self, scalar):
        return FieldForm01(self.p * scalar, self.q * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------


def _blockwise_pinv(mat, blocks, dom_weight, cod_weight):
    """Per-block weighted pseudo-inverse.

    Returns P with P y = argmin ||x||_dom over minimizers of ||mat x − y||_cod,
    block by block. Weights are per-coordinate diagonals.
    """
    n_cod, n_dom = mat.shape
    out = np.zeros((n_dom, n_cod), dtype=mat.dtype)
    sd = np.sqrt(dom_weight)
    sc = np.sqrt(cod_weight)
    for dom_idx, cod_idx in blocks:
        block = mat[np.ix_(cod_idx, dom_idx)]
        weighted = sc[cod_idx, None] * block / sd[None, dom_idx]
        pinv = np.linalg.pinv(weighted, rcond=PINV_RCOND)
        out[np.ix_(dom_idx, cod_idx)] = (pinv / sd[dom_idx, None]) * sc[None, cod_idx]
    return out


class OperatorSuite:
    """All linear CR operators for one basis; immutable after construction."""

    def __init__(self, basis: Basis):
        self.basis = basis
        nb = basis.size
        levi = float(basis.geometry.levi)
        self.levi = levi
        # flat(h Z) = (iℓ h) ω̄ and sharp is its inverse
        self.lam_flat = 1j * levi
        self.lam_sharp = 1.0 / self.lam_flat

        dzb = basis.frame_zbar_matrix
        eye = np.eye(nb)

        scalar_blocks = [(np.arange(sl.start, sl.stop),) * 2 for sl in basis.degree_slices]
        self.p_sc_matrix = _blockwise_pinv(dzb, scalar_blocks, np.ones(nb), np.ones(nb))
        self.s_sc_matrix = eye - dzb @ self.p_sc_matrix
        # ker(Z̄) is exactly the CR (holomorphic-restriction) part of the basis
        self.szego_matrix = np.diag((basis.bidegree_q == 0).astype(float))
        pinv_szego = eye - self.p_sc_matrix @ dzb
        defect = np.abs(pinv_szego - self.szego_matrix).max()
        if defect > 1e-10:
            raise AssertionError(f"Szegő projector disagrees with pseudo-inverse ({defect:.2e})")

        # □_b = ∂̄* ∂̄ with the (0,1)-form weight 1/ℓ folded into the adjoint
        self.box_matrix = (1.0 / levi) * dzb.T @ dzb

        # field complex B: (f, h) -> (p, q) packed as stacked coefficient vectors
        zero = np.zeros((nb, nb))
        self.b_vec_matrix = np.block([[dzb, levi * 1j * eye], [zero, dzb]])
        self.field_dom_weight = np.concatenate([np.ones(nb), np.full(nb, levi)])
        self.field_cod_weight = np.concatenate([np.full(nb, 1.0 / levi), np.ones(nb)])
        field_blocks = []
        for sl in basis.degree_slices:
            idx = np.arange(sl.start, sl.stop)
            both = np.concatenate([idx, nb + idx])
            field_blocks.append((both, both))
        self.p_vec_matrix = _blockwise_pinv(
            self.b_vec_matrix, field_blocks, self.field_dom_weight, self.field_cod_weight
        )
        eye2 = np.eye(2 * nb)
        self.q_vec_matrix = eye2 - self.b_vec_matrix @ self.p_vec_matrix
        self.k_harm_matrix = eye2 - self.p_vec_matrix @ self.b_vec_matrix

        # real-subspace machinery for the pi_Re solve: realified coefficients
        # x = [Re c; Im c]; conjugation is c -> perm(conj c), so the real
        # subspace has the explicit orthonormal basis built below.
        sigma = basis.conj_index
        cols = []
        for i in range(nb):
            j = int(sigma[i])
            if j == i:
                col = np.zeros(2 * nb)
                col[i] = 1.0
                cols.append(col)
            elif i < j:
                col = np.zeros(2 * nb)
                col[i] = col[j] = 1.0 / np.sqrt(2.0)
                cols.append(col)
                col = np.zeros(2 * nb)
                col[nb + i] = 1.0 / np.sqrt(2.0)
                col[nb + j] = -1.0 / np.sqrt(2.0)
                cols.append(col)
        self.real_embedding = np.array(cols).T  # (2nb, nb)
        if self.real_embedding.shape != (2 * nb, nb):
            raise AssertionError("real subspace dimension mismatch")
        emb = self.real_embedding
        box_r = np.block([[self.box_matrix, zero], [zero, self.box_matrix]])
        self._pi_re_gram = np.eye(nb) + emb.T @ box_r @ emb
        self._pi_re_cho = cho_factor(self._pi_re_gram)

        # Combined homotopy on deformation tensors. A complex contact field
        # Z_g packs as (g, 2i Z̄g); the parameter of the projection of a field
        # V = (f, h) onto complex contact fields is H f - flat-constant * P_sc h,
        # and the harmonic (CR) part is removed so that ker(combined P)
        # contains range(combined Q) exactly.
        self.z_pack_matrix = np.vstack([eye, 2j * dzb]).astype(complex)
        phat_param = np.hstack([self.szego_matrix, -self.lam_flat * self.p_sc_matrix])
        k_on_param = (self.k_harm_matrix @ self.z_pack_matrix)[:nb, :]
        self.combined_p_param_matrix = (eye - k_on_param) @ phat_param @ self.p_vec_matrix
        self.combined_q_matrix = eye2 - self.b_vec_matrix @ self.z_pack_matrix @ self.combined_p_param_matrix

    def combined_p_param(self, Phi: FieldForm01) -> SpectralScalar:
        """Parameter f of the combined homotopy field (a complex contact field)."""
        return self.basis.scalar(self.combined_p_param_matrix @ self._pack_form(Phi))

    def combined_q(self, Phi: FieldForm01) -> FieldForm01:
        """Complement piece of the homotopy Φ = ∂̄ Z_{param} + Q Φ."""
        return self._unpack_form(self.combined_q_matrix @ self._pack_form(Phi))

    # -- scalar complex -----------------------------------------------------

    def dbar_scalar(self, f: SpectralScalar) -> ScalarForm01:
        return ScalarForm01(self.basis.scalar(self.basis.frame_zbar_matrix @ f.coeffs))

    def box_b(self, f: SpectralScalar) -> SpectralScalar:
        return self.basis.scalar(self.box_matrix @ f.coeffs)

    def delta_Q(self, u: SpectralScalar) -> SpectralScalar:
        """Defined through Re(u + □_b u) = u + Δ_Q u / 4 (n = 1)."""
        return 4.0 * ((u + self.box_b(u)).real_part() - u)

    def szego(self, f: SpectralScalar) -> SpectralScalar:
        return self.basis.scalar(self.szego_matrix @ f.coeffs)

    def p_scalar(self, alpha: ScalarForm01) -> SpectralScalar:
        return self.basis.scalar(self.p_sc_matrix @ alpha.a.coeffs)

    def s_scalar(self, alpha: ScalarForm01) -> ScalarForm01:
        return ScalarForm01(self.basis.scalar(self.s_sc_matrix @ alpha.a.coeffs))

    # -- field complex ------------------------------------------------------

    def _pack_field(self, V: HolField):
        return np.concatenate([V.f.coeffs, V.h.coeffs])

    def _unpack_field(self, vec) -> HolField:
        nb = self.basis.size
        return HolField(self.basis.scalar(vec[:nb]), self.basis.scalar(vec[nb:]))

    def _pack_form(self, Phi: FieldForm01):
        return np.concatenate([Phi.p.coeffs, Phi.q.coeffs])

    def _unpack_form(self, vec) -> FieldForm01:
        nb = self.basis.size
        return FieldForm01(self.basis.scalar(vec[:nb]), self.basis.scalar(vec[nb:]))

    def dbar_field(self, V: HolField) -> FieldForm01:
        """∂̄V(Z̄) = π₍₁,₀₎[Z̄, V] via the structure constants of the frame."""
        return self._unpack_form(self.b_vec_matrix @ self._pack_field(V))

    def p_field(self, Phi: FieldForm01) -> HolField:
        return self._unpack_field(self.p_vec_matrix @ self._pack_form(Phi))

    def q_field(self, Phi: FieldForm01) -> FieldForm01:
        return self._unpack_form(self.q_vec_matrix @ self._pack_form(Phi))

    def k_harm(self, V: HolField) -> HolField:
        return self._unpack_field(self.k_harm_matrix @ self._pack_field(V))

    # -- musical isomorphisms on the horizontal bundle -----------------------

    def flat(self, h: SpectralScalar) -> ScalarForm01:
        """♭ of the horizontal field h Z: contraction with dη gives (iℓ h) ω̄."""
        return ScalarForm01(h * self.lam_flat)

    def sharp(self, alpha: ScalarForm01) -> SpectralScalar:
        """Frame coefficient of ♯α, the inverse of ♭."""
        return alpha.a * self.lam_sharp

    # -- real projection solve -----------------------------------------------

    def _realify(self, coeffs):
        return np.concatenate([coeffs.real, coeffs.imag])

    def _unrealify(self, x):
        nb = self.basis.size
        return x[:nb] + 1j * x[nb:]

    def pi_re_solve(self, rhs: SpectralScalar) -> SpectralScalar:
        """Solve (I + Δ_Q/4) u = rhs for real u, rhs real; SPD solve.

        For real u the left side is u + Re(□_b u), which realifies to an SPD
        matrix on the real subspace.
        """
        emb = self.real_embedding
        r = emb.T @ self._realify(rhs.coeffs)
        y = cho_solve(self._pi_re_cho, r)
        resid = np.linalg.norm(self._pi_re_gram @ y - r)
        if resid > 1e-10 * max(1.0, np.linalg.norm(r)):
            raise ArithmeticError(f"pi_Re solve residual {resid:.2e}")
        return self.basis.scalar(self._unrealify(emb @ y))
