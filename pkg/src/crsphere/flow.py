"""Contact diffeomorphisms as time-1 flows, and pullbacks of structures.

A contact field X = g T + h Z + h̄ Z̄ extends off the sphere by the same
polynomial formulas; in ambient coordinates the velocity is

    ż₁ = 2i g z₁ + h z̄₂,   ż₂ = 2i g z₂ − h z̄₁,

which is tangent to every centered sphere (the radial derivative of |z|²
vanishes identically), so re-projection after each integration step only
removes integrator drift. The flow map and its differential are integrated
together: positions by classical RK4, the differential by the variational
equation dJ/dt = DX(z(t)) J with the conjugate rows of J reconstructed from
J itself (F commutes with conjugation).

Deformation pullbacks follow the frame recipe: with ω̂ = ω + (φ∘F) ω̄,

    A = ω̂_{F(x)}(dF Z),   B = ω̂_{F(x)}(dF Z̄),   μ = B / A,

computed nodewise and projected back to the basis. The composition factor
φ∘F may be frozen at a different diffeomorphism (the remainder E and the
contraction map need that variant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _core
from .basis import Basis, SpectralScalar
from .fields import ContactField
from .operators import FieldForm01, OperatorSuite

DEFAULT_FLOW_STEPS = 32
CONTACT_RATIO_TOL = 1e-8
MAX_FLOW_STEPS = 4096
FLOW_NORM_CAP = 8.0
FLOW_NORM_ORDER = 6
_IDENTITY_CUTOFF = 1e-13
_ROW_COMPRESS_REL = 1e-13
_MIN_ABS_A = 0.1


class FlowError(RuntimeError):
    """Contact invariant could not be met within the step cap."""


class NeighbourhoodError(RuntimeError):
    """The deformed structure left the parameterized neighbourhood."""


@dataclass
class DeformationTensor:
    """Deformation coefficient φ in φ ω̄⊗Z (H-valued; |φ| < 1 pointwise)."""

    coefficient: SpectralScalar

    def __post_init__(self):
        sup = self.sup_abs()
        if sup >= 1.0:
            raise ValueError(f"deformation tensor has |phi| = {sup:.3f} >= 1 at a node")

    @property
    def basis(self):
        return self.coefficient.basis

    def sup_abs(self):
        return float(np.abs(self.coefficient.values()).max())

    def fs_norm(self, order):
        return self.coefficient.fs_norm(order)

    def as_field_form(self) -> FieldForm01:
        return FieldForm01(self.basis.zero(), self.coefficient)

    def __add__(self, other):
        return DeformationTensor(self.coefficient + other.coefficient)

    def __sub__(self, other):
        return DeformationTensor(self.coefficient - other.coefficient)

    def __mul__(self, scalar):
        return DeformationTensor(self.coefficient * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# integration


def _flow_columns(X: ContactField):
    """Monomial rows and the 10 coefficient columns (g, h and their four
    ambient derivatives each) used by the flow right-hand side."""
    basis = X.basis
    exps = basis.exponents
    index = {tuple(e): i for i, e in enumerate(exps)}
    cols = np.zeros((len(exps), 10), dtype=complex)
    cols[:, 0] = basis.monomial_coefficients(X.generating.coeffs)
    cols[:, 1] = basis.monomial_coefficients(X.horizontal.coeffs)
    for src, base in ((0, 2), (1, 6)):
        for i, (a1, a2, b1, b2) in enumerate(exps):
            c = cols[i, src]
            if c == 0:
                continue
            for var, (e1, e2, e3, e4) in enumerate(((a1 - 1, a2, b1, b2),
                                                    (a1, a2 - 1, b1, b2),
                                                    (a1, a2, b1 - 1, b2),
                                                    (a1, a2, b1, b2 - 1))):
                power = (a1, a2, b1, b2)[var]
                if power:
                    cols[index[(e1, e2, e3, e4)], base + var] += power * c
    peak = np.abs(cols).max()
    if peak > 0:
        keep = np.abs(cols).max(axis=1) > _ROW_COMPRESS_REL * peak
        exps = exps[keep]
        cols = cols[keep]
    return np.ascontiguousarray(exps), np.ascontiguousarray(cols)


def _rhs(exps, cols, z, jac):
    """Velocity and Jacobian derivative at positions z (n, 2), jac (n, 2, 4)."""
    z1, z2 = z[:, 0], z[:, 1]
    w = _core.eval_poly(z1, z2, exps, cols)
    g, h = w[:, 0], w[:, 1]
    dg, dh = w[:, 2:6], w[:, 6:10]
    zb1, zb2 = np.conj(z1), np.conj(z2)

    vel = np.empty_like(z)
    vel[:, 0] = 2j * g * z1 + h * zb2
    vel[:, 1] = 2j * g * z2 - h * zb1

    dx = np.empty((z.shape[0], 2, 4), dtype=complex)
    dx[:, 0, :] = 2j * z1[:, None] * dg + zb2[:, None] * dh
    dx[:, 0, 0] += 2j * g
    dx[:, 0, 3] += h
    dx[:, 1, :] = 2j * z2[:, None] * dg - zb1[:, None] * dh
    dx[:, 1, 1] += 2j * g
    dx[:, 1, 2] -= h

    jac_full = np.concatenate([jac, np.conj(jac[:, :, [2, 3, 0, 1]])], axis=1)
    return vel, dx @ jac_full


def _integrate(exps, cols, z0, jac0, steps):
    """RK4 time-1 integration with per-step re-projection of positions to S³."""
    z = z0.copy()
    jac = jac0.copy()
    dt = 1.0 / steps
    for _ in range(steps):
        v1, m1 = _rhs(exps, cols, z, jac)
        v2, m2 = _rhs(exps, cols, z + 0.5 * dt * v1, jac + 0.5 * dt * m1)
        v3, m3 = _rhs(exps, cols, z + 0.5 * dt * v2, jac + 0.5 * dt * m2)
        v4, m4 = _rhs(exps, cols, z + dt * v3, jac + dt * m3)
        z = z + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        jac = jac + (dt / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        z /= np.sqrt(np.abs(z[:, :1]) ** 2 + np.abs(z[:, 1:]) ** 2)
    return z, jac


def _jac_full(jac):
    return np.concatenate([jac, np.conj(jac[:, :, [2, 3, 0, 1]])], axis=1)


def _frame_maps(basis: Basis, start_z, images, jac):
    """3×3 matrices of dF on (T, Z, Z̄) against (η, ω, ω̄) at the image."""
    geom = basis.geometry
    frames = geom.frame_vectors(start_z[:, 0], start_z[:, 1])
    full = _jac_full(jac)
    n = start_z.shape[0]
    maps = np.empty((n, 3, 3), dtype=complex)
    w1, w2 = images[:, 0], images[:, 1]
    for j, vec in enumerate(frames):
        pushed = np.einsum("nkc,nc->nk", full, vec)
        maps[:, 0, j] = geom.eta(w1, w2, pushed)
        maps[:, 1, j] = geom.omega(w1, w2, pushed)
        maps[:, 2, j] = geom.omega_bar(w1, w2, pushed)
    return maps


def _contact_ratio(maps):
    """Largest ω/ω̄ component of F*η relative to its η component."""
    eta_t = np.abs(maps[:, 0, 0])
    off = np.maximum(np.abs(maps[:, 0, 1]), np.abs(maps[:, 0, 2]))
    return float((off / eta_t).max())


@dataclass
class ContactDiffeo:
    """Time-1 flow data at the quadrature nodes of a basis."""

    basis: Basis
    generator: ContactField | None
    steps: int
    images: np.ndarray          # (n, 2)
    jacobians: np.ndarray       # (n, 2, 4), rows F1, F2 over (z1, z2, z̄1, z̄2)
    frame_maps: np.ndarray = field(repr=False, default=None)
    contact_ratio: float = 0.0

    @staticmethod
    def identity(basis: Basis) -> "ContactDiffeo":
        nodes = np.stack([basis.grid.z1, basis.grid.z2], axis=1)
        jac = np.zeros((len(nodes), 2, 4), dtype=complex)
        jac[:, 0, 0] = 1.0
        jac[:, 1, 1] = 1.0
        maps = _frame_maps(basis, nodes, nodes, jac)
        return ContactDiffeo(basis, None, 0, nodes, jac, maps, _contact_ratio(maps))

    def sphere_defect(self):
        return float(np.abs(np.abs(self.images[:, 0]) ** 2
                            + np.abs(self.images[:, 1]) ** 2 - 1.0).max())


def flow(X: ContactField, steps=DEFAULT_FLOW_STEPS, norm_cap=FLOW_NORM_CAP) -> ContactDiffeo:
    """Time-1 contact flow of X from the quadrature nodes.

    Doubles the step count (up to a cap) until the contact-preservation
    ratio passes; raises FlowError if it never does.
    """
    basis = X.basis
    size = X.generating.l2_norm() + X.horizontal.l2_norm()
    if size < _IDENTITY_CUTOFF:
        return ContactDiffeo.identity(basis)
    if norm_cap is not None:
        norm = X.fs_norm(FLOW_NORM_ORDER)
        if norm > norm_cap:
            raise FlowError(f"contact field too large to flow (norm {norm:.3g} > {norm_cap})")

    exps, cols = _flow_columns(X)
    nodes = np.stack([basis.grid.z1, basis.grid.z2], axis=1)
    jac0 = np.zeros((len(nodes), 2, 4), dtype=complex)
    jac0[:, 0, 0] = 1.0
    jac0[:, 1, 1] = 1.0

    n_steps = steps
    while True:
        images, jac = _integrate(exps, cols, nodes, jac0, n_steps)
        maps = _frame_maps(basis, nodes, images, jac)
        ratio = _contact_ratio(maps)
        if ratio <= CONTACT_RATIO_TOL:
            return ContactDiffeo(basis, X, n_steps, images, jac, maps, ratio)
        if 2 * n_steps > MAX_FLOW_STEPS:
            raise FlowError(
                f"contact ratio {ratio:.2e} above {CONTACT_RATIO_TOL:g} at {n_steps} steps"
            )
        n_steps *= 2


def compose(outer: ContactDiffeo, inner: ContactDiffeo) -> ContactDiffeo:
    """The diffeomorphism outer ∘ inner, by transporting inner's data."""
    basis = inner.basis
    nodes = np.stack([basis.grid.z1, basis.grid.z2], axis=1)
    if outer.generator is None:
        images, jac = inner.images, inner.jacobians
    else:
        exps, cols = _flow_columns(outer.generator)
        images, jac = _integrate(exps, cols, inner.images, inner.jacobians, outer.steps)
    maps = _frame_maps(basis, nodes, images, jac)
    return ContactDiffeo(basis, None, max(outer.steps, inner.steps),
                         images, jac, maps, _contact_ratio(maps))


# ---------------------------------------------------------------------------
# pullbacks


def pullback_scalar(F: ContactDiffeo, f: SpectralScalar) -> SpectralScalar:
    """f ∘ F by exact polynomial evaluation at mapped nodes, then projection."""
    basis = F.basis
    values = basis.eval_columns(F.images[:, 0], F.images[:, 1], f.coeffs[:, None])[:, 0]
    out = basis.from_values(values)
    total2 = float(np.dot(basis.grid.weights_normalized, np.abs(values) ** 2))
    kept2 = float(np.real(np.vdot(out.coeffs, out.coeffs)))
    out.meta["truncation_mass"] = float(np.sqrt(max(total2 - kept2, 0.0)))
    return out


def _pullback_frame_values(F: ContactDiffeo, comp_values):
    """Nodewise A, B of the deformation action for ω̂ = ω + (φ∘F) ω̄."""
    basis = F.basis
    geom = basis.geometry
    nodes_z1, nodes_z2 = basis.grid.z1, basis.grid.z2
    _, z_vec, zb_vec = geom.frame_vectors(nodes_z1, nodes_z2)
    full = _jac_full(F.jacobians)
    w1, w2 = F.images[:, 0], F.images[:, 1]
    out = []
    for vec in (z_vec, zb_vec):
        pushed = np.einsum("nkc,nc->nk", full, vec)
        out.append(geom.omega(w1, w2, pushed) + comp_values * geom.omega_bar(w1, w2, pushed))
    return out  # A, B


def pullback_deformation(F: ContactDiffeo, phi: DeformationTensor,
                         composition_values=None) -> DeformationTensor:
    """F*φ as a deformation tensor: μ = B/A nodewise, projected to the basis.

    ``composition_values`` freezes the φ∘F factor at given nodewise values
    (used by the remainder map); by default it is φ evaluated at F's images.
    """
    basis = F.basis
    if composition_values is None:
        composition_values = basis.eval_columns(
            F.images[:, 0], F.images[:, 1], phi.coefficient.coeffs[:, None])[:, 0]
    a_vals, b_vals = _pullback_frame_values(F, composition_values)
    min_a = float(np.abs(a_vals).min())
    if min_a < _MIN_ABS_A:
        raise NeighbourhoodError(f"structure left the parameterized neighbourhood (|A| = {min_a:.3f})")
    mu_vals = b_vals / a_vals
    out = basis.from_values(mu_vals)
    total2 = float(np.dot(basis.grid.weights_normalized, np.abs(mu_vals) ** 2))
    kept2 = float(np.real(np.vdot(out.coeffs, out.coeffs)))
    out.meta["truncation_mass"] = float(np.sqrt(max(total2 - kept2, 0.0)))
    result = DeformationTensor(out)
    return result


def composition_term(F: ContactDiffeo, phi: DeformationTensor) -> SpectralScalar:
    """The φ∘F coefficient (projected); the frozen slot of the remainder."""
    return pullback_scalar(F, phi.coefficient)


def e_remainder(suite: OperatorSuite, X: ContactField, phi: DeformationTensor,
                steps=DEFAULT_FLOW_STEPS, compose_with: ContactDiffeo | None = None):
    """E(X, φ) = F_X*φ − ∂̄X|_H − φ∘F: the second-order remainder.

    ``compose_with`` freezes the composition slot at another diffeomorphism
    (the contraction map's variant); the default is the live flow of X.
    """
    basis = X.basis
    F = flow(X, steps=steps)
    Fc = F if compose_with is None else compose_with
    comp_values = basis.eval_columns(
        Fc.images[:, 0], Fc.images[:, 1], phi.coefficient.coeffs[:, None])[:, 0]
    mu = pullback_deformation(F, phi, composition_values=comp_values)
    dbar_x = suite.dbar_field(X.as_hol_field())
    comp_proj = basis.from_values(comp_values)
    return mu.coefficient - dbar_x.q - comp_proj
