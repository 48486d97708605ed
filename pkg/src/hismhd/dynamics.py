"""Right-hand side of the Hall/ion-slip MHD system in spectral space.

With all terms moved to the right, the evolution integrated here is

    du/dt = -nu |k|^alpha u + P[ -(u.grad)u + (b.grad)b ]
    db/dt = -mu |k|^2 b - (u.grad)b + (b.grad)u
            - sigma curl((curl b) x b) + kappa curl((((curl b) x b) x b))

where P is the Leray projection (pressure eliminated). Sign map against the
left-hand-side form of the PDE: every term listed on the left enters the
tendency with opposite sign; the ion-slip term carries -kappa on the left,
hence +kappa here, and its energy contribution is -kappa ||(curl b) x b||^2.

Quadratic products are dealiased with the 1/3-rule mask, the cubic ion-slip
product with the 1/4-rule mask (the cubic term sees the cubic-masked field).
Internally everything runs on the rfft half-spectrum; public inputs and
outputs are full-lattice coefficient arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .kernels import cross_real, dot_grad

BREAKDOWN_U = ("dissipation_u", "advection_u", "lorentz")
BREAKDOWN_B = ("dissipation_b", "advection_b", "stretching", "hall", "ionslip")


class IntegrationFailure(RuntimeError):
    """Raised when the state or tendency stops being finite."""


@dataclass
class State:
    u: np.ndarray  # (3, n, n, n) complex, divergence-free
    b: np.ndarray
    t: float = 0.0

    def copy(self):
        return State(self.u.copy(), self.b.copy(), self.t)


@dataclass
class Tendency:
    du: np.ndarray
    db: np.ndarray
    breakdown: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# half-spectrum toolbox
# ---------------------------------------------------------------------------

def _curl_h(grid, vh):
    kx, ky, kz = grid.kvec_half
    return np.stack(
        [
            1j * (ky * vh[2] - kz * vh[1]),
            1j * (kz * vh[0] - kx * vh[2]),
            1j * (kx * vh[1] - ky * vh[0]),
        ]
    )


def _leray_h(grid, vh):
    kx, ky, kz = grid.kvec_half
    kdotc = (kx * vh[0] + ky * vh[1] + kz * vh[2]) / grid.k2_safe_half
    return np.stack([vh[0] - kx * kdotc, vh[1] - ky * kdotc, vh[2] - kz * kdotc])


def _vec_phys(grid, vh, order):
    mask = grid.mask_float(order, half=True)
    return spectral.inverse_half(grid, vh * mask)


def _grad_tensor_phys(grid, vh, order):
    """Real samples of the masked derivative tensor G[j, i] = d_j v_i."""
    mask = grid.mask_float(order, half=True)
    n = grid.n
    out = np.empty((3, 3, n, n, n))
    for j in range(3):
        w = grid.kvec_half[j] * mask
        out[j] = spectral.inverse_half(grid, (1j * w) * vh)
    return out


def _forward_masked(grid, phys, order):
    out = spectral.forward_half(grid, phys)
    out *= grid.mask_float(order, half=True)
    return out


def _advect_h(grid, velh, fieldh):
    """(vel . grad) field with quadratic dealiasing, half-spectrum in/out."""
    vel_p = _vec_phys(grid, velh, 2)
    grad_p = _grad_tensor_phys(grid, fieldh, 2)
    return _forward_masked(grid, dot_grad(vel_p, grad_p), 2)


def _hall_h(grid, bh, sigma, curl_bh=None, b_phys=None):
    if curl_bh is None:
        curl_bh = _curl_h(grid, bh)
    if b_phys is None:
        b_phys = _vec_phys(grid, bh, 2)
    c_p = _vec_phys(grid, curl_bh, 2)
    return sigma * _curl_h(grid, _forward_masked(grid, cross_real(c_p, b_phys), 2))


def _ionslip_h(grid, bh, kappa, curl_bh=None):
    if curl_bh is None:
        curl_bh = _curl_h(grid, bh)
    c_p = _vec_phys(grid, curl_bh, 3)
    b_p = _vec_phys(grid, bh, 3)
    w = cross_real(cross_real(c_p, b_p), b_p)
    return kappa * _curl_h(grid, _forward_masked(grid, w, 3))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def advection(grid, vel, fld):
    """Dealiased (vel . grad) fld, full-lattice coefficients in and out."""
    if vel.shape != fld.shape:
        raise ValueError("advection arguments must share a grid and shape")
    out = _advect_h(grid, spectral.halve(grid, vel), spectral.halve(grid, fld))
    return spectral.expand_half(grid, out)


def hall_term(grid, b, sigma: float):
    """sigma * curl((curl b) x b), the Hall term as it appears on the
    left-hand side of the induction equation (enters the tendency negated)."""
    return spectral.expand_half(grid, _hall_h(grid, spectral.halve(grid, b), sigma))


def ionslip_term(grid, b, kappa: float):
    """kappa * curl((((curl b) x b) x b)); enters the tendency with + sign."""
    return spectral.expand_half(grid, _ionslip_h(grid, spectral.halve(grid, b), kappa))


def rhs_half(grid, uh, bh, params):
    """Tendency on the rfft half-spectrum (integrator fast path)."""
    du, db, _ = _rhs_impl(grid, uh, bh, params, want_breakdown=False)
    return du, db


def full_rhs(grid, state: State, params) -> Tendency:
    """Complete tendency with the per-term breakdown.

    Breakdown keys: dissipation_u, advection_u, lorentz (velocity side;
    advection terms individually Leray-projected so entries sum to du) and
    dissipation_b, advection_b, stretching, hall, ionslip (magnetic side).
    """
    uh = spectral.halve(grid, state.u)
    bh = spectral.halve(grid, state.b)
    du, db, parts = _rhs_impl(grid, uh, bh, params, want_breakdown=True)
    breakdown = {k: spectral.expand_half(grid, v) for k, v in parts.items()}
    tendency = Tendency(
        du=spectral.expand_half(grid, du),
        db=spectral.expand_half(grid, db),
        breakdown=breakdown,
    )
    if not (np.isfinite(np.sum(tendency.du)) and np.isfinite(np.sum(tendency.db))):
        raise IntegrationFailure(f"non-finite tendency at t={state.t:g}")
    return tendency


def _rhs_impl(grid, uh, bh, params, want_breakdown):
    u_p = _vec_phys(grid, uh, 2)
    b_p = _vec_phys(grid, bh, 2)
    gu_p = _grad_tensor_phys(grid, uh, 2)
    gb_p = _grad_tensor_phys(grid, bh, 2)

    adv_u = _leray_h(grid, -_forward_masked(grid, dot_grad(u_p, gu_p), 2))
    lorentz = _leray_h(grid, _forward_masked(grid, dot_grad(b_p, gb_p), 2))
    adv_b = -_forward_masked(grid, dot_grad(u_p, gb_p), 2)
    stretch = _forward_masked(grid, dot_grad(b_p, gu_p), 2)

    diss_u = (-params.nu * grid.kpow_half(params.alpha)) * uh
    diss_b = (-params.mu * grid.k2_half) * bh

    du = diss_u + adv_u + lorentz
    db = diss_b + adv_b + stretch

    parts = {}
    if want_breakdown:
        parts = {
            "dissipation_u": diss_u,
            "advection_u": adv_u,
            "lorentz": lorentz,
            "dissipation_b": diss_b,
            "advection_b": adv_b,
            "stretching": stretch,
        }

    curl_bh = None
    if params.sigma != 0.0 or params.kappa != 0.0:
        curl_bh = _curl_h(grid, bh)
    if params.sigma != 0.0:
        hall = -_hall_h(grid, bh, params.sigma, curl_bh=curl_bh, b_phys=b_p)
        db = db + hall
    else:
        hall = np.zeros_like(bh)
    if params.kappa != 0.0:
        ionslip = _ionslip_h(grid, bh, params.kappa, curl_bh=curl_bh)
        db = db + ionslip
    else:
        ionslip = np.zeros_like(bh)
    if want_breakdown:
        parts["hall"] = hall
        parts["ionslip"] = ionslip
    return du, db, parts


def pressure_recover(grid, state: State):
    """Mean-free pressure from p = (-Lap)^{-1} div(u.grad u - b.grad b),
    so that grad p equals minus the Leray complement of the nonlinearity."""
    uh = spectral.halve(grid, state.u)
    bh = spectral.halve(grid, state.b)
    u_p = _vec_phys(grid, uh, 2)
    b_p = _vec_phys(grid, bh, 2)
    nl = _forward_masked(grid, dot_grad(u_p, _grad_tensor_phys(grid, uh, 2)), 2)
    nl -= _forward_masked(grid, dot_grad(b_p, _grad_tensor_phys(grid, bh, 2)), 2)
    kx, ky, kz = grid.kvec_half
    p = 1j * (kx * nl[0] + ky * nl[1] + kz * nl[2]) / grid.k2_safe_half
    p[0, 0, 0] = 0.0
    return spectral.expand_half(grid, p)


# ---------------------------------------------------------------------------
# energy budget
# ---------------------------------------------------------------------------

@dataclass
class BudgetRecord:
    """Instantaneous terms of d/dt (1/2)(||u||^2 + ||b||^2).

    `terms` holds the measured pairing of every tendency entry with its field;
    the *_functional values are the closed-form dissipation integrals the
    budget must reduce to (advection, Lorentz cross terms and Hall all pair
    to zero). The ion-slip functional is evaluated on the cubic-masked field,
    the band the term itself is built from.
    """

    terms: dict
    total: float
    dissipation_functional_u: float
    dissipation_functional_b: float
    ionslip_functional: float

    @property
    def functional_total(self):
        return (
            self.dissipation_functional_u
            + self.dissipation_functional_b
            + self.ionslip_functional
        )


def energy_budget(grid, state: State, params) -> BudgetRecord:
    tendency = full_rhs(grid, state, params)
    terms = {}
    for name in BREAKDOWN_U:
        terms[name] = spectral.l2_inner(grid, tendency.breakdown[name], state.u)
    for name in BREAKDOWN_B:
        terms[name] = spectral.l2_inner(grid, tendency.breakdown[name], state.b)
    total = sum(terms.values())

    lam_u = spectral.frac_laplacian(grid, state.u, params.alpha / 2.0)
    diss_u = -params.nu * spectral.l2_norm(grid, lam_u) ** 2
    grad_b = np.stack([spectral.gradient(grid, state.b[i]) for i in range(3)])
    diss_b = -params.mu * spectral.l2_norm(grid, grad_b) ** 2

    bh = spectral.halve(grid, state.b)
    c_p = _vec_phys(grid, _curl_h(grid, bh), 3)
    b_p = _vec_phys(grid, bh, 3)
    p_sq = np.sum(cross_real(c_p, b_p) ** 2)
    ionslip = -params.kappa * float(p_sq) * grid.spacing**3

    return BudgetRecord(
        terms=terms,
        total=total,
        dissipation_functional_u=diss_u,
        dissipation_functional_b=diss_b,
        ionslip_functional=ionslip,
    )


def total_energy(grid, state: State) -> float:
    """(1/2)(||u||^2_{L2} + ||b||^2_{L2})."""
    return 0.5 * (
        spectral.l2_norm(grid, state.u) ** 2 + spectral.l2_norm(grid, state.b) ** 2
    )


# ---------------------------------------------------------------------------
# test/diagnostic helpers
# ---------------------------------------------------------------------------

def random_divfree_field(grid, seed: int, amplitude: float = 1.0, order: int = 3):
    """Seeded random divergence-free field band-limited to the given mask."""
    rng = np.random.default_rng(seed)
    spec = spectral.forward(grid, rng.standard_normal((3, grid.n, grid.n, grid.n)))
    spec *= grid.mask_float(order)
    spec[:, 0, 0, 0] = 0.0
    spec = spectral.leray_project(grid, spec)
    norm = spectral.l2_norm(grid, spec)
    if norm > 0:
        spec *= amplitude / norm
    return spec


def random_state(grid, seed: int, amplitude: float = 1.0, t: float = 0.0) -> State:
    return State(
        u=random_divfree_field(grid, seed, amplitude),
        b=random_divfree_field(grid, seed + 1, amplitude),
        t=t,
    )
