"""Construction of the large initial data.

The data is u0 = u01 + P(chi * alpha1 * v0), b0 = b01 + P(chi * alpha2 * v0):

* chi is a radial C^5 cutoff, identically 1 inside radius m0 and 0 outside
  2*m0 (measured from the box centre), built from the degree-11 smoothstep
  on the transition annulus; its realized radial-derivative suprema are
  measured and reported rather than assumed.
* v0 is a real Beltrami field (curl v0 = |k| v0 = v0 on the unit shell):
  positive-helicity eigenvectors on every lattice wavevector whose magnitude
  lies within delta of 1, with the coefficient l1 mass scaled to m1.
* u01, b01 are seeded random band-limited divergence-free fields rescaled to
  an exact H^3 budget.
* P is the Leray projection; chi * v0 is not divergence-free (the gradient
  of the cutoff leaks), so the projection defect is measured and recorded.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import spectral
from .kernels import scale_spectral


class ParamsError(ValueError):
    def __init__(self, field_name, message):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class CutoffError(ValueError):
    pass


class AnnulusError(ValueError):
    def __init__(self, message, minimal_box_length):
        self.minimal_box_length = minimal_box_length
        super().__init__(message)


@dataclass
class SimParams:
    """Physical and data-construction parameters (magnetic dissipation is a
    fixed Laplacian; only the velocity exponent alpha is adjustable)."""

    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 0.5
    kappa: float = 0.1
    alpha: float = 2.0
    m0: float = 8.0
    m1: float = 1.0
    m2: float = 1.0
    delta: float = 0.25
    alpha1: float = 1.0
    alpha2: float = 1.0
    seed: int = 0
    small_budget: float | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise ParamsError("nu", f"viscosity must be positive, got {self.nu}")
        if self.mu <= 0:
            raise ParamsError("mu", f"magnetic diffusivity must be positive, got {self.mu}")
        if self.kappa < 0:
            raise ParamsError("kappa", f"ion-slip coefficient must be nonnegative, got {self.kappa}")
        if not 0.0 <= self.alpha <= 2.0:
            raise ParamsError("alpha", f"fractional exponent must lie in [0, 2], got {self.alpha}")
        if self.m0 < 1.0:
            raise ParamsError("m0", f"cutoff radius must be at least 1, got {self.m0}")
        if self.m1 <= 0:
            raise ParamsError("m1", f"coefficient-l1 budget must be positive, got {self.m1}")
        if self.m2 <= 0:
            raise ParamsError("m2", f"pointwise-bound constant must be positive, got {self.m2}")
        if not 0.0 < self.delta <= 0.5:
            raise ParamsError("delta", f"annulus half-width must lie in (0, 1/2], got {self.delta}")
        if self.small_budget is None:
            self.small_budget = self.m0 ** -0.5
        if self.small_budget < 0:
            raise ParamsError("small_budget", f"H^3 budget must be nonnegative, got {self.small_budget}")

    def names(self):
        return [
            "nu", "mu", "sigma", "kappa", "alpha", "m0", "m1", "m2",
            "delta", "alpha1", "alpha2", "seed", "small_budget",
        ]


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------

# degree-11 smoothstep: S(0)=0, S(1)=1, first five derivatives vanish at both ends
_SMOOTHSTEP = Polynomial([0, 0, 0, 0, 0, 0, 462, -1980, 3465, -3080, 1386, -252])
_SMOOTHSTEP_DERIVS = [_SMOOTHSTEP.deriv(k) for k in range(6)]


def cutoff_profile(r, derivative: int = 0):
    """Radial profile of the unit cutoff (plateau radius 1, support radius 2)
    or one of its first five radial derivatives."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r <= 1.0
    trans = (r > 1.0) & (r < 2.0)
    if derivative == 0:
        out[inside] = 1.0
        out[trans] = 1.0 - _SMOOTHSTEP(r[trans] - 1.0)
    else:
        out[trans] = -_SMOOTHSTEP_DERIVS[derivative](r[trans] - 1.0)
    return out


@dataclass
class CutoffReport:
    plateau_radius: float
    support_radius: float
    radial_derivative_sup: tuple
    profile: str = "smoothstep degree 11"

    def scaled_sup(self, k: int) -> float:
        return self.radial_derivative_sup[k]


def measure_cutoff_derivatives(m0: float, samples: int = 20001):
    """Dense radial sampling of max |d^k/dr^k chi_{m0}| for k = 0..5."""
    s = np.linspace(0.0, 2.0, samples)
    sups = []
    for k in range(6):
        sups.append(float(np.max(np.abs(cutoff_profile(s, k))) * m0 ** (-k)))
    return tuple(sups)


def make_cutoff(grid, m0: float):
    """Sample chi_{m0}(|x - centre|) on the grid; returns (coefficients, report).

    Requires the support ball 2*m0 to fit inside half the box, except in the
    degenerate all-plateau case (m0 so large that chi == 1 at every sample
    point), which is accepted as a constant field.
    """
    L = grid.box_length
    corner = np.sqrt(3.0) * L / 2.0
    if 2.0 * m0 > L / 2.0 and m0 < corner:
        raise CutoffError(
            f"cutoff support radius 2*m0={2 * m0:g} exceeds half the box L/2={L / 2:g}"
        )
    X, Y, Z = grid.coordinates()
    c = L / 2.0
    r = np.sqrt((X - c) ** 2 + (Y - c) ** 2 + (Z - c) ** 2)
    phys = cutoff_profile(r / m0)
    chi = spectral.forward(grid, phys)
    report = CutoffReport(
        plateau_radius=m0,
        support_radius=2.0 * m0,
        radial_derivative_sup=measure_cutoff_derivatives(m0),
    )
    return chi, report


# ---------------------------------------------------------------------------
# Beltrami annulus field
# ---------------------------------------------------------------------------

@dataclass
class AnnulusRealization:
    wavevectors: np.ndarray  # (count, 3) integer mode triples, mirrors included
    delta_eff: float
    mode_count: int
    delta_target: float


def _helical_basis(k):
    """Positive-helicity unit eigenvector at wavevector k: i k x h = |k| h."""
    k = np.asarray(k, dtype=np.float64)
    a = np.array([1.0, 0.0, 0.0]) if k[0] == 0.0 and k[1] == 0.0 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(k, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k / np.linalg.norm(k), e1)
    return (e1 + 1j * e2) / np.sqrt(2.0)


def make_beltrami(grid, delta_target: float, m1_budget: float):
    """Build v0 supported on the lattice annulus | |k| - 1 | <= delta_target.

    Coefficients take the positive-helicity eigenvector on each selected
    wavevector, conjugate-mirrored so the field is real, with uniform
    amplitude scaled so that sum_k |v0(k)| = m1_budget exactly.
    """
    n = grid.n
    sel = (np.abs(grid.kmag - 1.0) <= delta_target) & (grid.kmag > 0.0)
    # Nyquist modes have no conjugate partner on the lattice
    nyq = np.abs(grid.modes1d) == n // 2
    sel &= ~(nyq[:, None, None] | nyq[None, :, None] | nyq[None, None, :])
    idx = np.argwhere(sel)
    if idx.shape[0] < 6:
        minimal = 2.0 * np.pi / (1.0 + delta_target)
        raise AnnulusError(
            f"only {idx.shape[0]} lattice wavevectors satisfy | |k|-1 | <= {delta_target:g} "
            f"on a box of side {grid.box_length:g}; the smallest box admitting the annulus "
            f"has side {minimal:g}",
            minimal_box_length=minimal,
        )
    modes = grid.modes1d[idx]  # (count, 3) signed integer triples
    # canonical representative of each +-k pair
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))
    modes = modes[order]
    seen = set()
    canonical = []
    for m in modes:
        tm = tuple(int(v) for v in m)
        if tuple(-v for v in tm) in seen:
            continue
        seen.add(tm)
        canonical.append(tm)

    count = 2 * len(canonical)
    amplitude = m1_budget / count
    v0 = np.zeros((3, n, n, n), dtype=np.complex128)
    scale = 2.0 * np.pi / grid.box_length
    for tm in canonical:
        k = scale * np.asarray(tm, dtype=np.float64)
        h = _helical_basis(k)
        i, j, l = (int(v) % n for v in tm)
        ni, nj, nl = ((-int(v)) % n for v in tm)
        v0[:, i, j, l] = amplitude * h
        v0[:, ni, nj, nl] = amplitude * np.conj(h)

    kmags = scale * np.linalg.norm(modes.astype(np.float64), axis=1)
    realization = AnnulusRealization(
        wavevectors=modes,
        delta_eff=float(np.max(np.abs(kmags - 1.0))),
        mode_count=count,
        delta_target=float(delta_target),
    )
    return v0, realization


# ---------------------------------------------------------------------------
# random small part and assembly
# ---------------------------------------------------------------------------

def make_small_part(grid, seed: int, h3_budget: float):
    """Seeded random divergence-free field, band-limited to the cubic mask,
    mean-free, with H^3 norm rescaled to exactly h3_budget."""
    if h3_budget == 0.0:
        return np.zeros((3, grid.n, grid.n, grid.n), dtype=np.complex128)
    rng = np.random.default_rng(seed)
    phys = rng.standard_normal((3, grid.n, grid.n, grid.n))
    spec = spectral.forward(grid, phys)
    scale_spectral(spec, grid.mask_float(3))
    spec[:, 0, 0, 0] = 0.0
    spec = spectral.leray_project(grid, spec)
    norm = spectral.sobolev_norm(grid, spec, 3.0)
    spec *= h3_budget / norm
    return spec


@dataclass
class ProvenanceRecord:
    delta_eff: float
    delta_target: float
    mode_count: int
    norm_u0_h3: float
    norm_b0_h3: float
    norm_u0_linf: float
    norm_b0_linf: float
    projection_defect_u: float
    projection_defect_b: float
    divergence_defect_u: float
    divergence_defect_b: float
    cutoff: CutoffReport | None
    params: SimParams
    notes: list = field(default_factory=list)


def assemble_initial_data(params: SimParams, grid):
    """Assemble (u0, b0) coefficients plus the provenance record."""
    if params.alpha1 == 0.0 and params.alpha2 == 0.0:
        v0 = np.zeros((3, grid.n, grid.n, grid.n), dtype=np.complex128)
        annulus = AnnulusRealization(
            wavevectors=np.zeros((0, 3), dtype=np.int64),
            delta_eff=0.0,
            mode_count=0,
            delta_target=params.delta,
        )
    else:
        v0, annulus = make_beltrami(grid, params.delta, params.m1)

    chi, cutoff_report = make_cutoff(grid, params.m0)
    half = params.small_budget / 2.0
    u01 = make_small_part(grid, params.seed, half)
    b01 = make_small_part(grid, params.seed + 1, half)

    defects = []
    fields = []
    for amp in (params.alpha1, params.alpha2):
        if amp == 0.0:
            fields.append(np.zeros_like(v0))
            defects.append(0.0)
            continue
        raw = spectral.dealiased_product(grid, [chi, amp * v0])
        projected = spectral.leray_project(grid, raw)
        fields.append(projected)
        defects.append(spectral.sobolev_norm(grid, raw - projected, 3.0))
    u0 = u01 + fields[0]
    b0 = b01 + fields[1]

    record = ProvenanceRecord(
        delta_eff=annulus.delta_eff,
        delta_target=annulus.delta_target,
        mode_count=annulus.mode_count,
        norm_u0_h3=spectral.sobolev_norm(grid, u0, 3.0),
        norm_b0_h3=spectral.sobolev_norm(grid, b0, 3.0),
        norm_u0_linf=spectral.winf_norm(grid, u0, 0),
        norm_b0_linf=spectral.winf_norm(grid, b0, 0),
        projection_defect_u=defects[0],
        projection_defect_b=defects[1],
        divergence_defect_u=spectral.divergence_defect(grid, u0),
        divergence_defect_b=spectral.divergence_defect(grid, b0),
        cutoff=cutoff_report,
        params=params,
        notes=[
            "periodic-box truncation of the whole-space construction; "
            f"box side {grid.box_length:g}, cutoff support {2 * params.m0:g}",
        ],
    )
    return u0, b0, record
