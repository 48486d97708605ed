"""Periodic spectral core: grid, transforms, operators, norms, dealiasing.

Conventions
-----------
* The box is [0, L)^3 sampled on n points per axis; fields are stored either
  as real samples (shape (..., n, n, n)) or as complex coefficients on the
  full integer wavevector lattice m in [-n/2, n/2)^3 in numpy FFT ordering.
* Coefficients use the physical-amplitude convention: c(k) multiplies
  e^{i k.x} with k = (2 pi / L) m, so forward = fftn(samples) / n^3.
* Real fields have Hermitian-symmetric coefficients c(-k) = conj(c(k))
  wherever both lattice points exist (Nyquist planes are self-paired).
* Dealias masks: |m_i| < n/3 for quadratic products, |m_i| < n/4 for cubic
  products; with those masks, pointwise grid products equal the exact
  convolution of the masked coefficients on the masked band.

The half-spectrum attributes (suffix `_half`, z axis truncated to n//2 + 1)
back the real-FFT fast path used by the dynamics and time integration; all
public operators work on the full lattice.
"""

import itertools

import numpy as np
import scipy.fft as sfft

from .kernels import scale_spectral

_FFT_WORKERS = 1


def set_fft_workers(nworkers: int):
    """Set the FFT worker-thread count (results are thread-count independent)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(nworkers))


def get_fft_workers() -> int:
    return _FFT_WORKERS


class GridError(ValueError):
    pass


class Grid:
    """Periodic box geometry, wavevector lattice and multiplier arrays."""

    def __init__(self, n: int, box_length: float):
        if n < 8:
            raise GridError(f"grid size n={n} below minimum 8")
        if n & (n - 1) != 0:
            raise GridError(f"grid size n={n} is not a power of two")
        if box_length <= 0:
            raise GridError(f"box_length must be positive, got {box_length}")
        self.n = int(n)
        self.box_length = float(box_length)
        self.spacing = self.box_length / self.n
        self.nhalf = self.n // 2 + 1

        # integer mode numbers in FFT order: 0..n/2-1, -n/2..-1
        self.modes1d = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        self.k1d = (2.0 * np.pi / self.box_length) * self.modes1d
        kx = self.k1d[:, None, None]
        ky = self.k1d[None, :, None]
        kz = self.k1d[None, None, :]
        self.kvec = (kx, ky, kz)
        self.k2 = (kx * kx + ky * ky + kz * kz).astype(np.float64)
        self.kmag = np.sqrt(self.k2)
        self.k2_safe = self.k2.copy()
        self.k2_safe[0, 0, 0] = 1.0

        absm = np.abs(self.modes1d)
        keep_q = absm < self.n / 3.0
        keep_c = absm < self.n / 4.0
        self.dealias_mask_quadratic = (
            keep_q[:, None, None] & keep_q[None, :, None] & keep_q[None, None, :]
        )
        self.dealias_mask_cubic = (
            keep_c[:, None, None] & keep_c[None, :, None] & keep_c[None, None, :]
        )
        self._mask_f = {
            2: self.dealias_mask_quadratic.astype(np.float64),
            3: self.dealias_mask_cubic.astype(np.float64),
        }

        # half-spectrum (rfft layout) mirrors of the multiplier arrays
        h = self.nhalf
        self.kz_half = self.k1d[:h].copy()
        self.kvec_half = (
            self.k1d[:, None, None],
            self.k1d[None, :, None],
            self.kz_half[None, None, :],
        )
        self.k2_half = np.ascontiguousarray(self.k2[:, :, :h])
        self.kmag_half = np.sqrt(self.k2_half)
        self.k2_safe_half = self.k2_half.copy()
        self.k2_safe_half[0, 0, 0] = 1.0
        self._mask_f_half = {
            2: np.ascontiguousarray(self._mask_f[2][:, :, :h]),
            3: np.ascontiguousarray(self._mask_f[3][:, :, :h]),
        }
        # Parseval weights on the half spectrum: planes z=0 and z=n/2 are
        # self-paired, every other column stands in for a conjugate pair.
        w = np.full((self.n, self.n, h), 2.0)
        w[:, :, 0] = 1.0
        w[:, :, h - 1] = 1.0
        self.parseval_weight_half = w

        # mirror indices for expanding an rfft half-spectrum to the full lattice
        self._neg = (-np.arange(self.n)) % self.n
        self._hi = np.arange(h, self.n)

        self._sobolev_cache = {}
        self._kpow_cache = {}

    def coordinates(self):
        """Sample coordinates X, Y, Z of shape (n, n, n), box [0, L)."""
        x1 = np.arange(self.n) * self.spacing
        return np.meshgrid(x1, x1, x1, indexing="ij")

    def mask_float(self, order: int, half: bool = False):
        return (self._mask_f_half if half else self._mask_f)[order]

    def sobolev_weight(self, s: float):
        w = self._sobolev_cache.get(s)
        if w is None:
            w = (1.0 + self.k2) ** s
            self._sobolev_cache[s] = w
        return w

    def kpow_half(self, alpha: float):
        """Cached |k|^alpha on the half spectrum (0^0 = 1 by convention)."""
        w = self._kpow_cache.get(alpha)
        if w is None:
            w = self.kmag_half**alpha
            self._kpow_cache[alpha] = w
        return w

    def __repr__(self):
        return f"Grid(n={self.n}, box_length={self.box_length:g})"


def make_grid(n: int, box_length: float) -> Grid:
    """Build the periodic grid; n must be a power of two, at least 8."""
    return Grid(n, box_length)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _check_phys(grid, phys):
    if phys.shape[-3:] != (grid.n,) * 3:
        raise ValueError(f"physical field shape {phys.shape} does not match grid n={grid.n}")


def _check_spec(grid, spec):
    if spec.shape[-3:] != (grid.n,) * 3:
        raise ValueError(f"spectral field shape {spec.shape} does not match grid n={grid.n}")


def forward(grid, phys):
    """Real samples -> full-lattice coefficients (exactly Hermitian)."""
    _check_phys(grid, phys)
    return expand_half(grid, forward_half(grid, phys))


def inverse(grid, spec):
    """Full-lattice coefficients -> real samples.

    Assumes Hermitian-symmetric coefficients (a real field); the redundant
    half of the lattice is not consulted.
    """
    _check_spec(grid, spec)
    return inverse_half(grid, np.ascontiguousarray(spec[..., : grid.nhalf]))


def forward_half(grid, phys):
    """Real samples -> rfft half-spectrum coefficients."""
    return sfft.rfftn(phys, axes=(-3, -2, -1), norm="forward", workers=_FFT_WORKERS)


def inverse_half(grid, spec_half):
    """rfft half-spectrum coefficients -> real samples."""
    return sfft.irfftn(
        spec_half, s=(grid.n,) * 3, axes=(-3, -2, -1), norm="forward", workers=_FFT_WORKERS
    )


def expand_half(grid, half):
    """Expand an rfft half-spectrum to the full lattice via conjugate mirror."""
    n, h = grid.n, grid.nhalf
    out_shape = half.shape[:-3] + (n, n, n)
    full = np.empty(out_shape, dtype=np.complex128)
    full[..., :h] = half
    neg, hi = grid._neg, grid._hi
    flat = full.reshape(-1, n, n, n)
    fhalf = half.reshape(-1, n, n, h)
    for comp in range(flat.shape[0]):
        flat[comp][:, :, hi] = np.conj(fhalf[comp][np.ix_(neg, neg, n - hi)])
    return full


def halve(grid, spec):
    """Contiguous copy of the non-redundant half of a full-lattice field."""
    return np.ascontiguousarray(spec[..., : grid.nhalf])


# ---------------------------------------------------------------------------
# differential operators (exact multiplier calculus)
# ---------------------------------------------------------------------------

def frac_laplacian(grid, spec, alpha: float):
    """Apply |k|^alpha. At k=0 the multiplier is 0 for alpha>0 and 1 for alpha=0
    (so alpha=0 degenerates to the identity, i.e. plain damping in the PDE)."""
    if not 0.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    _check_spec(grid, spec)
    return spec * grid.kmag**alpha


def gradient(grid, scalar):
    """Spectral gradient of a scalar: (ik_x c, ik_y c, ik_z c)."""
    _check_spec(grid, scalar)
    kx, ky, kz = grid.kvec
    return np.stack([1j * kx * scalar, 1j * ky * scalar, 1j * kz * scalar])


def divergence(grid, vec):
    _check_spec(grid, vec)
    kx, ky, kz = grid.kvec
    return 1j * (kx * vec[0] + ky * vec[1] + kz * vec[2])


def curl(grid, vec):
    _check_spec(grid, vec)
    kx, ky, kz = grid.kvec
    return np.stack(
        [
            1j * (ky * vec[2] - kz * vec[1]),
            1j * (kz * vec[0] - kx * vec[2]),
            1j * (kx * vec[1] - ky * vec[0]),
        ]
    )


def leray_project(grid, vec):
    """Project onto divergence-free fields: c -> c - k (k.c) / |k|^2 (k=0 kept)."""
    _check_spec(grid, vec)
    kx, ky, kz = grid.kvec
    kdotc = (kx * vec[0] + ky * vec[1] + kz * vec[2]) / grid.k2_safe
    return np.stack([vec[0] - kx * kdotc, vec[1] - ky * kdotc, vec[2] - kz * kdotc])


def heat_propagator(grid, spec, t: float, coeff: float, alpha: float):
    """Multiply by e^{-coeff |k|^alpha t} (exact semigroup)."""
    if t < 0:
        raise ValueError(f"propagator time must be nonnegative, got {t}")
    if not 0.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    _check_spec(grid, spec)
    return spec * np.exp(-coeff * t * grid.kmag**alpha)


# ---------------------------------------------------------------------------
# norms and inner products
# ---------------------------------------------------------------------------

def l2_inner(grid, a_spec, b_spec) -> float:
    """L2 inner product of two real fields given by coefficients."""
    return float(grid.box_length**3 * np.real(np.vdot(b_spec, a_spec)))


def l2_norm(grid, spec) -> float:
    return float(np.sqrt(grid.box_length**3) * np.linalg.norm(spec))


def l2_norm_half(grid, spec_half) -> float:
    """L2 norm from half-spectrum coefficients of a real field."""
    total = np.sum(grid.parseval_weight_half * np.abs(spec_half) ** 2)
    return float(np.sqrt(grid.box_length**3 * total))


def sobolev_norm(grid, spec, s: float) -> float:
    """H^s norm: sqrt( L^3 sum_k (1+|k|^2)^s |c(k)|^2 ), over all components."""
    if s == 0.0:
        return l2_norm(grid, spec)
    w = grid.sobolev_weight(s)
    total = np.sum(w * np.abs(spec) ** 2)
    return float(np.sqrt(grid.box_length**3 * total))


def pad_spectrum(grid, spec, refine: int):
    """Zero-pad coefficients onto a refine-times finer lattice; returns the
    padded physical samples (used for W^{k,inf} sampling)."""
    if refine == 1:
        return inverse(grid, spec)
    nbig = refine * grid.n
    src = grid.modes1d
    dst = src % nbig
    shape = spec.shape[:-3] + (nbig, nbig, nbig)
    big = np.zeros(shape, dtype=np.complex128)
    big[..., dst[:, None, None], dst[None, :, None], dst[None, None, :]] = spec
    phys = sfft.ifftn(big, axes=(-3, -2, -1), workers=_FFT_WORKERS) * nbig**3
    return np.real(phys)


def winf_norm(grid, spec, kmax: int, refine: int = 2) -> float:
    """Grid-sampled W^{kmax,inf} norm.

    Maximum over sample points and multi-indices |beta| <= kmax of the
    pointwise magnitude of d^beta f (Euclidean over vector components).
    Values are sampled on a `refine`-times finer grid and therefore
    under-estimate the continuum supremum; the effective sample spacing is
    grid.spacing / refine.
    """
    if not 0 <= kmax <= 5:
        raise ValueError(f"kmax must lie in 0..5, got {kmax}")
    _check_spec(grid, spec)
    best = 0.0
    for order in range(kmax + 1):
        for beta in itertools.combinations_with_replacement(range(3), order):
            mult = np.ones((), dtype=np.complex128)
            for ax in beta:
                mult = mult * (1j * grid.kvec[ax])
            phys = pad_spectrum(grid, spec * mult, refine)
            if phys.ndim == 4:
                mag2 = np.sum(phys * phys, axis=0)
            else:
                mag2 = phys * phys
            best = max(best, float(np.sqrt(np.max(mag2))))
    return best


# ---------------------------------------------------------------------------
# dealiased products
# ---------------------------------------------------------------------------

def dealiased_product(grid, factors, order: int | None = None):
    """Pointwise product of 2 or 3 fields, alias-free on the masked band.

    Factors are given by their full-lattice coefficients (scalar or vector;
    shapes broadcast in physical space). The matching dealias mask (1/3 rule
    for two factors, 1/4 rule for three) is applied to every input and to the
    output, so the result equals the exact convolution of the masked inputs
    restricted to the masked band.
    """
    if len(factors) not in (2, 3):
        raise ValueError(f"dealiased_product takes 2 or 3 factors, got {len(factors)}")
    if order is None:
        order = len(factors)
    if order not in (2, 3):
        raise ValueError(f"mask order must be 2 or 3, got {order}")
    mask = grid.mask_float(order)
    phys = None
    for f in factors:
        _check_spec(grid, f)
        p = inverse(grid, f * mask)
        phys = p if phys is None else phys * p
    out = forward(grid, phys)
    scale_spectral(out, mask)
    return out


# ---------------------------------------------------------------------------
# field diagnostics
# ---------------------------------------------------------------------------

def hermitian_defect(grid, spec) -> float:
    """Max |c(-k) - conj(c(k))| over the lattice, relative to max |c|."""
    neg = grid._neg
    mirrored = spec[..., neg[:, None, None], neg[None, :, None], neg[None, None, :]]
    denom = float(np.max(np.abs(spec)))
    if denom == 0.0:
        return 0.0
    return float(np.max(np.abs(mirrored - np.conj(spec))) / denom)


def divergence_defect(grid, vec) -> float:
    """H^3-relative size of the divergence of a vector field."""
    denom = sobolev_norm(grid, vec, 3.0)
    if denom == 0.0:
        return 0.0
    div = divergence(grid, vec)
    return sobolev_norm(grid, div, 3.0) / denom
