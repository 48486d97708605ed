"""Continuous-Fourier oracle for the cross-interaction integral and the
annulus multiplier bounds.

Works directly with the continuous annulus 1-delta <= |xi| <= 1+delta (no
lattice): the coefficient modulus of the annulus field is modelled by a
radial C^2 bump rho normalised so that its integral over R^3 equals the
configured coefficient-l1 budget. Because the interaction kernel depends
only on the radii r = |xi - eta| and s = |eta|, the 6D integral collapses to

    J(delta) = (1/2)|a1 a2| (4 pi)^2 int int Phi(r, s) rho(r) rho(s) r^2 s^2 dr ds

where Phi is the time integral of the symmetrised propagator-difference
kernel |e^{-(nu r^alpha + mu s^2) t} - e^{-(mu r^2 + nu s^alpha) t}|, which
has the closed form |1/a - 1/b| (the two exponentials never cross). The 2D
radial integral is evaluated by adaptive panel refinement with an embedded
Gauss pair (7/15 nodes) to a relative tolerance.
"""

import heapq
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

_G7 = leggauss(7)
_G15 = leggauss(15)


def radial_profile(r, delta: float):
    """Unnormalised C^2 bump supported on [1-delta, 1+delta]."""
    x = (np.asarray(r, dtype=np.float64) - 1.0) / delta
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = (1.0 - x[inside] ** 2) ** 3
    return out


def profile_normalisation(delta: float, m1: float) -> float:
    """Amplitude A with integral над R^3 of A*rho(|xi|) equal to m1."""
    nodes, weights = leggauss(64)
    r = 1.0 + delta * nodes
    w = delta * weights
    raw = 4.0 * np.pi * np.sum(w * radial_profile(r, delta) * r**2)
    return m1 / raw


def _kernel_time_integral(r, s, alpha, nu, mu, t_max):
    """int_0^{t_max} |e^{-a t} - e^{-b t}| dt with a = nu r^alpha + mu s^2,
    b = mu r^2 + nu s^alpha (exact: the integrand never changes sign)."""
    a = nu * r**alpha + mu * s**2
    b = mu * r**2 + nu * s**alpha
    if t_max is None:
        return np.abs(b - a) / (a * b)
    fa = (1.0 - np.exp(-a * t_max)) / a
    fb = (1.0 - np.exp(-b * t_max)) / b
    return np.abs(fa - fb)


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    panels: int
    refinements: int


def adaptive_panel_integral(f, ax, bx, ay, by, rtol=1e-6, max_panels=4096):
    """Adaptive 2D quadrature with an embedded tensor Gauss 7/15 pair.

    `f(x, y)` must accept broadcast arrays. Panels with the largest embedded
    error are split in four until the summed error estimate drops below
    rtol * |integral|.
    """

    def rule(x0, x1, y0, y1):
        vals = []
        for nodes, weights in (_G15, _G7):
            xm, xr = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
            ym, yr = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
            X = xm + xr * nodes[:, None]
            Y = ym + yr * nodes[None, :]
            W = (xr * weights[:, None]) * (yr * weights[None, :])
            vals.append(float(np.sum(W * f(X, Y))))
        high, low = vals
        return high, abs(high - low)

    val, err = rule(ax, bx, ay, by)
    heap = [(-err, 0, (ax, bx, ay, by, val, err))]
    counter = 1
    total_val, total_err = val, err
    refinements = 0
    while total_err > rtol * max(abs(total_val), 1e-300) and len(heap) < max_panels:
        _, _, (x0, x1, y0, y1, pval, perr) = heapq.heappop(heap)
        total_val -= pval
        total_err -= perr
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        for qx0, qx1 in ((x0, xm), (xm, x1)):
            for qy0, qy1 in ((y0, ym), (ym, y1)):
                v, e = rule(qx0, qx1, qy0, qy1)
                total_val += v
                total_err += e
                heapq.heappush(heap, (-e, counter, (qx0, qx1, qy0, qy1, v, e)))
                counter += 1
        refinements += 1
    return QuadratureResult(total_val, total_err, len(heap), refinements)


def fg_cross_integral(
    delta: float,
    alpha: float,
    nu: float,
    mu: float,
    m1: float = 1.0,
    a1: float = 1.0,
    a2: float = 1.0,
    t_max: float | None = None,
    rtol: float = 1e-6,
) -> QuadratureResult:
    """Time-integrated cross-interaction value on the continuous annulus.

    The integrand vanishes identically when the two propagator exponents
    coincide for all radii (alpha = 2 with nu = mu), and the value scales
    linearly in delta to first order.
    """
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 1/2], got {delta}")
    if delta == 0.0:
        return QuadratureResult(0.0, 0.0, 0, 0)
    amp = profile_normalisation(delta, m1)

    def integrand(r, s):
        kern = _kernel_time_integral(r, s, alpha, nu, mu, t_max)
        return (
            kern
            * (amp * radial_profile(r, delta))
            * (amp * radial_profile(s, delta))
            * r**2
            * s**2
        )

    res = adaptive_panel_integral(
        integrand, 1.0 - delta, 1.0 + delta, 1.0 - delta, 1.0 + delta, rtol=rtol
    )
    scale = 0.5 * abs(a1 * a2) * (4.0 * np.pi) ** 2
    return QuadratureResult(
        scale * res.value, scale * res.error_estimate, res.panels, res.refinements
    )


@dataclass
class ScalingReport:
    deltas: tuple
    values: tuple
    exponent: float
    fit_residual: float


def delta_scaling_report(
    alpha: float,
    nu: float,
    mu: float,
    deltas=(0.25, 0.125, 0.0625),
    m1: float = 1.0,
    t_max: float | None = None,
    rtol: float = 1e-6,
) -> ScalingReport:
    """Fit the exponent p in integral ~ delta^p over the given deltas."""
    values = [fg_cross_integral(d, alpha, nu, mu, m1=m1, t_max=t_max, rtol=rtol).value
              for d in deltas]
    logs_d = np.log(np.asarray(deltas))
    logs_v = np.log(np.asarray(values))
    coeffs, res = np.polyfit(logs_d, logs_v, 1, full=True)[:2]
    residual = float(np.sqrt(res[0])) if len(res) else 0.0
    return ScalingReport(
        deltas=tuple(deltas),
        values=tuple(values),
        exponent=float(coeffs[0]),
        fit_residual=residual,
    )


# ---------------------------------------------------------------------------
# annulus multiplier bounds
# ---------------------------------------------------------------------------

@dataclass
class MultiplierBoundsReport:
    delta: float
    alpha: float
    sup_quadratic_over_frac: float   # sup | r^2 - s^2 | / r^alpha
    sup_frac_over_quadratic: float   # sup | r^alpha - s^alpha | / r^2
    ratio_to_delta: tuple
    stated_bounds: tuple             # idealized constants (3^{1-alpha} delta, 8 alpha delta)
    violates_stated: tuple


def multiplier_bounds_check(delta: float, alpha: float, npts: int = 801) -> MultiplierBoundsReport:
    """Brute-force maximisation of the two annulus multiplier expressions
    over a dense grid of radii in [1-delta, 1+delta]^2.

    Realized suprema are reported next to the idealized first-order constants
    3^{1-alpha} delta and 8 alpha delta with violation flags; the constants
    are reference values for the report, never asserted."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 1/2], got {delta}")
    if not 0.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    if delta == 0.0:
        r = np.array([1.0])
        s = np.array([1.0])
    else:
        r = np.linspace(1.0 - delta, 1.0 + delta, npts)
        s = r
    R = r[:, None]
    S = s[None, :]
    expr1 = np.abs(R**2 - S**2) / R**alpha
    expr2 = np.abs(R**alpha - S**alpha) / R**2
    sup1 = float(np.max(expr1))
    sup2 = float(np.max(expr2))
    stated = (3.0 ** (1.0 - alpha) * delta, 8.0 * alpha * delta)
    tiny = 1e-12
    return MultiplierBoundsReport(
        delta=delta,
        alpha=alpha,
        sup_quadratic_over_frac=sup1,
        sup_frac_over_quadratic=sup2,
        ratio_to_delta=(sup1 / delta if delta > 0 else 0.0,
                        sup2 / delta if delta > 0 else 0.0),
        stated_bounds=stated,
        violates_stated=(sup1 > stated[0] + tiny, sup2 > stated[1] + tiny),
    )
