"""Helmholtz projection and the surface pressure operator.

The projection P removes the gradient part of a velocity field: q solves
laplacian(q) = div(u) with q = 0 on the free surface, mode by mode, and
P u = u - grad(q). The operator Q produces the pressure contribution of
the free surface: its boundary data is mu/kappa^2 times the quadratic-
coordinate contraction of the transversal strain entries, harmonically
extended into the cylinder.

Azimuthal bands: div(u) lives one band above u and q inherits that band;
grad(q) is formed there and truncated back, so the reported reconstruction
residual honestly reflects what the stored band can represent.
"""

import dataclasses

import numpy as np

from .fields import (
    ScalarField,
    VectorField,
    _band,
    _dx,
    _dy,
    _mul_x,
    _mul_y,
    _pad,
    _truncate,
    grad,
    norm_Hkp,
    norm_L2,
    random_smooth_vector,
    zeros_scalar,
    zeros_vector,
)
from .modesolve import laplace_solve_channels


@dataclasses.dataclass
class DecompositionResult:
    """Outcome of the Helmholtz projection u = solenoidal + grad(potential).

    residual is the relative reconstruction defect
    ||u - solenoidal - grad(potential)|| / ||u|| in L^2.
    """

    solenoidal: VectorField
    potential: ScalarField
    residual: float


def _div_slice(t, varr, beta):
    """Divergence of one axial slice varr (..., 3, n_m, n_r), band + 1."""
    s = _dx(t, varr[..., 0, :, :]) + _dy(t, varr[..., 1, :, :])
    s += _pad(1j * beta * varr[..., 2, :, :], 1)
    return s


def _potential_slice(ws, n, varr):
    """Pressure potential of one axial slice and its gradient.

    Returns (q, gx, gy, gz): q on band + 1, gradient components truncated
    to the band of varr.
    """
    t = ws.tables
    band = _band(varr)
    beta = ws.config.beta(n)
    q = laplace_solve_channels(ws, n, _div_slice(t, varr, beta))
    gx = _truncate(_dx(t, q), band)
    gy = _truncate(_dy(t, q), band)
    gz = 1j * beta * _truncate(q, band)
    return q, gx, gy, gz


def project_P(ws, u):
    """Helmholtz projection of a velocity field.

    Args:
        ws: Workspace.
        u: VectorField.

    Returns:
        DecompositionResult with P u, the potential, and the relative
        reconstruction residual.
    """
    cfg = ws.config
    sol = zeros_vector(cfg)
    pot = zeros_scalar(cfg)
    for i_n in range(cfg.n_modes_z):
        n = i_n - cfg.n_z
        varr = u.coeffs[:, i_n]
        q, gx, gy, gz = _potential_slice(ws, n, varr)
        sol.coeffs[0, i_n] = varr[0] - gx
        sol.coeffs[1, i_n] = varr[1] - gy
        sol.coeffs[2, i_n] = varr[2] - gz
        pot.coeffs[i_n] = _truncate(q, cfg.n_theta)
    sol.real_flag = False
    pot.real_flag = False
    unorm = norm_L2(u)
    if unorm == 0.0:
        residual = 0.0
    else:
        defect = u - sol - grad(pot)
        residual = norm_L2(defect) / unorm
    return DecompositionResult(sol, pot, residual)


def projector_norm_Hk(ws, k, sample_count, rng):
    """Empirical H^k operator norm of the projection.

    Args:
        k: Sobolev order, one of 0, 1, 2.
        sample_count: number of random pole-regular samples, at least 1.
        rng: numpy Generator.

    Returns:
        max over samples of ||P u||_{H^k_p} / ||u||_{H^k_p}.
    """
    if k not in (0, 1, 2):
        raise ValueError("projector norm is tracked for k in {0, 1, 2}")
    if sample_count < 1:
        raise ValueError("projector_norm_Hk requires sample_count >= 1")
    worst = 0.0
    for _ in range(sample_count):
        u = random_smooth_vector(ws.config, rng, real=False)
        denom = norm_Hkp(u, k)
        if denom == 0.0:
            continue
        worst = max(worst, norm_Hkp(project_P(ws, u).solenoidal, k) / denom)
    return worst


def _q_slice(ws, n, varr, out_band):
    """Surface pressure potential of one axial slice.

    varr has shape (..., 3, n_m, n_r); the result is harmonically extended
    boundary data on band out_band (content genuinely occupies the input
    band + 3).
    """
    t = ws.tables
    cfg = ws.config
    v1 = varr[..., 0, :, :]
    v2 = varr[..., 1, :, :]
    e11 = 2.0 * _dx(t, v1)
    e12 = _dy(t, v1) + _dx(t, v2)
    e22 = 2.0 * _dy(t, v2)
    data = _mul_x(t, _mul_x(t, e11)) + 2.0 * _mul_x(t, _mul_y(t, e12))
    data += _mul_y(t, _mul_y(t, e22))
    data *= cfg.mu / cfg.kappa**2
    tr = data[..., :, 0]
    ext = laplace_solve_channels(ws, n, np.zeros_like(data), tr)
    return _truncate(ext, out_band)


def operator_Q(ws, v):
    """Free-surface pressure potential Q v as a ScalarField."""
    cfg = ws.config
    out = zeros_scalar(cfg)
    for i_n in range(cfg.n_modes_z):
        n = i_n - cfg.n_z
        out.coeffs[i_n] = _q_slice(ws, n, v.coeffs[:, i_n], cfg.n_theta)
    out.real_flag = False
    return out
