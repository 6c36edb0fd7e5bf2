import numpy as np
import pytest

import jetstokes as js
from jetstokes.discretization import tables_for
from jetstokes.fields import (
    constant_scalar,
    random_smooth_scalar,
    random_zero_trace_potential,
    scalar_from_profile,
)
from jetstokes.modesolve import dirichlet_residual
from jetstokes.rng import stream

import oracles


def test_poisson_constant_forcing(ws_small):
    cfg = ws_small.config
    f = constant_scalar(cfg, 1.0)
    u = js.solve_mode_dirichlet(ws_small, 0, f)
    r = ws_small.tables.r
    ref = scalar_from_profile(
        cfg, 0, 0, oracles.poisson_const_profile(r, cfg.kappa), real_flag=True
    )
    assert js.norm_L2(u - ref) / js.norm_L2(ref) < 1e-12
    # and the solve really inverts the laplacian
    back = js.laplacian(u)
    assert js.norm_L2(back - f) / js.norm_L2(f) < 1e-10


def test_bessel_mode_against_series(ws_small):
    cfg = ws_small.config
    beta = cfg.beta(1)
    f = scalar_from_profile(cfg, 1, 0, np.ones(cfg.n_r))
    u = js.solve_mode_dirichlet(ws_small, 1, f)
    ref = scalar_from_profile(
        cfg, 1, 0, oracles.bessel_mode_profile(ws_small.tables.r, cfg.kappa, beta)
    )
    assert js.norm_L2(u - ref) / js.norm_L2(ref) < 1e-11


def test_bessel_mode_against_finite_volume(ws_small):
    cfg = ws_small.config
    beta = cfg.beta(1)
    f = scalar_from_profile(cfg, 1, 0, np.ones(cfg.n_r))
    u = js.solve_mode_dirichlet(ws_small, 1, f)
    got = u.coeffs[cfg.n_z + 1, cfg.n_theta, :].real
    fd = oracles.fd_mode_solve_richardson(
        0, beta, cfg.kappa, lambda r: np.ones_like(r), ws_small.tables.r
    )
    assert np.max(np.abs(got - fd)) < 1e-7


def test_convergence_under_doubling():
    errs = []
    for nr in (8, 16):
        cfg = js.DomainConfig(n_r=nr, n_theta=1, n_z=1)
        ws = js.Workspace(cfg)
        beta = cfg.beta(1)
        f = scalar_from_profile(cfg, 1, 0, np.ones(nr))
        u = js.solve_mode_dirichlet(ws, 1, f)
        ref = scalar_from_profile(
            cfg, 1, 0, oracles.bessel_mode_profile(ws.tables.r, cfg.kappa, beta)
        )
        errs.append(js.norm_L2(u - ref) / js.norm_L2(ref))
    assert errs[1] < errs[0] / 10.0 or errs[0] < 1e-12


def test_harmonic_extension_closed_forms(ws_small):
    cfg = ws_small.config
    r = ws_small.tables.r
    band = cfg.n_theta

    def trace_with(n, m, value):
        coeffs = np.zeros((cfg.n_modes_z, 2 * band + 1), dtype=complex)
        coeffs[cfg.n_z + n, band + m] = value
        return js.TraceField(cfg, coeffs, band)

    # constant boundary data extends to the constant
    u = js.harmonic_extension(ws_small, trace_with(0, 0, 1.0))
    assert js.norm_L2(u - constant_scalar(cfg, 1.0)) < 1e-12

    # azimuthal data r-profile (r/kappa)^|m|
    u = js.harmonic_extension(ws_small, trace_with(0, 1, 1.0))
    ref = scalar_from_profile(cfg, 0, 1, r / cfg.kappa)
    assert js.norm_L2(u - ref) / js.norm_L2(ref) < 1e-12

    # axial data: modified Bessel profile I0(beta r)/I0(beta kappa)
    beta = cfg.beta(1)
    u = js.harmonic_extension(ws_small, trace_with(1, 0, 1.0))
    prof = oracles.bessel_i0(beta * r) / float(oracles.bessel_i0(beta * cfg.kappa))
    ref = scalar_from_profile(cfg, 1, 0, prof)
    assert js.norm_L2(u - ref) / js.norm_L2(ref) < 1e-11


def test_solver_linearity(ws_small):
    cfg = ws_small.config
    rng = stream(21, "tests")
    f = random_smooth_scalar(cfg, rng)
    g = random_smooth_scalar(cfg, rng)
    a, b = 0.7, -1.3
    lhs = js.solve_mode_dirichlet(ws_small, 1, f * a + g * b)
    rhs = js.solve_mode_dirichlet(ws_small, 1, f) * a + js.solve_mode_dirichlet(
        ws_small, 1, g
    ) * b
    assert js.norm_L2(lhs - rhs) < 1e-11 * max(js.norm_L2(lhs), 1.0)


def test_maximum_principle(ws_small):
    cfg = ws_small.config
    r = ws_small.tables.r
    f = scalar_from_profile(cfg, 0, 0, -(1.0 + r**2), real_flag=True)
    u = js.solve_mode_dirichlet(ws_small, 0, f)
    prof = u.coeffs[cfg.n_z, cfg.n_theta, :]
    assert np.max(np.abs(prof.imag)) < 1e-13
    assert np.min(prof.real) > -1e-12


def test_mode_laplacian_self_adjoint(ws_small):
    cfg = ws_small.config
    rng = stream(22, "tests")
    u = random_zero_trace_potential(cfg, rng)
    v = random_zero_trace_potential(cfg, rng)
    a = js.inner_product_Hkp(js.laplacian(u), v, 0)
    b = js.inner_product_Hkp(u, js.laplacian(v), 0)
    scale = js.norm_L2(js.laplacian(u)) * js.norm_L2(v)
    assert abs(a - b) / scale < 1e-10


def test_dirichlet_residual_and_tolerance(ws_small):
    cfg = ws_small.config
    f = constant_scalar(cfg, 1.0)
    u = js.solve_mode_dirichlet(ws_small, 0, f)
    assert dirichlet_residual(ws_small, 0, f, u) < cfg.solver_tol
    strict = js.DomainConfig(n_r=12, n_theta=3, n_z=2, solver_tol=1e-30)
    ws = js.Workspace(strict)
    with pytest.raises(RuntimeError, match="modesolve"):
        js.solve_mode_dirichlet(ws, 0, constant_scalar(strict, 1.0))


def test_stability_constant_closed_form(ws_small):
    cfg = ws_small.config
    f = constant_scalar(cfg, 1.0)
    u = js.solve_mode_dirichlet(ws_small, 0, f)
    ratio = js.norm_Hkp(u, 2) / js.norm_L2(f)
    assert ratio == pytest.approx(
        oracles.stability_ratio_const_forcing(cfg.kappa), rel=1e-11
    )


def test_stability_constant_sampler(ws_small):
    got = js.stability_constant(ws_small, 0, 4, stream(6, "stability-samples"))
    assert np.isfinite(got) and got > 0.0
    again = js.stability_constant(ws_small, 0, 4, stream(6, "stability-samples"))
    assert got == again
    with pytest.raises(ValueError):
        js.stability_constant(ws_small, 0, 0, stream(6, "stability-samples"))


def test_chebyshev_derivative_exactness(cfg_small):
    t = tables_for(cfg_small)
    r = t.r
    # even polynomial through the even-parity fold
    p = r**4 - 0.3 * r**2
    dp = t.ddr(1) @ p
    assert np.max(np.abs(dp - (4 * r**3 - 0.6 * r))) < 1e-11
    # odd polynomial through the odd-parity fold
    q = r**3
    dq = t.ddr(-1) @ q
    assert np.max(np.abs(dq - 3 * r**2)) < 1e-11


def test_quadrature_gram_against_gauss(cfg_small):
    t = tables_for(cfg_small)
    # int_0^kappa r^2 * r dr for the profile p(r) = r (odd parity)
    p = t.r.astype(complex)
    got = float(np.real(np.conj(p) @ (t.gram(-1) @ p)))
    assert got == pytest.approx(cfg_small.kappa**4 / 4.0, rel=1e-13)
    # int_0^kappa (r^2)^2 * r dr for p(r) = r^2 (even parity)
    p = (t.r**2).astype(complex)
    got = float(np.real(np.conj(p) @ (t.gram(1) @ p)))
    assert got == pytest.approx(cfg_small.kappa**6 / 6.0, rel=1e-13)


def test_pole_rows_annihilate_smooth_basis(cfg_small):
    t = tables_for(cfg_small)
    for m_abs in (2, 3, 5):
        rows = t.pole_rows(m_abs)
        if rows.shape[0] == 0:
            continue
        basis = t.smooth_basis(m_abs)
        assert np.max(np.abs(rows @ basis)) < 1e-12
