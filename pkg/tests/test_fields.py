import math

import numpy as np
import pytest

import jetstokes as js
from jetstokes.fields import (
    analyze,
    conj_reflect,
    constant_scalar,
    constant_vector,
    rigid_rotation,
    random_smooth_scalar,
    random_smooth_vector,
    random_zero_trace_potential,
    scalar_from_profile,
    sym_grad,
    synthesize,
    trace_norm_L2,
    zeros_scalar,
    zeros_vector,
)
from jetstokes.rng import stream

import oracles


def _x_field(cfg):
    """The scalar x = r cos(theta) in coefficient form."""
    t = np.asarray(js_tables_r(cfg))
    f = zeros_scalar(cfg)
    f.coeffs[cfg.n_z, cfg.n_theta + 1, :] = 0.5 * t
    f.coeffs[cfg.n_z, cfg.n_theta - 1, :] = 0.5 * t
    return f


def js_tables_r(cfg):
    from jetstokes.discretization import tables_for

    return tables_for(cfg).r


def test_constant_l2_norm(cfg_small):
    c = constant_scalar(cfg_small, 2.0)
    want = oracles.const_norm_sq(2.0, cfg_small.kappa, cfg_small.ell)
    assert js.norm_L2(c) ** 2 == pytest.approx(want, rel=1e-13)


def test_axial_wave_h1_norm(cfg_small):
    u = scalar_from_profile(cfg_small, 1, 0, np.ones(cfg_small.n_r))
    got = js.inner_product_Hkp(u, u, 1).real
    want = oracles.axial_wave_h1_norm_sq(cfg_small.kappa, cfg_small.ell)
    assert got == pytest.approx(want, rel=1e-13)


def test_radial_monomial_norm(cfg_small):
    # ||r e^{i theta}||^2 = ell * 2 pi * kappa^4 / 4
    r = js_tables_r(cfg_small)
    u = scalar_from_profile(cfg_small, 0, 1, r)
    want = cfg_small.ell * 2.0 * math.pi * cfg_small.kappa**4 / 4.0
    assert js.norm_L2(u) ** 2 == pytest.approx(want, rel=1e-13)


def test_grad_of_x_is_e1(cfg_small):
    u = _x_field(cfg_small)
    g = js.grad(u)
    e1 = constant_vector(cfg_small, (1.0, 0.0, 0.0))
    assert js.norm_L2(g - e1) < 1e-13


def test_div_closed_forms(cfg_small):
    rot = rigid_rotation(cfg_small)
    assert js.norm_L2(js.div(rot)) < 1e-13
    # (x, y, 0) has divergence 2
    v = zeros_vector(cfg_small)
    x = _x_field(cfg_small)
    v.coeffs[0] = x.coeffs
    r = js_tables_r(cfg_small)
    v.coeffs[1, cfg_small.n_z, cfg_small.n_theta + 1, :] = -0.5j * r
    v.coeffs[1, cfg_small.n_z, cfg_small.n_theta - 1, :] = 0.5j * r
    d = js.div(v)
    two = constant_scalar(cfg_small, 2.0)
    assert js.norm_L2(d - two) < 1e-12


def test_laplacian_closed_form(cfg_small):
    r = js_tables_r(cfg_small)
    u = scalar_from_profile(
        cfg_small, 0, 0, oracles.poisson_const_profile(r, cfg_small.kappa)
    )
    lap = js.laplacian(u)
    one = constant_scalar(cfg_small, 1.0)
    assert js.norm_L2(lap - one) < 1e-12
    # harmonic: laplacian of x vanishes
    assert js.norm_L2(js.laplacian(_x_field(cfg_small))) < 1e-11


def test_div_grad_equals_laplacian(cfg_small):
    phi = random_smooth_scalar(cfg_small, stream(11, "tests"))
    a = js.div(js.grad(phi))
    b = js.laplacian(phi)
    assert js.norm_L2(a - b) < 1e-10


def test_sym_grad_closed_forms(cfg_small):
    rot = rigid_rotation(cfg_small)
    e = sym_grad(rot)
    assert max(js.norm_L2(e[i][j]) for i in range(3) for j in range(3)) < 1e-13
    # shear (x, -y, 0): E_11 = 2, E_22 = -2, everything else 0
    v = zeros_vector(cfg_small)
    x = _x_field(cfg_small)
    v.coeffs[0] = x.coeffs
    r = js_tables_r(cfg_small)
    v.coeffs[1, cfg_small.n_z, cfg_small.n_theta + 1, :] = 0.5j * r
    v.coeffs[1, cfg_small.n_z, cfg_small.n_theta - 1, :] = -0.5j * r
    e = sym_grad(v)
    two = constant_scalar(cfg_small, 2.0)
    assert js.norm_L2(e[0][0] - two) < 1e-12
    assert js.norm_L2(e[1][1] + two) < 1e-12
    for i, j in ((0, 1), (0, 2), (1, 2)):
        assert js.norm_L2(e[i][j]) < 1e-12


def test_inner_product_structure(cfg_small):
    rng = stream(3, "tests")
    u = random_smooth_vector(cfg_small, rng, real=False)
    v = random_smooth_vector(cfg_small, rng, real=False)
    w = random_smooth_vector(cfg_small, rng, real=False)
    a = js.inner_product_Hkp(u, v, 0)
    b = js.inner_product_Hkp(v, u, 0)
    assert a == pytest.approx(np.conj(b), rel=1e-12)
    lin = js.inner_product_Hkp(u + w * (0.3 + 0.1j), v, 0)
    sep = js.inner_product_Hkp(u, v, 0) + (0.3 + 0.1j) * js.inner_product_Hkp(w, v, 0)
    assert lin == pytest.approx(sep, rel=1e-11)
    n0 = js.norm_Hkp(u, 0)
    n1 = js.norm_Hkp(u, 1)
    n2 = js.norm_Hkp(u, 2)
    assert n0 <= n1 <= n2


def test_sobolev_order_validation(cfg_small):
    u = constant_scalar(cfg_small, 1.0)
    with pytest.raises(ValueError):
        js.norm_Hkp(u, 5)
    with pytest.raises(ValueError):
        js.SobolevIndex(-1)


def test_trace_closed_form(cfg_small):
    r = js_tables_r(cfg_small)
    u = scalar_from_profile(cfg_small, 0, 0, r**2, real_flag=True)
    tr = js.trace_SF(u)
    want = np.zeros_like(tr.coeffs)
    want[cfg_small.n_z, cfg_small.n_theta] = cfg_small.kappa**2
    assert np.allclose(tr.coeffs, want, atol=1e-15)
    got = trace_norm_L2(tr)
    want_norm = math.sqrt(
        cfg_small.kappa * 2.0 * math.pi * cfg_small.ell * cfg_small.kappa**4
    )
    assert got == pytest.approx(want_norm, rel=1e-13)


def test_periodicity_defect_is_exact_zero(cfg_small):
    u = random_smooth_vector(cfg_small, stream(5, "tests"))
    assert js.periodicity_defect(u) == 0.0
    assert js.periodicity_defect(u, order=2) == 0.0


def test_synthesize_analyze_round_trip(cfg_small):
    u = random_smooth_scalar(cfg_small, stream(9, "tests"), real=False)
    vals = synthesize(u)
    back = analyze(cfg_small, vals, real_flag=False)
    assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-13
    ur = random_smooth_scalar(cfg_small, stream(10, "tests"), real=True)
    vals = synthesize(ur)
    assert np.max(np.abs(vals.imag)) < 1e-13


def test_conj_reflect_is_pointwise_conjugate(cfg_small):
    u = random_smooth_scalar(cfg_small, stream(12, "tests"), real=False)
    vals = synthesize(u)
    vals_c = synthesize(conj_reflect(u))
    assert np.max(np.abs(vals_c - np.conj(vals))) < 1e-12
    # a real field is its own conjugate reflection
    ur = random_smooth_scalar(cfg_small, stream(13, "tests"), real=True)
    assert np.max(np.abs(conj_reflect(ur).coeffs - ur.coeffs)) < 1e-14


def test_random_fields_are_normalized(cfg_small):
    u = random_smooth_vector(cfg_small, stream(2, "tests"))
    assert js.norm_L2(u) == pytest.approx(1.0, rel=1e-12)
    s = random_smooth_scalar(cfg_small, stream(2, "tests"))
    assert js.norm_L2(s) == pytest.approx(1.0, rel=1e-12)


def test_zero_trace_potential_has_exact_zero_trace(cfg_small):
    q = random_zero_trace_potential(cfg_small, stream(4, "tests"))
    tr = js.trace_SF(q)
    assert np.all(tr.coeffs == 0.0)
    assert js.norm_L2(q) > 0.0


def test_field_shape_validation(cfg_small):
    with pytest.raises(ValueError, match="shape"):
        js.ScalarField(cfg_small, np.zeros((2, 2, 2), dtype=complex))
    with pytest.raises(ValueError, match="shape"):
        js.VectorField(cfg_small, np.zeros((2, 2, 2, 2), dtype=complex))


def test_field_arithmetic(cfg_small):
    u = constant_scalar(cfg_small, 1.0)
    v = constant_scalar(cfg_small, 2.0)
    assert js.norm_L2((u + v) - constant_scalar(cfg_small, 3.0)) == 0.0
    assert js.norm_L2((v - u) - u) == 0.0
    assert js.norm_L2(2.0 * u - v) == 0.0
    assert (1j * u).real_flag is False
    with pytest.raises(ValueError, match="mismatch"):
        u + constant_vector(cfg_small, (1.0, 0.0, 0.0))
