"""Coefficient-space fields on the periodic cylinder.

A scalar field u(r, theta, z) is stored as complex coefficients
u[n, m, :] of exp(2*pi*i*n*z/ell) * exp(i*m*theta), with radial profiles on
the half Chebyshev-Lobatto grid of discretization.RadialTables. Axial index
0 corresponds to n = -n_z, azimuthal index 0 to m = -n_theta. Velocity
fields keep three Cartesian components; Cartesian components stay smooth
through the axis r = 0, unlike cylindrical ones.

Derivatives in x and y couple azimuthal neighbors through the raising and
lowering combinations (d/dr -+ m/r); multiplication by x or y couples them
through r/2 shifts. The internal helpers therefore return arrays on a
widened azimuthal band, and public operations truncate back to the stored
band. Truncation is exact whenever the input keeps band margins, which the
random field generators guarantee via their margin arguments.
"""

import dataclasses
import math

import numpy as np

from .discretization import apply_stack, tables_for

# Highest Sobolev order the inner product supports.
MAX_SOBOLEV_ORDER = 4


@dataclasses.dataclass(frozen=True)
class SobolevIndex:
    """Order k of the periodic Sobolev inner product H^k_p."""

    k: int

    def __post_init__(self):
        if not (0 <= self.k <= MAX_SOBOLEV_ORDER):
            raise ValueError(
                "Sobolev order must lie in 0..%d, got %r" % (MAX_SOBOLEV_ORDER, self.k)
            )


def _as_order(k):
    if isinstance(k, SobolevIndex):
        return k.k
    kk = int(k)
    if kk != k or not (0 <= kk <= MAX_SOBOLEV_ORDER):
        raise ValueError(
            "Sobolev order must lie in 0..%d, got %r" % (MAX_SOBOLEV_ORDER, k)
        )
    return kk


@dataclasses.dataclass
class ScalarField:
    """Scalar field in coefficient space.

    Attributes:
        config: DomainConfig the coefficients refer to.
        coeffs: complex array (2*n_z+1, 2*n_theta+1, n_r).
        real_flag: whether the field is meant to be real valued (its
            coefficients then satisfy c[-n, -m] = conj(c[n, m])).
    """

    config: object
    coeffs: np.ndarray
    real_flag: bool = True

    def __post_init__(self):
        want = (self.config.n_modes_z, self.config.n_modes_theta, self.config.n_r)
        if self.coeffs.shape != want:
            raise ValueError(
                "scalar coefficient shape %s does not match config %s"
                % (self.coeffs.shape, want)
            )

    def copy(self):
        return ScalarField(self.config, self.coeffs.copy(), self.real_flag)

    def _binary(self, other, op):
        if not isinstance(other, ScalarField) or other.config != self.config:
            raise ValueError("field mismatch in arithmetic")
        return ScalarField(
            self.config, op(self.coeffs, other.coeffs), self.real_flag and other.real_flag
        )

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        out_real = self.real_flag and getattr(scalar, "imag", 0.0) == 0.0
        return ScalarField(self.config, self.coeffs * scalar, out_real)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.config, -self.coeffs, self.real_flag)


@dataclasses.dataclass
class VectorField:
    """Velocity field with Cartesian components stacked on the first axis."""

    config: object
    coeffs: np.ndarray
    real_flag: bool = True

    def __post_init__(self):
        want = (3, self.config.n_modes_z, self.config.n_modes_theta, self.config.n_r)
        if self.coeffs.shape != want:
            raise ValueError(
                "vector coefficient shape %s does not match config %s"
                % (self.coeffs.shape, want)
            )

    @property
    def x(self):
        """First component as a ScalarField view (shares memory)."""
        return ScalarField(self.config, self.coeffs[0], self.real_flag)

    @property
    def y(self):
        return ScalarField(self.config, self.coeffs[1], self.real_flag)

    @property
    def z(self):
        return ScalarField(self.config, self.coeffs[2], self.real_flag)

    def copy(self):
        return VectorField(self.config, self.coeffs.copy(), self.real_flag)

    def _binary(self, other, op):
        if not isinstance(other, VectorField) or other.config != self.config:
            raise ValueError("field mismatch in arithmetic")
        return VectorField(
            self.config, op(self.coeffs, other.coeffs), self.real_flag and other.real_flag
        )

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        out_real = self.real_flag and getattr(scalar, "imag", 0.0) == 0.0
        return VectorField(self.config, self.coeffs * scalar, out_real)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.config, -self.coeffs, self.real_flag)


@dataclasses.dataclass
class TraceField:
    """Boundary values on the free surface r = kappa.

    coeffs[n, m] multiplies exp(2*pi*i*n*z/ell) * exp(i*m*theta); the
    azimuthal band may exceed the field band, e.g. for traction traces.
    """

    config: object
    coeffs: np.ndarray
    band: int

    def __post_init__(self):
        want = (self.config.n_modes_z, 2 * self.band + 1)
        if self.coeffs.shape != want:
            raise ValueError(
                "trace coefficient shape %s does not match band %d"
                % (self.coeffs.shape, self.band)
            )


# ---------------------------------------------------------------------------
# constructors


def zeros_scalar(config):
    return ScalarField(
        config,
        np.zeros((config.n_modes_z, config.n_modes_theta, config.n_r), dtype=complex),
    )


def zeros_vector(config):
    return VectorField(
        config,
        np.zeros(
            (3, config.n_modes_z, config.n_modes_theta, config.n_r), dtype=complex
        ),
    )


def constant_scalar(config, value):
    f = zeros_scalar(config)
    f.coeffs[config.n_z, config.n_theta, :] = value
    f.real_flag = getattr(value, "imag", 0.0) == 0.0
    return f


def constant_vector(config, values):
    f = zeros_vector(config)
    for c in range(3):
        f.coeffs[c, config.n_z, config.n_theta, :] = values[c]
    f.real_flag = all(getattr(v, "imag", 0.0) == 0.0 for v in values)
    return f


def scalar_from_profile(config, n, m, profile, real_flag=False):
    """Single-mode scalar field with the given radial profile."""
    f = zeros_scalar(config)
    f.coeffs[config.n_z + n, config.n_theta + m, :] = profile
    f.real_flag = real_flag
    return f


def rigid_rotation(config):
    """The rigid rotation field (-y, x, 0)."""
    t = tables_for(config)
    one = np.zeros((config.n_modes_theta, config.n_r), dtype=complex)
    one[config.n_theta, :] = 1.0
    f = zeros_vector(config)
    f.coeffs[0, config.n_z] = _truncate(-_mul_y(t, one), config.n_theta)
    f.coeffs[1, config.n_z] = _truncate(_mul_x(t, one), config.n_theta)
    return f


def conj_reflect(field):
    """Complex conjugate of the field (reflects both mode indices)."""
    arr = np.conj(field.coeffs[..., ::-1, ::-1, :])
    return type(field)(field.config, np.ascontiguousarray(arr), field.real_flag)


# ---------------------------------------------------------------------------
# band-aware raw-array helpers (leading axes pass through)


def _band(arr):
    return (arr.shape[-2] - 1) // 2


def _truncate(arr, band_out):
    b = _band(arr)
    if band_out > b:
        return _pad(arr, band_out - b)
    cut = b - band_out
    if cut == 0:
        return arr
    return arr[..., cut:-cut, :]


def _pad(arr, extra):
    if extra == 0:
        return arr
    pad = [(0, 0)] * arr.ndim
    pad[-2] = (extra, extra)
    return np.pad(arr, pad)


def _match(a, b):
    ba, bb = _band(a), _band(b)
    if ba == bb:
        return a, b
    if ba < bb:
        return _pad(a, bb - ba), b
    return a, _pad(b, ba - bb)


def _ddr(t, arr):
    return apply_stack(t.stacks(_band(arr)).ddr, arr)


def _shift_up(t, arr):
    """Apply (d/dr - m/r) per channel and move content from m to m+1."""
    st = t.stacks(_band(arr))
    out = np.zeros(arr.shape[:-2] + (arr.shape[-2] + 2, arr.shape[-1]), dtype=complex)
    out[..., 2:, :] = apply_stack(st.raising, arr)
    return out

def _shift_down(t, arr):
    """Apply (d/dr + m/r) per channel and move content from m to m-1."""
    st = t.stacks(_band(arr))
    out = np.zeros(arr.shape[:-2] + (arr.shape[-2] + 2, arr.shape[-1]), dtype=complex)
    out[..., :-2, :] = apply_stack(st.lowering, arr)
    return out


def _dx(t, arr):
    return 0.5 * (_shift_up(t, arr) + _shift_down(t, arr))


def _dy(t, arr):
    return -0.5j * (_shift_up(t, arr) - _shift_down(t, arr))


def _mul_x(t, arr):
    out = np.zeros(arr.shape[:-2] + (arr.shape[-2] + 2, arr.shape[-1]), dtype=complex)
    half_r = 0.5 * t.r * arr
    out[..., 2:, :] += half_r
    out[..., :-2, :] += half_r
    return out


def _mul_y(t, arr):
    out = np.zeros(arr.shape[:-2] + (arr.shape[-2] + 2, arr.shape[-1]), dtype=complex)
    half_r = 0.5 * t.r * arr
    out[..., 2:, :] += -1j * half_r
    out[..., :-2, :] += 1j * half_r
    return out


def _lap2d(t, arr):
    return apply_stack(t.stacks(_band(arr)).lap, arr)


def _axial_factors(config):
    """The factors i*beta_n = 2*pi*i*n/ell, shaped (n_modes_z, 1, 1)."""
    n = np.arange(-config.n_z, config.n_z + 1)
    return (2j * math.pi / config.ell * n)[:, None, None]


def _disk_inner_per_n(t, a, b):
    """2*pi * sum_m (a_m, b_m)_{L^2(r dr)} for each axial slice.

    a and b carry shape (n_modes_z, n_channels, n_r) on a common band; the
    result has shape (n_modes_z,).
    """
    a, b = _match(a, b)
    g = t.stacks(_band(a)).gram
    return 2.0 * np.pi * np.einsum("mij,nmj,nmi->n", g, a, np.conj(b))


# ---------------------------------------------------------------------------
# differential operators


def grad(u):
    """Gradient of a scalar field as a VectorField."""
    t = tables_for(u.config)
    arr = u.coeffs
    out = zeros_vector(u.config)
    out.coeffs[0] = _truncate(_dx(t, arr), u.config.n_theta)
    out.coeffs[1] = _truncate(_dy(t, arr), u.config.n_theta)
    out.coeffs[2] = _axial_factors(u.config) * arr
    out.real_flag = u.real_flag
    return out


def div(v):
    """Divergence of a VectorField as a ScalarField."""
    t = tables_for(v.config)
    s = _dx(t, v.coeffs[0]) + _dy(t, v.coeffs[1])
    s += _pad(_axial_factors(v.config) * v.coeffs[2], 1)
    return ScalarField(v.config, _truncate(s, v.config.n_theta), v.real_flag)


def _lap3d_arr(t, config, arr):
    return _lap2d(t, arr) + _axial_factors(config) ** 2 * arr


def laplacian(field):
    """Laplacian of a ScalarField or a VectorField (componentwise)."""
    t = tables_for(field.config)
    if isinstance(field, ScalarField):
        return ScalarField(
            field.config, _lap3d_arr(t, field.config, field.coeffs), field.real_flag
        )
    out = zeros_vector(field.config)
    for c in range(3):
        out.coeffs[c] = _lap3d_arr(t, field.config, field.coeffs[c])
    out.real_flag = field.real_flag
    return out


def sym_grad(v):
    """Symmetrized derivative table E[i][j] = D_j v_i + D_i v_j.

    Note the convention: no factor 1/2, matching the energy form
    (mu/2) * sum_ij integral |E_ij|^2. Returns a 3x3 nested tuple of
    ScalarFields; E[i][j] == E[j][i].
    """
    t = tables_for(v.config)
    cfg = v.config
    ax = _axial_factors(cfg)
    d = [
        [_dx(t, v.coeffs[c]) for c in range(3)],
        [_dy(t, v.coeffs[c]) for c in range(3)],
        [_pad(ax * v.coeffs[c], 1) for c in range(3)],
    ]
    rows = []
    for i in range(3):
        row = []
        for j in range(3):
            arr = _truncate(d[j][i] + d[i][j], cfg.n_theta)
            row.append(ScalarField(cfg, arr, v.real_flag))
        rows.append(tuple(row))
    return tuple(rows)


# ---------------------------------------------------------------------------
# inner products, norms, traces


def _component_arrays(field):
    if isinstance(field, VectorField):
        return [field.coeffs[c] for c in range(3)]
    return [field.coeffs]


def inner_product_Hkp(u, v, k=0):
    """Periodic Sobolev inner product (u, v)_{H^k_p}.

    Sums ell * beta_n^(2j) times disk inner products of all derivative
    combinations with j axial and up to k-j transversal derivatives, each
    transversal multi-index counted once.

    Args:
        u, v: fields of the same kind on the same config.
        k: integer order or SobolevIndex, at most MAX_SOBOLEV_ORDER.

    Returns:
        complex inner product value (real for u = v up to roundoff).
    """
    kk = _as_order(k)
    if type(u) is not type(v) or u.config != v.config:
        raise ValueError("inner product requires matching fields")
    cfg = u.config
    t = tables_for(cfg)
    n = np.arange(-cfg.n_z, cfg.n_z + 1)
    beta_sq = (2.0 * math.pi * n / cfg.ell) ** 2
    total = 0.0 + 0.0j
    for ua, va in zip(_component_arrays(u), _component_arrays(v)):
        # order_sums[j] = sum over |alpha| = j of the per-n disk inners
        order_sums = []
        du = {(0, 0): ua}
        dv = {(0, 0): va}
        for order in range(kk + 1):
            s = np.zeros(n.size, dtype=complex)
            for px in range(order, -1, -1):
                py = order - px
                if order > 0:
                    if px > 0:
                        du[(px, py)] = _dx(t, du[(px - 1, py)])
                        dv[(px, py)] = _dx(t, dv[(px - 1, py)])
                    else:
                        du[(0, py)] = _dy(t, du[(0, py - 1)])
                        dv[(0, py)] = _dy(t, dv[(0, py - 1)])
                s += _disk_inner_per_n(t, du[(px, py)], dv[(px, py)])
            order_sums.append(s)
        for mm in range(kk + 1):
            weight = cfg.ell * beta_sq**mm
            for order in range(kk + 1 - mm):
                total += (weight * order_sums[order]).sum()
    return complex(total)


def norm_Hkp(u, k=0):
    """H^k_p norm of a field."""
    val = inner_product_Hkp(u, u, k).real
    return math.sqrt(max(val, 0.0))


def norm_L2(u):
    return norm_Hkp(u, 0)


def trace_SF(field):
    """Boundary values at r = kappa.

    Scalar fields yield a TraceField; vector fields a tuple of three.
    """
    if isinstance(field, VectorField):
        return tuple(trace_SF(getattr(field, c)) for c in "xyz")
    return TraceField(field.config, field.coeffs[..., 0].copy(), field.config.n_theta)


def trace_norm_L2(tr):
    """L^2(S_F) norm of a TraceField (surface measure kappa dtheta dz)."""
    cfg = tr.config
    val = cfg.kappa * cfg.ell * 2.0 * math.pi * np.sum(np.abs(tr.coeffs) ** 2)
    return math.sqrt(val)


def periodicity_defect(field, order=1):
    """Max mismatch of z-derivatives up to `order` between z = 0 and z = ell.

    The axial phases are evaluated through the fractional part of z/ell, so
    the defect is exactly zero for stored fields by construction; the check
    guards the synthesis path rather than the data.
    """
    cfg = field.config
    n = np.arange(-cfg.n_z, cfg.n_z + 1)
    ph0 = np.exp(2j * math.pi * n * math.modf(0.0 / cfg.ell)[0])
    ph1 = np.exp(2j * math.pi * n * math.modf(cfg.ell / cfg.ell)[0])
    factors = _axial_factors(cfg)[:, 0, 0]
    worst = 0.0
    for arr in _component_arrays(field):
        for o in range(order + 1):
            w = factors**o
            s0 = np.tensordot(w * ph0, arr, axes=(0, 0))
            s1 = np.tensordot(w * ph1, arr, axes=(0, 0))
            worst = max(worst, float(np.max(np.abs(s1 - s0))))
    return worst


# ---------------------------------------------------------------------------
# nodal synthesis grid


def _phase_matrices(config):
    nz, nm = config.n_modes_z, config.n_modes_theta
    n = np.arange(-config.n_z, config.n_z + 1)
    m = np.arange(-config.n_theta, config.n_theta + 1)
    ez = np.exp(2j * math.pi * np.outer(np.arange(nz), n) / nz)
    et = np.exp(2j * math.pi * np.outer(np.arange(nm), m) / nm)
    return ez, et


def synthesize(field):
    """Evaluate on the nodal grid (z_j, theta_k, r_i).

    z_j = j*ell/(2*n_z+1), theta_k = 2*pi*k/(2*n_theta+1). Vector fields
    get a leading component axis. Values are complex; real_flag fields have
    imaginary parts at roundoff level.
    """
    ez, et = _phase_matrices(field.config)
    return np.einsum("zn,tm,...nmr->...ztr", ez, et, field.coeffs)


def analyze(config, values, real_flag=None):
    """Inverse of synthesize: nodal values back to coefficients.

    Args:
        config: target DomainConfig.
        values: array (2*n_z+1, 2*n_theta+1, n_r), with a leading 3-axis
            for vector fields.
        real_flag: override the real/complex tag; defaults to whether the
            input dtype is real.

    Returns:
        ScalarField or VectorField.
    """
    ez, et = _phase_matrices(config)
    nz, nm = config.n_modes_z, config.n_modes_theta
    want = (nz, nm, config.n_r)
    if values.shape == want:
        kind = ScalarField
    elif values.shape == (3,) + want:
        kind = VectorField
    else:
        raise ValueError(
            "nodal value shape %s matches neither scalar %s nor vector"
            % (values.shape, want)
        )
    coeffs = np.einsum(
        "zn,tm,...ztr->...nmr", np.conj(ez) / nz, np.conj(et) / nm, values
    )
    if real_flag is None:
        real_flag = bool(np.isrealobj(values))
    return kind(config, coeffs, real_flag)


# ---------------------------------------------------------------------------
# random smooth fields


def _draw_smooth_coeffs(config, rng, margin_m, margin_deg):
    t = tables_for(config)
    coeffs = np.zeros(
        (config.n_modes_z, config.n_modes_theta, config.n_r), dtype=complex
    )
    mb = max(config.n_theta - margin_m, 0)
    for i_n in range(config.n_modes_z):
        for m in range(-mb, mb + 1):
            basis = t.smooth_basis(abs(m))
            depth = max(basis.shape[1] - margin_deg, 1)
            c = rng.standard_normal(depth) + 1j * rng.standard_normal(depth)
            c *= 0.5 ** np.arange(depth)
            coeffs[i_n, config.n_theta + m] = basis[:, :depth] @ c
    return coeffs


def random_smooth_scalar(config, rng, margin_m=2, margin_deg=2, real=True):
    """Random pole-regular scalar field with band margins.

    The field leaves `margin_m` azimuthal bands and `margin_deg` top radial
    degrees empty, so derivative and coordinate-multiplication chains of
    that combined order remain exactly representable after truncation.
    Draw order is deterministic (n ascending, then m ascending). The result
    is normalized to unit L^2 norm.
    """
    coeffs = _draw_smooth_coeffs(config, rng, margin_m, margin_deg)
    if real:
        coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1, ::-1]))
    f = ScalarField(config, coeffs, real_flag=real)
    nrm = norm_L2(f)
    if nrm > 0.0:
        f.coeffs /= nrm
    return f


def random_smooth_vector(config, rng, margin_m=2, margin_deg=2, real=True):
    """Random pole-regular vector field, components drawn in x, y, z order."""
    parts = [_draw_smooth_coeffs(config, rng, margin_m, margin_deg) for _ in range(3)]
    coeffs = np.stack(parts)
    if real:
        coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1, ::-1]))
    f = VectorField(config, coeffs, real_flag=real)
    nrm = norm_L2(f)
    if nrm > 0.0:
        f.coeffs /= nrm
    return f


def random_zero_trace_potential(config, rng, margin_m=2, margin_deg=2, real=True):
    """Random pole-regular scalar field vanishing on the free surface.

    Within each (n, m) channel the boundary value is removed inside the
    smooth span and the boundary node is then zeroed exactly, so gradients
    of these fields are pure potential flows with surface-vanishing
    potential.
    """
    t = tables_for(config)
    coeffs = _draw_smooth_coeffs(config, rng, margin_m, margin_deg)
    if real:
        coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1, ::-1]))
    mb = max(config.n_theta - margin_m, 0)
    for m in range(-mb, mb + 1):
        basis = t.smooth_basis(abs(m))
        depth = max(basis.shape[1] - margin_deg, 1)
        w = basis[0, :depth]
        correction = basis[:, :depth] @ w / (w @ w)
        im = config.n_theta + m
        coeffs[:, im, :] -= np.outer(coeffs[:, im, 0], correction)
        coeffs[:, im, 0] = 0.0
    f = ScalarField(config, coeffs, real_flag=real)
    nrm = norm_L2(f)
    if nrm > 0.0:
        f.coeffs /= nrm
    return f
