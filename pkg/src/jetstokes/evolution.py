"""Linearized time evolution on the constrained subspaces.

Each axial mode evolves independently in its reduced coordinates: with
M = M_block and G = G_block the implicit Euler step solves
(M + dt G) y' = M y + dt f(t') and Crank-Nicolson solves
(M + dt/2 G) y' = (M - dt/2 G) y + dt (f(t) + f(t'))/2, where f are the
reduced forcing functionals. Both matrices are Hermitian positive
definite, factored once per run with Cholesky.

At mode 0 the stepping matrix uses the kernel-deflated form: rows and
columns of G at the exact kernel columns are zeroed. G is orthogonal to
those columns only up to roundoff, and zeroing makes the deflated form
exactly positive semidefinite with an exact kernel, so homogeneous
energies are monotone and constant states persist to solver precision.
Per-step residuals and dissipation are still measured against the full
blocks, so nothing the deflation changes goes unreported.

Negative modes reuse the positive factorizations through conjugation.
"""

import dataclasses
import math

import numpy as np
import scipy.linalg

from .fields import VectorField, norm_L2, trace_norm_L2, trace_SF, zeros_vector
from .fields import grad, inner_product_Hkp
from .helmholtz import _potential_slice, operator_Q, project_P
from .fields import _truncate
from .stokesop import mode_operator, project_constrained, reduce_slice, expand_slice

SCHEMES = ("implicit-euler", "crank-nicolson")


@dataclasses.dataclass
class EvolutionConfig:
    """Settings of one evolution run.

    Attributes:
        t_final: time horizon; the step count is round(t_final / dt).
        dt: step size.
        scheme: "implicit-euler" or "crank-nicolson".
        forcing: callable t -> VectorField, or None for homogeneous runs.
        initial: VectorField initial state, or None for zero.
        store_trajectory: keep the velocity field of every step.
    """

    t_final: float
    dt: float
    scheme: str = "crank-nicolson"
    forcing: object = None
    initial: object = None
    store_trajectory: bool = True


@dataclasses.dataclass
class EnergyTrace:
    """Per-step energy bookkeeping.

    Arrays have one entry per time grid point, starting at t = 0.
    identity_residual / identity_scale are per-step (length steps) and
    only filled for Crank-Nicolson runs.
    """

    t: np.ndarray
    l2_norm_sq: np.ndarray
    dissipation: np.ndarray
    residual: np.ndarray
    warnings: list
    identity_residual: object = None
    identity_scale: object = None


@dataclasses.dataclass
class EvolutionResult:
    fields: list
    trace: EnergyTrace
    final: VectorField
    coords: dict


def _deflated(op):
    """G_block with kernel rows and columns zeroed exactly."""
    if not op.kernel_columns:
        return op.G_block
    g = op.G_block.copy()
    idx = list(op.kernel_columns)
    g[idx, :] = 0.0
    g[:, idx] = 0.0
    return g


def _reduce_field(ws, f):
    """Reduced functionals of a field, one coordinate vector per mode."""
    cfg = ws.config
    out = {}
    for i_n in range(cfg.n_modes_z):
        n = i_n - cfg.n_z
        out[n] = reduce_slice(ws, n, f.coeffs[:, i_n])
    return out


def _field_from_coords(ws, coords):
    cfg = ws.config
    out = zeros_vector(cfg)
    for n, y in coords.items():
        out.coeffs[:, cfg.n_z + n] = expand_slice(ws, n, y)
    out.real_flag = False
    return out


class _ModeStepper:
    """Stepping algebra of one |n|, serving both signs via conjugation."""

    def __init__(self, ws, n_abs, dt, scheme):
        op = mode_operator(ws, n_abs)
        self.op = op
        self.g_step = _deflated(op)
        c = dt if scheme == "implicit-euler" else 0.5 * dt
        self.factor = scipy.linalg.cho_factor(op.M_block + c * self.g_step)
        if op.kernel_columns:
            g = op.G_block
            sc = float(np.linalg.norm(g))
            idx = list(op.kernel_columns)
            self.kernel_defect = float(np.linalg.norm(g[idx, :])) / max(sc, 1e-300)
        else:
            self.kernel_defect = 0.0

    def solve(self, b, conj):
        if conj:
            return np.conj(scipy.linalg.cho_solve(self.factor, np.conj(b)))
        return scipy.linalg.cho_solve(self.factor, b)

    def apply(self, mat, y, conj):
        if conj:
            return np.conj(mat @ np.conj(y))
        return mat @ y


def evolve(ws, evo):
    """Run the linearized evolution described by an EvolutionConfig.

    Returns:
        EvolutionResult. The trace warnings record a violated forcing
        hypothesis (the solenoidal part of f at t = 0 must vanish), an
        initial state outside the constrained subspace, and conditioning
        alerts; they never silence the run.
    """
    cfg = ws.config
    if evo.scheme not in SCHEMES:
        raise ValueError("unknown scheme %r; expected one of %s" % (evo.scheme, SCHEMES))
    if evo.dt <= 0.0:
        raise ValueError("dt must be positive")
    if evo.t_final < evo.dt:
        raise ValueError("t_final must be at least dt")
    steps = max(int(round(evo.t_final / evo.dt)), 1)
    dt = evo.dt
    warnings = []
    if abs(steps * dt - evo.t_final) > 1e-9 * max(evo.t_final, 1.0):
        warnings.append(
            "horizon adjusted to %d steps of dt=%g (t_final=%g)"
            % (steps, dt, evo.t_final)
        )

    modes = list(range(-cfg.n_z, cfg.n_z + 1))
    steppers = {a: _ModeStepper(ws, a, dt, evo.scheme) for a in range(cfg.n_z + 1)}
    for a, st in steppers.items():
        if st.kernel_defect > 1e-8:
            warnings.append(
                "mode %d: dissipation form couples to the kernel (%.3e)"
                % (a, st.kernel_defect)
            )

    # initial coordinates
    if evo.initial is None:
        y = {n: np.zeros(steppers[abs(n)].op.basis.shape[1], dtype=complex) for n in modes}
    else:
        vnorm = norm_L2(evo.initial)
        proj, y = project_constrained(ws, evo.initial)
        if vnorm > 0.0:
            defect = norm_L2(evo.initial - proj) / vnorm
            if defect > 1e-8:
                warnings.append(
                    "initial state lies outside the constrained subspace "
                    "(relative defect %.3e); evolving its projection" % defect
                )

    # forcing bookkeeping
    def reduced_forcing(t):
        if evo.forcing is None:
            return None
        f = evo.forcing(t)
        if not isinstance(f, VectorField):
            raise ValueError("forcing callable must return a VectorField")
        return _reduce_field(ws, f)

    if evo.forcing is not None:
        f0 = evo.forcing(0.0)
        if not isinstance(f0, VectorField):
            raise ValueError("forcing callable must return a VectorField")
        n0 = norm_L2(f0)
        if n0 > 0.0:
            sol_part = norm_L2(project_P(ws, f0).solenoidal) / n0
            if sol_part > 1e-8:
                warnings.append(
                    "forcing has a solenoidal part at t = 0 (relative %.3e); "
                    "the evolution hypothesis requires P f(0) = 0" % sol_part
                )

    def energies(ycur, reval=None, yeval=None):
        l2 = 0.0
        diss = 0.0
        for n in modes:
            st = steppers[abs(n)]
            u = np.conj(ycur[n]) if n < 0 else ycur[n]
            l2 += float(np.real(np.conj(u) @ (st.op.M_block @ u)))
            ue = u if yeval is None else (np.conj(yeval[n]) if n < 0 else yeval[n])
            diss += float(np.real(np.conj(ue) @ (st.op.G_block @ ue)))
        return l2, diss

    t_grid = dt * np.arange(steps + 1)
    l2_arr = np.zeros(steps + 1)
    diss_arr = np.zeros(steps + 1)
    res_arr = np.zeros(steps + 1)
    ident_res = np.zeros(steps) if evo.scheme == "crank-nicolson" else None
    ident_scale = np.zeros(steps) if evo.scheme == "crank-nicolson" else None

    l2_arr[0], diss_arr[0] = energies(y)
    fields = []
    if evo.store_trajectory:
        fields.append(_field_from_coords(ws, y))

    r_prev = reduced_forcing(0.0)
    for k in range(steps):
        t_next = dt * (k + 1)
        r_next = reduced_forcing(t_next)
        ynew = {}
        defect_sq = 0.0
        scale_sq = 0.0
        fp_mid = 0.0
        diss_mid = 0.0
        for n in modes:
            st = steppers[abs(n)]
            cj = n < 0
            mm, gg = st.op.M_block, st.op.G_block
            if evo.scheme == "implicit-euler":
                b = st.apply(mm, y[n], cj)
                if r_next is not None:
                    b = b + dt * r_next[n]
                yn = st.solve(b, cj)
                y_eval = yn
                r_eval = None if r_next is None else r_next[n]
            else:
                b = st.apply(mm, y[n], cj) - 0.5 * dt * st.apply(st.g_step, y[n], cj)
                if r_next is not None:
                    b = b + 0.5 * dt * (r_prev[n] + r_next[n])
                yn = st.solve(b, cj)
                y_eval = 0.5 * (y[n] + yn)
                r_eval = (
                    None if r_next is None else 0.5 * (r_prev[n] + r_next[n])
                )
            ynew[n] = yn
            dy = st.apply(mm, (yn - y[n]) / dt, cj)
            ge = st.apply(gg, y_eval, cj)
            d = dy + ge
            if r_eval is not None:
                d = d - r_eval
            defect_sq += float(np.linalg.norm(d) ** 2)
            s = np.linalg.norm(dy) + np.linalg.norm(ge)
            if r_eval is not None:
                s += np.linalg.norm(r_eval)
            scale_sq += float(s * s)
            if evo.scheme == "crank-nicolson":
                ue = np.conj(y_eval) if cj else y_eval
                diss_mid += float(np.real(np.conj(ue) @ (gg @ ue)))
                if r_eval is not None:
                    se = np.conj(r_eval) if cj else r_eval
                    fp_mid += float(np.real(np.conj(ue) @ se))
        l2_new, diss_new = energies(ynew)
        l2_arr[k + 1] = l2_new
        diss_arr[k + 1] = diss_new
        res_arr[k + 1] = (
            math.sqrt(defect_sq) / math.sqrt(scale_sq) if scale_sq > 0.0 else 0.0
        )
        if evo.scheme == "crank-nicolson":
            lhs = (l2_new - l2_arr[k]) / dt
            rhs = -2.0 * diss_mid + 2.0 * fp_mid
            ident_res[k] = abs(lhs - rhs)
            ident_scale[k] = abs(lhs) + 2.0 * abs(diss_mid) + 2.0 * abs(fp_mid) + 1e-300
        y = ynew
        r_prev = r_next
        if evo.store_trajectory:
            fields.append(_field_from_coords(ws, y))

    final = fields[-1] if fields else _field_from_coords(ws, y)
    trace = EnergyTrace(
        t=t_grid,
        l2_norm_sq=l2_arr,
        dissipation=diss_arr,
        residual=res_arr,
        warnings=warnings,
        identity_residual=ident_res,
        identity_scale=ident_scale,
    )
    return EvolutionResult(fields=fields, trace=trace, final=final, coords=y)


def recover_pressure(ws, v, f=None):
    """Pressure field of a trajectory snapshot.

    q = Q v plus, when a forcing snapshot f is given, the zero-trace
    potential solving laplacian(phi) = div(f).
    """
    cfg = ws.config
    q = operator_Q(ws, v)
    if f is not None:
        for i_n in range(cfg.n_modes_z):
            n = i_n - cfg.n_z
            phi = _potential_slice(ws, n, f.coeffs[:, i_n])[0]
            q.coeffs[i_n] += _truncate(phi, cfg.n_theta)
    return q


def energy_csv_rows(trace):
    """Rows (t, l2_norm_sq, dissipation, residual) for energy.csv."""
    rows = []
    for k in range(trace.t.size):
        rows.append(
            (
                float(trace.t[k]),
                float(trace.l2_norm_sq[k]),
                float(trace.dissipation[k]),
                float(trace.residual[k]),
            )
        )
    return rows


def write_energy_csv(path, trace):
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "l2_norm_sq", "dissipation", "residual"])
        for row in energy_csv_rows(trace):
            w.writerow([repr(x) for x in row])


def estimate_report(ws, fields, pressures, forcings, dt, t_final):
    """Surrogate maximal-regularity ratio of a computed trajectory.

    The continuous-time norms are replaced by right-endpoint discrete
    L^2(0, T) sums over the trajectory:

      num = ||v||_{L2t H2p} + ||dv/dt||_{L2t L2} + ||grad q||_{L2t L2}
            + ||q|_SF||_{L2t L2(SF)}
      den = ||f||_{L2t L2}

    Args:
        fields, pressures, forcings: aligned lists over the time grid,
        starting at t = 0; forcings may be None for homogeneous runs.

    Returns:
        dict {ratio, surrogate_terms, T, dt}; ratio is 0.0 when the
        forcing vanishes.
    """
    k_steps = len(fields) - 1
    if k_steps < 1:
        raise ValueError("estimate_report needs at least one step")
    if len(pressures) != len(fields):
        raise ValueError("pressures must align with fields")
    if forcings is not None and len(forcings) != len(fields):
        raise ValueError("forcings must align with fields")
    s_h2 = 0.0
    s_dv = 0.0
    s_gq = 0.0
    s_qt = 0.0
    s_f = 0.0
    for k in range(1, k_steps + 1):
        v = fields[k]
        q = pressures[k]
        s_h2 += dt * inner_product_Hkp(v, v, 2).real
        s_dv += dt * (norm_L2(fields[k] - fields[k - 1]) / dt) ** 2
        s_gq += dt * norm_L2(grad(q)) ** 2
        s_qt += dt * trace_norm_L2(trace_SF(q)) ** 2
        if forcings is not None:
            s_f += dt * norm_L2(forcings[k]) ** 2
    terms = {
        "l2t_h2p_velocity": math.sqrt(max(s_h2, 0.0)),
        "l2t_l2_velocity_increment": math.sqrt(s_dv),
        "l2t_l2_grad_pressure": math.sqrt(s_gq),
        "l2t_l2sf_pressure_trace": math.sqrt(s_qt),
        "l2t_l2_forcing": math.sqrt(s_f),
        "definition": (
            "right-endpoint discrete L2-in-time sums over the trajectory; "
            "surrogate for the continuous-time maximal regularity quotient"
        ),
    }
    denom = terms["l2t_l2_forcing"]
    if denom == 0.0:
        ratio = 0.0
    else:
        ratio = (
            terms["l2t_h2p_velocity"]
            + terms["l2t_l2_velocity_increment"]
            + terms["l2t_l2_grad_pressure"]
            + terms["l2t_l2sf_pressure_trace"]
        ) / denom
    return {
        "ratio": ratio,
        "surrogate_terms": terms,
        "T": float(k_steps * dt),
        "dt": float(dt),
    }
