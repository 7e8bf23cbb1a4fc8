"""Finite-element solver: mesh, assembly, Newton stepping, spalling.

Discretization: linear two-node elements on a graded 1D mesh, consistent
mass matrices, 2-point Gauss quadrature with transport coefficients
evaluated at Gauss points from linearly interpolated nodal states.  Time
integration is semi-implicit: coefficient matrices are frozen at the
previous step while the unknown fields, the boundary exchange terms and
the algebraic moisture state equation are implicit and resolved by Newton
iteration on the interleaved (m, theta, P) system, factored as a banded
matrix.

Each step performs, in order: evaluate the failure field from the previous
states, move the ablating boundary, project fields onto the new mesh,
update dehydration explicitly, refresh ambient values, assemble and solve.

One simulation is one logical thread of execution; nothing here touches
shared mutable globals, so independent runs may proceed concurrently and
a State may be handed between threads between steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.linalg import solve_banded

from . import mechanics, transport
from .materials import FluidState, MaterialParams
from .transport import moisture_content

if TYPE_CHECKING:  # pragma: no cover
    from .scenarios import Scenario

__all__ = [
    "SolverSettings",
    "Mesh1D",
    "State",
    "StepReport",
    "TimeSeries",
    "NewtonError",
    "SolverAbort",
    "build_mesh",
    "initial_state",
    "assemble",
    "solve_nonlinear",
    "step_dehydration",
    "step_spalling",
    "remesh_and_project",
    "failure_field",
    "advance",
    "run",
]

# Gauss points/weights on the unit element (xi in [0, 1]).
_GAUSS_XI = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GAUSS_W = np.array([0.5, 0.5])  # integrates f -> h * sum(w * f(xi))

# Guards applied before mechanics table lookups: the wall never cools below
# ambient nor heats beyond the fire curves, but Newton iterates may wobble
# by roundoff.
_THETA_MECH_MIN = 293.15
_THETA_MECH_MAX = 1460.0


class NewtonError(RuntimeError):
    """Newton iteration failed to converge within the allowed iterations."""


class SolverAbort(RuntimeError):
    """A step failed even after the single time-step halving retry."""


@dataclass(frozen=True)
class SolverSettings:
    """Time stepping and Newton controls.

    dt              time step [s]
    gamma           characteristic time of the spalling process [s]
    newton_tol      relative residual reduction for convergence
    newton_max_iter iteration cap per step
    fd_jacobian     True: finite-difference state/boundary derivatives
                    (relative perturbation 1e-7); False: analytic ones
    """

    dt: float = 1.0
    gamma: float = 10.0
    newton_tol: float = 1e-8
    newton_max_iter: int = 25
    fd_jacobian: bool = True

    def __post_init__(self):
        if self.dt <= 0.0 or self.gamma <= 0.0:
            raise ValueError("dt and gamma must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")


@dataclass(frozen=True)
class Mesh1D:
    """Graded mesh on (0, ell): three uniform zones (0, ell/2),
    (ell/2, 3 ell/4), (3 ell/4, ell) with prescribed element counts."""

    nodes: np.ndarray
    grading: tuple[int, int, int]

    @property
    def ell(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    def gauss_x(self) -> np.ndarray:
        """Physical Gauss-point coordinates, shape (n_elements, 2)."""
        x0 = self.nodes[:-1, None]
        return x0 + self.h[:, None] * _GAUSS_XI[None, :]


def build_mesh(ell: float, grading: tuple[int, int, int]) -> Mesh1D:
    """Graded mesh; node count n1 + n2 + n3 + 1, finest zone at the heated face."""
    n1, n2, n3 = (int(n) for n in grading)
    if min(n1, n2, n3) < 1:
        raise ValueError("each grading zone needs at least one element")
    if ell <= 0.0:
        raise ValueError("wall thickness must be positive")
    z1 = np.linspace(0.0, ell / 2.0, n1 + 1)
    z2 = np.linspace(ell / 2.0, 3.0 * ell / 4.0, n2 + 1)[1:]
    z3 = np.linspace(3.0 * ell / 4.0, ell, n3 + 1)[1:]
    return Mesh1D(nodes=np.concatenate([z1, z2, z3]), grading=(n1, n2, n3))


@dataclass
class State:
    """Nodal fields and the moving wall thickness at one time level."""

    m: np.ndarray
    theta: np.ndarray
    P: np.ndarray
    m_d: np.ndarray
    ell: float
    t: float
    mesh: Mesh1D

    def fluid(self) -> FluidState:
        return FluidState(P=self.P, theta=self.theta)

    def total_moisture(self) -> float:
        """Integral of m over the wall [kg m^-2] (trapezoid, exact for P1)."""
        return float(np.trapezoid(self.m, self.mesh.nodes))

    def total_dehydrated(self) -> float:
        return float(np.trapezoid(self.m_d, self.mesh.nodes))


@dataclass(frozen=True)
class StepReport:
    iterations: int
    residual: float
    residual_history: tuple[float, ...]
    max_F: float
    ell: float
    dt: float


def initial_state(scenario: "Scenario") -> State:
    """State at t = 0: uniform fields, moisture from the state equation."""
    mesh = build_mesh(scenario.ell_0, scenario.grading)
    n = mesh.n_nodes
    theta = np.full(n, scenario.theta_0)
    P = np.full(n, scenario.P_0)
    m = np.asarray(
        moisture_content(scenario.material, FluidState(P=P, theta=theta)), dtype=float
    )
    return State(m=m, theta=theta, P=P, m_d=np.zeros(n), ell=mesh.ell, t=0.0, mesh=mesh)


# ---------------------------------------------------------------------------
# Element integration
# ---------------------------------------------------------------------------

def _gauss_fields(mesh: Mesh1D, *fields: np.ndarray) -> list[np.ndarray]:
    """Interpolate nodal fields to Gauss points, each returned as (n_el, 2)."""
    out = []
    for f in fields:
        out.append(f[:-1, None] * (1.0 - _GAUSS_XI)[None, :] + f[1:, None] * _GAUSS_XI[None, :])
    return out


@dataclass
class _Tridiag:
    """Symmetric-profile tridiagonal block: lo[i] = A[i, i-1], up[i] = A[i, i+1]."""

    lo: np.ndarray
    di: np.ndarray
    up: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "_Tridiag":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.di * v
        out[1:] += self.lo[1:] * v[:-1]
        out[:-1] += self.up[:-1] * v[1:]
        return out

    def scaled(self, factor: float) -> "_Tridiag":
        return _Tridiag(self.lo * factor, self.di * factor, self.up * factor)


def _mass_block(mesh: Mesh1D, coeff_gauss: np.ndarray | None) -> _Tridiag:
    """Integral of N^T c N with c at Gauss points ((n_el, 2); None means c = 1)."""
    h = mesh.h
    n = mesh.n_nodes
    N1 = 1.0 - _GAUSS_XI
    N2 = _GAUSS_XI
    if coeff_gauss is None:
        coeff_gauss = np.ones((mesh.n_elements, 2))
    w = coeff_gauss * (_GAUSS_W[None, :] * h[:, None])
    e00 = (w * N1 * N1).sum(axis=1)
    e01 = (w * N1 * N2).sum(axis=1)
    e11 = (w * N2 * N2).sum(axis=1)
    T = _Tridiag.zeros(n)
    np.add.at(T.di, np.arange(n - 1), e00)
    np.add.at(T.di, np.arange(1, n), e11)
    T.up[:-1] = e01
    T.lo[1:] = e01
    return T


def _stiffness_block(mesh: Mesh1D, coeff_gauss: np.ndarray) -> _Tridiag:
    """Integral of (dN/dx)^T c (dN/dx); gradients are constant per element."""
    h = mesh.h
    n = mesh.n_nodes
    ke = (coeff_gauss * _GAUSS_W[None, :]).sum(axis=1) / h
    T = _Tridiag.zeros(n)
    np.add.at(T.di, np.arange(n - 1), ke)
    np.add.at(T.di, np.arange(1, n), ke)
    T.up[:-1] = -ke
    T.lo[1:] = -ke
    return T


def _load_vector(mesh: Mesh1D, values_gauss: np.ndarray) -> np.ndarray:
    """Integral of N^T s with s at Gauss points, assembled to nodes."""
    h = mesh.h
    w = values_gauss * (_GAUSS_W[None, :] * h[:, None])
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, np.arange(mesh.n_elements), (w * (1.0 - _GAUSS_XI)[None, :]).sum(axis=1))
    np.add.at(out, np.arange(1, mesh.n_nodes), (w * _GAUSS_XI[None, :]).sum(axis=1))
    return out


def failure_field(mat: MaterialParams, P: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Failure parameter F at nodal states, with table-range guards."""
    th = np.clip(theta, _THETA_MECH_MIN, _THETA_MECH_MAX)
    return np.asarray(
        mechanics.failure_function(mat, FluidState(P=np.maximum(P, 1e-6), theta=th)), dtype=float
    )


def _damage_field(mat: MaterialParams, P: np.ndarray, theta: np.ndarray) -> np.ndarray:
    th = np.clip(theta, _THETA_MECH_MIN, _THETA_MECH_MAX)
    D, _, _ = mechanics.damage(mat, FluidState(P=np.maximum(P, 1e-6), theta=th))
    return np.asarray(D, dtype=float)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

@dataclass
class AssembledSystem:
    """Frozen matrices and the implicit residual of one time step.

    The residual of the stacked nodal unknowns x = (m, theta, P) is

        R(x) = M^n (x - x^n)/dt + K^n x + f(x),

    where M and K carry the semi-implicit (previous-step) coefficients and
    f holds the dehydration source, the explicit quadratic gradient term,
    the boundary exchange at the new time level and the algebraic moisture
    state equation.
    """

    mesh: Mesh1D
    dt: float
    mat: MaterialParams
    M_mm: _Tridiag
    M_tt: _Tridiag
    M_tP: _Tridiag
    K_mt: _Tridiag
    K_mP: _Tridiag
    K_tt: _Tridiag
    K_tP: _Tridiag
    f_m_const: np.ndarray
    f_t_const: np.ndarray
    m_n: np.ndarray
    theta_n: np.ndarray
    P_n: np.ndarray
    bc: list[tuple[int, float, float, float, float, float]]
    # each: (node, alpha_c, e_sigma, beta_c, theta_inf, rho_v_inf)

    def _boundary_terms(self, theta: np.ndarray, P: np.ndarray):
        b_m = np.zeros(self.mesh.n_nodes)
        b_t = np.zeros(self.mesh.n_nodes)
        c = self.mat.constants
        for node, alpha, esig, beta, th_inf, rho_inf in self.bc:
            rho_v = P[node] * c.M_w / (theta[node] * c.R)
            b_m[node] += beta * (rho_v - rho_inf)
            b_t[node] += alpha * (theta[node] - th_inf) + esig * (theta[node] ** 4 - th_inf**4)
        return b_m, b_t

    def _state_eq(self, theta: np.ndarray, P: np.ndarray) -> np.ndarray:
        return np.asarray(
            moisture_content(self.mat, FluidState(P=P, theta=theta)), dtype=float
        )

    def residual(self, m: np.ndarray, theta: np.ndarray, P: np.ndarray):
        b_m, b_t = self._boundary_terms(theta, P)
        R_m = (
            self.M_mm.matvec(m - self.m_n) / self.dt
            + self.K_mt.matvec(theta)
            + self.K_mP.matvec(P)
            + self.f_m_const
            + b_m
        )
        R_t = (
            (self.M_tt.matvec(theta - self.theta_n) + self.M_tP.matvec(P - self.P_n)) / self.dt
            + self.K_tt.matvec(theta)
            + self.K_tP.matvec(P)
            + self.f_t_const
            + b_t
        )
        R_P = m - self._state_eq(theta, P)
        return R_m, R_t, R_P

    # -- implicit-term derivatives ------------------------------------------

    def _fd_partials(self, theta: np.ndarray, P: np.ndarray):
        """Column-equivalent finite differences of the implicit f terms.

        All implicit nonlinearities are nodewise diagonal (boundary
        exchange and the state equation), so one central difference per
        field recovers the exact column-wise perturbation result.
        """
        dth = 1e-7 * np.maximum(np.abs(theta), 1.0)
        dP = 1e-7 * np.maximum(np.abs(P), 1.0)
        se_tp = self._state_eq(theta + dth, P)
        se_tm = self._state_eq(theta - dth, P)
        se_pp = self._state_eq(theta, P + dP)
        se_pm = self._state_eq(theta, P - dP)
        dse_dt = (se_tp - se_tm) / (2.0 * dth)
        dse_dP = (se_pp - se_pm) / (2.0 * dP)

        db_m_dt = np.zeros_like(theta)
        db_m_dP = np.zeros_like(theta)
        db_t_dt = np.zeros_like(theta)
        c = self.mat.constants
        for node, alpha, esig, beta, th_inf, rho_inf in self.bc:
            th, p = theta[node], P[node]
            e_t, e_p = dth[node], dP[node]
            rv = lambda pp, tt: pp * c.M_w / (tt * c.R)
            db_m_dt[node] += beta * (rv(p, th + e_t) - rv(p, th - e_t)) / (2.0 * e_t)
            db_m_dP[node] += beta * (rv(p + e_p, th) - rv(p - e_p, th)) / (2.0 * e_p)
            bt = lambda tt: alpha * (tt - th_inf) + esig * (tt**4 - th_inf**4)
            db_t_dt[node] += (bt(th + e_t) - bt(th - e_t)) / (2.0 * e_t)
        return dse_dt, dse_dP, db_m_dt, db_m_dP, db_t_dt

    def _analytic_partials(self, theta: np.ndarray, P: np.ndarray):
        from .materials import (
            _dphi_dtheta,
            _drho_w_dtheta,
            _rho_w_unchecked,
            porosity,
            sorption_with_partials,
        )

        c = self.mat.constants
        s = FluidState(P=P, theta=theta)
        eta_w, de_dP, de_dt = sorption_with_partials(self.mat, s)
        phi = porosity(self.mat, theta)
        rho_v = P * c.M_w / (theta * c.R)
        eta_v = phi - eta_w
        liquid = theta <= self.mat.theta_cr
        th_liq = np.minimum(theta, self.mat.theta_cr)
        rho_w = np.where(liquid, _rho_w_unchecked(th_liq), 0.0)
        drho_w = np.where(liquid, _drho_w_dtheta(th_liq), 0.0)

        dse_dP = de_dP * (rho_w - rho_v) + eta_v * c.M_w / (theta * c.R)
        dse_dt = (
            de_dt * (rho_w - rho_v)
            + eta_w * drho_w
            + _dphi_dtheta(self.mat, theta) * rho_v
            - eta_v * rho_v / theta
        )

        db_m_dt = np.zeros_like(theta)
        db_m_dP = np.zeros_like(theta)
        db_t_dt = np.zeros_like(theta)
        for node, alpha, esig, beta, th_inf, _rho_inf in self.bc:
            db_m_dP[node] += beta * c.M_w / (theta[node] * c.R)
            db_m_dt[node] += -beta * P[node] * c.M_w / (theta[node] ** 2 * c.R)
            db_t_dt[node] += alpha + 4.0 * esig * theta[node] ** 3
        return dse_dt, dse_dP, db_m_dt, db_m_dP, db_t_dt

    def banded_jacobian(self, theta: np.ndarray, P: np.ndarray, fd: bool) -> np.ndarray:
        """Jacobian in scipy solve_banded layout (l = u = 5), interleaved
        per node as (m, theta, P)."""
        n = self.mesh.n_nodes
        if fd:
            dse_dt, dse_dP, db_m_dt, db_m_dP, db_t_dt = self._fd_partials(theta, P)
        else:
            dse_dt, dse_dP, db_m_dt, db_m_dP, db_t_dt = self._analytic_partials(theta, P)

        ab = np.zeros((11, 3 * n))
        ones = np.ones(n)

        def put(a: int, b: int, T: _Tridiag):
            cols = np.arange(n)
            ab[5 + a - b, 3 * cols + b] += T.di
            ab[5 + a - b - 3, 3 * cols[1:] + b] += T.up[:-1]
            ab[5 + a - b + 3, 3 * cols[:-1] + b] += T.lo[1:]

        def put_diag(a: int, b: int, d: np.ndarray):
            ab[5 + a - b, 3 * np.arange(n) + b] += d

        put(0, 0, self.M_mm.scaled(1.0 / self.dt))
        put(0, 1, self.K_mt)
        put(0, 2, self.K_mP)
        put_diag(0, 1, db_m_dt)
        put_diag(0, 2, db_m_dP)

        put(1, 1, self.M_tt.scaled(1.0 / self.dt))
        put(1, 2, self.M_tP.scaled(1.0 / self.dt))
        put(1, 1, self.K_tt)
        put(1, 2, self.K_tP)
        put_diag(1, 1, db_t_dt)

        put_diag(2, 0, ones)
        put_diag(2, 1, -dse_dt)
        put_diag(2, 2, -dse_dP)
        return ab


def assemble(state_n: State, mesh: Mesh1D, scenario: "Scenario", t_next: float,
             dt: float, m_d_prev: np.ndarray | None = None) -> AssembledSystem:
    """Build the frozen matrices and residual data for one step.

    Coefficients are evaluated at Gauss points from the time-t_n nodal
    fields (the projected fields if the boundary moved), with the damage
    parameter amplifying the intrinsic permeability.  state_n.m_d must
    already hold the explicit t_{n+1} dehydration update; m_d_prev is the
    pre-update field whose increment enters the moisture and energy
    sources (defaults to no increment).
    """
    mat = scenario.material
    if np.any(mesh.h <= 0.0):
        raise ValueError("mesh contains a degenerate element")
    if m_d_prev is None:
        m_d_prev = state_n.m_d

    th_g, P_g = _gauss_fields(mesh, state_n.theta, state_n.P)
    P_g = np.maximum(P_g, 1e-6)
    s_g = FluidState(P=P_g, theta=np.maximum(th_g, 273.15))
    D_g = _damage_field(mat, P_g, th_g)
    moist, energy = transport.all_coefficients(mat, s_g, D_g)

    M_mm = _mass_block(mesh, None)
    M_tt = _mass_block(mesh, np.asarray(energy.M_thetatheta))
    M_tP = _mass_block(mesh, np.asarray(energy.M_thetaP))
    K_mt = _stiffness_block(mesh, np.asarray(moist.K_mtheta))
    K_mP = _stiffness_block(mesh, np.asarray(moist.K_mP))
    K_tt = _stiffness_block(mesh, np.asarray(energy.K_thetatheta))
    K_tP = _stiffness_block(mesh, np.asarray(energy.K_thetaP))

    # Explicit sources at t_n: dehydration exchange and the quadratic
    # gradient (advective) term of the energy balance.
    dmd_dt = (state_n.m_d - m_d_prev) / dt
    h_d = 2.4e6
    f_m_const = -M_mm.matvec(dmd_dt)
    f_t_const = h_d * M_mm.matvec(dmd_dt)

    grad_P = np.diff(state_n.P) / mesh.h
    grad_t = np.diff(state_n.theta) / mesh.h
    q_adv = (
        np.asarray(energy.C_thetaP) * grad_P[:, None]
        + np.asarray(energy.C_thetatheta) * grad_t[:, None]
    ) * grad_t[:, None]
    f_t_const = f_t_const - _load_vector(mesh, q_adv)

    if scenario.source_m is not None:
        f_m_const = f_m_const - _load_vector(mesh, scenario.source_m(mesh.gauss_x()))
    if scenario.source_theta is not None:
        f_t_const = f_t_const - _load_vector(mesh, scenario.source_theta(mesh.gauss_x()))

    bc = []
    for spec in (scenario.boundary_unexposed, scenario.boundary_exposed):
        node = 0 if spec.side == "x=0" else mesh.n_nodes - 1
        th_inf, rho_inf = spec.ambient(t_next)
        bc.append((node, spec.alpha_c, spec.e_sigma, spec.beta_c, th_inf, rho_inf))

    return AssembledSystem(
        mesh=mesh, dt=dt, mat=mat,
        M_mm=M_mm, M_tt=M_tt, M_tP=M_tP,
        K_mt=K_mt, K_mP=K_mP, K_tt=K_tt, K_tP=K_tP,
        f_m_const=f_m_const, f_t_const=f_t_const,
        m_n=state_n.m.copy(), theta_n=state_n.theta.copy(), P_n=state_n.P.copy(),
        bc=bc,
    )


def solve_nonlinear(system: AssembledSystem, state_n: State,
                    settings: SolverSettings) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float]]:
    """Newton iteration on the assembled step; returns (m, theta, P, history).

    Plain Newton with two safeguards: the step is capped so the iterate
    stays admissible (P > 0, theta above freezing), and a backtracking
    line search halves the step until the residual norm decreases (the
    sorption isotherm's saturated knee otherwise causes oscillation).
    """
    m = state_n.m.copy()
    theta = state_n.theta.copy()
    P = state_n.P.copy()

    R_m, R_t, R_P = system.residual(m, theta, P)
    r_prev = _norm(R_m, R_t, R_P)
    history = [r_prev]
    if r_prev == 0.0:
        return m, theta, P, history

    target = settings.newton_tol * (1.0 + r_prev)
    for _ in range(settings.newton_max_iter):
        ab = system.banded_jacobian(theta, P, fd=settings.fd_jacobian)
        rhs = np.empty(3 * system.mesh.n_nodes)
        rhs[0::3], rhs[1::3], rhs[2::3] = -R_m, -R_t, -R_P
        dx = solve_banded((5, 5), ab, rhs)
        dm, dth, dP = dx[0::3], dx[1::3], dx[2::3]

        # at machine accuracy the residual cannot be reduced further
        if (
            np.abs(dth).max() <= 1e-12 * np.abs(theta).max()
            and np.abs(dP).max() <= 1e-12 * np.abs(P).max()
            and np.abs(dm).max() <= 1e-12 * max(np.abs(m).max(), 1.0)
        ):
            return m, theta, P, history

        scale = 1.0
        bad_P = dP < 0.0
        if np.any(P[bad_P] + dP[bad_P] <= 0.0):
            scale = min(scale, 0.9 * np.min(P[bad_P] / -dP[bad_P]))
        bad_t = dth < 0.0
        if np.any(theta[bad_t] + dth[bad_t] <= 273.15):
            scale = min(scale, 0.9 * np.min((theta[bad_t] - 273.15) / -dth[bad_t]))

        best = None
        for _ls in range(12):
            cand = (m + scale * dm, theta + scale * dth, P + scale * dP)
            R_m, R_t, R_P = system.residual(*cand)
            r = _norm(R_m, R_t, R_P)
            if best is None or r < best[0]:
                best = (r, cand, (R_m, R_t, R_P))
            if r < r_prev or r <= target:
                break
            scale *= 0.5
        r, (m, theta, P), (R_m, R_t, R_P) = best
        history.append(r)
        r_prev = r
        if r <= target:
            return m, theta, P, history
    raise NewtonError(
        f"no convergence in {settings.newton_max_iter} iterations "
        f"(residual {history[-1]:.3e}, target {target:.3e})"
    )


def _norm(*parts: np.ndarray) -> float:
    return float(np.sqrt(sum(float(p @ p) for p in parts)))


def step_dehydration(mat: MaterialParams, theta_n: np.ndarray, m_d_n: np.ndarray,
                     dt: float) -> np.ndarray:
    """Explicit relaxation of the dehydrated mass toward equilibrium."""
    from .materials import dehydration_equilibrium

    return m_d_n - dt / mat.tau * (m_d_n - np.asarray(dehydration_equilibrium(mat, theta_n)))


def step_spalling(ell_n: float, max_F: float, dt: float, gamma: float) -> float:
    """Implicit-in-ell ablation update, closed form; never increases ell."""
    return ell_n / (1.0 + dt / gamma * max(max_F - 1.0, 0.0))


def remesh_and_project(state: State, ell_new: float) -> State:
    """Move the heated boundary to ell_new, discarding (ell_new, ell).

    Fields transfer by linear interpolation of the old profiles onto the
    new graded mesh; identical thickness returns the state unchanged.
    """
    if ell_new <= 0.0:
        raise ValueError("wall thickness must stay positive")
    if ell_new > state.ell:
        raise ValueError("the ablating boundary cannot grow")
    if ell_new == state.ell:
        return state
    mesh = build_mesh(ell_new, state.mesh.grading)
    old_x = state.mesh.nodes
    interp = lambda f: np.interp(mesh.nodes, old_x, f)
    return State(
        m=interp(state.m),
        theta=interp(state.theta),
        P=interp(state.P),
        m_d=interp(state.m_d),
        ell=ell_new,
        t=state.t,
        mesh=mesh,
    )


def advance(state_n: State, scenario: "Scenario", dt: float | None = None
            ) -> tuple[State, StepReport]:
    """One time step: spalling, projection, dehydration, assembly, Newton."""
    settings = scenario.settings
    dt = settings.dt if dt is None else dt
    t_next = state_n.t + dt

    F = failure_field(scenario.material, state_n.P, state_n.theta)
    max_F = float(F.max())
    ell_new = step_spalling(state_n.ell, max_F, dt, settings.gamma)
    work = remesh_and_project(state_n, ell_new)

    m_d_prev = work.m_d
    m_d_new = step_dehydration(scenario.material, work.theta, work.m_d, dt)
    work = replace(work, m_d=m_d_new)

    system = assemble(work, work.mesh, scenario, t_next, dt, m_d_prev=m_d_prev)
    m, theta, P, history = solve_nonlinear(system, work, settings)

    new_state = State(m=m, theta=theta, P=P, m_d=m_d_new, ell=ell_new, t=t_next,
                      mesh=work.mesh)
    report = StepReport(
        iterations=len(history) - 1,
        residual=history[-1],
        residual_history=tuple(history),
        max_F=max_F,
        ell=ell_new,
        dt=dt,
    )
    return new_state, report


# ---------------------------------------------------------------------------
# Run loop and time series
# ---------------------------------------------------------------------------

@dataclass
class TimeSeries:
    """Recorded evolution of a run, one row per output instant."""

    scenario_name: str
    probe_depths: tuple[float, ...]
    dt: float
    gamma: float
    times: np.ndarray
    ell: np.ndarray
    max_F: np.ndarray
    total_moisture: np.ndarray
    mass_loss_fraction: np.ndarray
    probe_theta: np.ndarray  # (n_rows, n_probes)
    probe_P: np.ndarray
    spall_times: dict[float, float]
    final_state: State
    reports: list[StepReport]
    # diagnostics (not part of the CSV schema)
    peak_pressure: float = 0.0  # running max of the nodal P field
    peak_P_depth: np.ndarray | None = None  # depth of the P-profile maximum per row


def _probe_values(state: State, depths: tuple[float, ...]):
    """Fields at depths measured from the current heated face x = ell."""
    theta_vals, P_vals = [], []
    for d in depths:
        x = state.ell - d
        if x <= 0.0:
            theta_vals.append(np.nan)
            P_vals.append(np.nan)
        else:
            theta_vals.append(float(np.interp(x, state.mesh.nodes, state.theta)))
            P_vals.append(float(np.interp(x, state.mesh.nodes, state.P)))
    return theta_vals, P_vals


def run(scenario: "Scenario", progress: Callable[[float], None] | None = None) -> TimeSeries:
    """Integrate a scenario over its full duration.

    Records every output_every seconds of simulated time (plus the initial
    and final instants): thickness, peak failure parameter, total moisture
    inventory, mass-loss fraction and the probe traces.  The mass-loss
    fraction is 1 - W(t) / (W(0) + D(t)) with W the moisture inventory and
    D the dehydrated inventory, i.e. the expelled fraction of all water
    that has ever occupied the pores.  A Newton failure retries the step
    once with dt/2 (two half steps); a second failure aborts.
    """
    report_fields: list[StepReport] = []
    rows: list[tuple] = []
    spall_times: dict[float, float] = {}

    state = initial_state(scenario)
    W0 = state.total_moisture()
    peak_pressure = float(state.P.max())
    peak_depths: list[float] = []

    def record(st: State):
        theta_vals, P_vals = _probe_values(st, scenario.probe_depths)
        for d, th in zip(scenario.probe_depths, theta_vals):
            if np.isnan(th) and d not in spall_times:
                spall_times[d] = st.t
        W = st.total_moisture()
        D = st.total_dehydrated()
        loss = 1.0 - W / (W0 + D)
        max_F = float(failure_field(scenario.material, st.P, st.theta).max())
        rows.append((st.t, st.ell, max_F, W, loss, theta_vals, P_vals))
        peak_depths.append(st.ell - float(st.mesh.nodes[int(np.argmax(st.P))]))

    record(state)
    n_steps = int(round(scenario.duration / scenario.settings.dt))
    next_output = scenario.output_every

    for n in range(n_steps):
        try:
            state, rep = advance(state, scenario)
            report_fields.append(rep)
        except NewtonError:
            half = scenario.settings.dt / 2.0
            try:
                state, rep1 = advance(state, scenario, dt=half)
                state, rep2 = advance(state, scenario, dt=half)
                report_fields.extend([rep1, rep2])
            except NewtonError as exc:
                raise SolverAbort(
                    f"step to t = {state.t + half:.3f} s failed after halving dt: {exc}"
                ) from exc
        peak_pressure = max(peak_pressure, float(state.P.max()))
        if state.t >= next_output - 1e-9 or n == n_steps - 1:
            record(state)
            while next_output <= state.t + 1e-9:
                next_output += scenario.output_every
        if progress is not None:
            progress(state.t)

    times = np.array([r[0] for r in rows])
    return TimeSeries(
        scenario_name=scenario.name,
        probe_depths=scenario.probe_depths,
        dt=scenario.settings.dt,
        gamma=scenario.settings.gamma,
        times=times,
        ell=np.array([r[1] for r in rows]),
        max_F=np.array([r[2] for r in rows]),
        total_moisture=np.array([r[3] for r in rows]),
        mass_loss_fraction=np.array([r[4] for r in rows]),
        probe_theta=np.array([r[5] for r in rows]),
        probe_P=np.array([r[6] for r in rows]),
        spall_times=spall_times,
        final_state=state,
        reports=report_fields,
        peak_pressure=peak_pressure,
        peak_P_depth=np.array(peak_depths),
    )
