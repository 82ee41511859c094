"""Hot numerical kernels: energies, gradients, and descent loops.

Two interchangeable backends live here. The default compiles the loops with
numba's @njit; setting the environment variable CYLMIN_NUMBA=0 (or numba
simply not being importable) selects the vectorized pure-numpy twin. Both
implement the same arithmetic; tests compare them directly.

Discretization notes, shared by both backends:

* All circle derivatives act on the moving-frame components (m1, m2, m3) =
  (m.tau, m.n, m.e3), for which the pointwise identity
      |dm/dt|^2 = (m1' + m2)^2 + (m2' - m1)^2 + (m3')^2
  holds. Frame components of the distinguished constant-component fields are
  grid constants, so their energies come out exact.
* The Dirichlet term lives on edges: a 4th-order staggered stencil evaluates
  the derivative and the interpolant at half nodes, then the rectangle rule
  sums edge densities. The anisotropy kappa^2 (m1^2 + m3^2) is nodal.
* Gradients are the exact differentials of these discrete sums (adjoint
  stencils), scaled to the L2 inner product h * sum(g . phi), then projected
  onto the node-wise tangent planes.
* Cylinder fields add |dm/dz|^2 with centered differences inside and
  one-sided 2nd-order stencils at the free ends z = +/-1; the z-quadrature is
  the trapezoid rule, so end rings carry half weight.
"""

from __future__ import annotations

import os

import numpy as np

STALL_STEP = 1e-16
# Step caps sit at 1.8 / (Hessian norm bound) so every mode stays strictly
# inside the explicit-step stability region; an energy-only line search would
# otherwise let grid-scale modes grow slowly under cover of bulk decrease.
# Stencil symbol maxima: |derivative| <= 7/(3h), |average|^2 <= 25/16.


def ring_step_cap(kappa2: float, h: float) -> float:
    lam = 2.0 * ((7.0 / (3.0 * h)) ** 2 + 1.5625 + kappa2)
    return 1.8 / lam


def cylinder_step_cap(kappa2: float, h: float, hz: float) -> float:
    lam = 2.0 * ((7.0 / (3.0 * h)) ** 2 + 1.5625 + kappa2) + 40.0 / (hz * hz)
    return 1.8 / lam


def theta_step_cap(kappa2: float, h: float) -> float:
    return 1.8 / (8.0 / (h * h) + 2.0 * kappa2)
PLANE_GUARD = 1e-12


def _numba_requested() -> bool:
    flag = os.environ.get("CYLMIN_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


HAS_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA


# ---------------------------------------------------------------------------
# pure-numpy backend


def _stag_d(m: np.ndarray, h: float) -> np.ndarray:
    # 4th-order derivative at half nodes; exact on constants
    return (27.0 * (np.roll(m, -1) - m) - (np.roll(m, -2) - np.roll(m, 1))) / (24.0 * h)


def _stag_a(m: np.ndarray) -> np.ndarray:
    # 4th-order interpolation at half nodes; exact on constants
    return (9.0 * (m + np.roll(m, -1)) - (np.roll(m, 1) + np.roll(m, -2))) / 16.0


def _stag_dT(r: np.ndarray, h: float) -> np.ndarray:
    return (27.0 * (np.roll(r, 1) - r) + (np.roll(r, -1) - np.roll(r, 2))) / (24.0 * h)


def _stag_aT(r: np.ndarray) -> np.ndarray:
    return (9.0 * (r + np.roll(r, 1)) - (np.roll(r, -1) + np.roll(r, 2))) / 16.0


def _components_np(values, tau, nrm):
    m1 = np.einsum("ij,ij->i", values, tau)
    m2 = np.einsum("ij,ij->i", values, nrm)
    m3 = values[:, 2]
    return m1, m2, m3


def ring_parts_np(values, tau, nrm, kappa2, h):
    m1, m2, m3 = _components_np(values, tau, nrm)
    r1 = _stag_d(m1, h) + _stag_a(m2)
    r2 = _stag_d(m2, h) - _stag_a(m1)
    r3 = _stag_d(m3, h)
    dirichlet = h * float(np.sum(r1 * r1 + r2 * r2 + r3 * r3))
    anisotropy = kappa2 * h * float(np.sum(m1 * m1 + m3 * m3))
    return dirichlet, anisotropy


def ring_gradient_np(values, tau, nrm, kappa2, h):
    m1, m2, m3 = _components_np(values, tau, nrm)
    r1 = _stag_d(m1, h) + _stag_a(m2)
    r2 = _stag_d(m2, h) - _stag_a(m1)
    r3 = _stag_d(m3, h)
    g1 = 2.0 * (_stag_dT(r1, h) - _stag_aT(r2) + kappa2 * m1)
    g2 = 2.0 * (_stag_aT(r1) + _stag_dT(r2, h))
    g3 = 2.0 * (_stag_dT(r3, h) + kappa2 * m3)
    g = g1[:, None] * tau + g2[:, None] * nrm
    g[:, 2] += g3
    g -= np.einsum("ij,ij->i", g, values)[:, None] * values
    return g


def _renormalize_np(values):
    norms = np.linalg.norm(values, axis=-1)
    if np.min(norms) < 1e-9:
        raise ValueError("renormalization hit a near-zero vector")
    return values / norms[..., None]


def descend_ring_np(
    values, tau, nrm, kappa2, h, step0, grad_tol, energy_tol, max_iters, in_plane
):
    v = values.copy()
    cap = ring_step_cap(kappa2, h)
    energies = np.empty(max_iters + 1)
    d, a = ring_parts_np(v, tau, nrm, kappa2, h)
    energy = d + a
    energies[0] = energy
    step = min(step0, cap)
    converged = False
    count = 0
    for _ in range(max_iters):
        if in_plane and np.max(np.abs(v[:, 2])) > PLANE_GUARD:
            raise ValueError("in-plane constraint violated during descent")
        g = ring_gradient_np(v, tau, nrm, kappa2, h)
        gnorm = np.sqrt(h * float(np.sum(g * g)))
        if gnorm <= grad_tol:
            converged = True
            break
        s = min(step * 2.0, cap)
        accepted = False
        while s > STALL_STEP:
            cand = _renormalize_np(v - s * g)
            dc, ac = ring_parts_np(cand, tau, nrm, kappa2, h)
            cand_energy = dc + ac
            if cand_energy < energy:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        decrement = energy - cand_energy
        v = cand
        energy = cand_energy
        step = s
        count += 1
        energies[count] = energy
        if decrement < energy_tol:
            converged = True
            break
    return v, energies[: count + 1].copy(), count, converged, step


def _z_derivative_np(values, hz):
    q = np.empty_like(values)
    q[1:-1] = (values[2:] - values[:-2]) / (2.0 * hz)
    q[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * hz)
    q[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * hz)
    return q


def _z_derivative_T_np(r, hz):
    out = np.zeros_like(r)
    out[2:] += r[1:-1] / (2.0 * hz)
    out[:-2] -= r[1:-1] / (2.0 * hz)
    out[0] += -3.0 * r[0] / (2.0 * hz)
    out[1] += 4.0 * r[0] / (2.0 * hz)
    out[2] += -r[0] / (2.0 * hz)
    out[-1] += 3.0 * r[-1] / (2.0 * hz)
    out[-2] += -4.0 * r[-1] / (2.0 * hz)
    out[-3] += r[-1] / (2.0 * hz)
    return out


def cylinder_parts_np(values, tau, nrm, kappa2, h, wz, hz):
    dirichlet = 0.0
    anisotropy = 0.0
    for k in range(values.shape[0]):
        d, a = ring_parts_np(values[k], tau, nrm, kappa2, h)
        dirichlet += wz[k] * d
        anisotropy += wz[k] * a
    q = _z_derivative_np(values, hz)
    dirichlet += h * float(np.sum(wz[:, None, None] * q * q))
    return dirichlet, anisotropy


def cylinder_gradient_np(values, tau, nrm, kappa2, h, wz, hz):
    g = np.empty_like(values)
    for k in range(values.shape[0]):
        m1, m2, m3 = _components_np(values[k], tau, nrm)
        r1 = _stag_d(m1, h) + _stag_a(m2)
        r2 = _stag_d(m2, h) - _stag_a(m1)
        r3 = _stag_d(m3, h)
        g1 = 2.0 * (_stag_dT(r1, h) - _stag_aT(r2) + kappa2 * m1)
        g2 = 2.0 * (_stag_aT(r1) + _stag_dT(r2, h))
        g3 = 2.0 * (_stag_dT(r3, h) + kappa2 * m3)
        g[k] = g1[:, None] * tau + g2[:, None] * nrm
        g[k, :, 2] += g3
    q = _z_derivative_np(values, hz)
    g += 2.0 * _z_derivative_T_np(wz[:, None, None] * q, hz) / wz[:, None, None]
    g -= np.einsum("kij,kij->ki", g, values)[..., None] * values
    return g


def was_project_np(values, tol, max_sweeps):
    """Alternate mean-removal of the planar part with renormalization."""
    residual = np.inf
    for _ in range(max_sweeps):
        means = values[:, :, :2].mean(axis=1)
        values[:, :, :2] -= means[:, None, :]
        values[:] = _renormalize_np(values)
        residual = float(np.max(np.abs(values[:, :, :2].mean(axis=1))))
        if residual < tol:
            break
    return residual


def descend_cylinder_np(
    values, tau, nrm, kappa2, h, wz, hz, step0, grad_tol, energy_tol, max_iters, was
):
    v = values.copy()
    if was:
        was_project_np(v, 1e-12, 60)
    cap = cylinder_step_cap(kappa2, h, hz)
    energies = np.empty(max_iters + 1)
    d, a = cylinder_parts_np(v, tau, nrm, kappa2, h, wz, hz)
    energy = d + a
    energies[0] = energy
    step = min(step0, cap)
    converged = False
    count = 0
    for _ in range(max_iters):
        g = cylinder_gradient_np(v, tau, nrm, kappa2, h, wz, hz)
        gnorm = np.sqrt(h * float(np.sum(wz[:, None, None] * g * g)))
        if gnorm <= grad_tol:
            converged = True
            break
        s = min(step * 2.0, cap)
        accepted = False
        while s > STALL_STEP:
            cand = _renormalize_np(v - s * g)
            if was:
                was_project_np(cand, 1e-12, 60)
            dc, ac = cylinder_parts_np(cand, tau, nrm, kappa2, h, wz, hz)
            cand_energy = dc + ac
            if cand_energy < energy:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        decrement = energy - cand_energy
        v = cand
        energy = cand_energy
        step = s
        count += 1
        energies[count] = energy
        if decrement < energy_tol:
            converged = True
            break
    return v, energies[: count + 1].copy(), count, converged, step


def theta_energy_np(theta, turns, kappa2, h, offset):
    d = (np.roll(theta, -1) - theta) / h
    d[-1] += offset * turns / h
    dirichlet = h * float(np.sum(d * d))
    aniso = kappa2 * h * float(np.sum(np.sin(theta) ** 2))
    return dirichlet + aniso + offset * (1.0 + 2.0 * turns)


def theta_gradient_np(theta, turns, kappa2, h, offset):
    up = np.roll(theta, -1)
    up[-1] += offset * turns
    dn = np.roll(theta, 1)
    dn[0] -= offset * turns
    lap = (up - 2.0 * theta + dn) / (h * h)
    return -2.0 * lap + kappa2 * np.sin(2.0 * theta)


def descend_theta_np(
    theta, turns, kappa2, h, offset, step0, grad_tol, energy_tol, max_iters
):
    th = theta.copy()
    cap = theta_step_cap(kappa2, h)
    energies = np.empty(max_iters + 1)
    energy = theta_energy_np(th, turns, kappa2, h, offset)
    energies[0] = energy
    step = min(step0, cap)
    converged = False
    count = 0
    for _ in range(max_iters):
        g = theta_gradient_np(th, turns, kappa2, h, offset)
        gnorm = np.sqrt(h * float(np.sum(g * g)))
        if gnorm <= grad_tol:
            converged = True
            break
        s = min(step * 2.0, cap)
        accepted = False
        while s > STALL_STEP:
            cand = th - s * g
            cand_energy = theta_energy_np(cand, turns, kappa2, h, offset)
            if cand_energy < energy:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        decrement = energy - cand_energy
        th = cand
        energy = cand_energy
        step = s
        count += 1
        energies[count] = energy
        if decrement < energy_tol:
            converged = True
            break
    return th, energies[: count + 1].copy(), count, converged, step


# ---------------------------------------------------------------------------
# numba backend: identical arithmetic, explicit loops

if USING_NUMBA:

    @njit(cache=True, nogil=True)
    def _ring_parts_jit(values, tau, nrm, kappa2, h):
        n = values.shape[0]
        dirichlet = 0.0
        anisotropy = 0.0
        for i in range(n):
            ip1 = i + 1 if i + 1 < n else i + 1 - n
            ip2 = i + 2 if i + 2 < n else i + 2 - n
            im1 = i - 1 if i - 1 >= 0 else i - 1 + n
            m1_i = values[i, 0] * tau[i, 0] + values[i, 1] * tau[i, 1] + values[i, 2] * tau[i, 2]
            m2_i = values[i, 0] * nrm[i, 0] + values[i, 1] * nrm[i, 1] + values[i, 2] * nrm[i, 2]
            m3_i = values[i, 2]
            anisotropy += m1_i * m1_i + m3_i * m3_i
            m1_p1 = values[ip1, 0] * tau[ip1, 0] + values[ip1, 1] * tau[ip1, 1] + values[ip1, 2] * tau[ip1, 2]
            m2_p1 = values[ip1, 0] * nrm[ip1, 0] + values[ip1, 1] * nrm[ip1, 1] + values[ip1, 2] * nrm[ip1, 2]
            m3_p1 = values[ip1, 2]
            m1_p2 = values[ip2, 0] * tau[ip2, 0] + values[ip2, 1] * tau[ip2, 1] + values[ip2, 2] * tau[ip2, 2]
            m2_p2 = values[ip2, 0] * nrm[ip2, 0] + values[ip2, 1] * nrm[ip2, 1] + values[ip2, 2] * nrm[ip2, 2]
            m3_p2 = values[ip2, 2]
            m1_m1 = values[im1, 0] * tau[im1, 0] + values[im1, 1] * tau[im1, 1] + values[im1, 2] * tau[im1, 2]
            m2_m1 = values[im1, 0] * nrm[im1, 0] + values[im1, 1] * nrm[im1, 1] + values[im1, 2] * nrm[im1, 2]
            m3_m1 = values[im1, 2]
            d1 = (27.0 * (m1_p1 - m1_i) - (m1_p2 - m1_m1)) / (24.0 * h)
            a1 = (9.0 * (m1_i + m1_p1) - (m1_m1 + m1_p2)) / 16.0
            d2 = (27.0 * (m2_p1 - m2_i) - (m2_p2 - m2_m1)) / (24.0 * h)
            a2 = (9.0 * (m2_i + m2_p1) - (m2_m1 + m2_p2)) / 16.0
            d3 = (27.0 * (m3_p1 - m3_i) - (m3_p2 - m3_m1)) / (24.0 * h)
            r1 = d1 + a2
            r2 = d2 - a1
            dirichlet += r1 * r1 + r2 * r2 + d3 * d3
        return h * dirichlet, kappa2 * h * anisotropy

    @njit(cache=True, nogil=True)
    def _ring_gradient_jit(values, tau, nrm, kappa2, h, out):
        n = values.shape[0]
        m1 = np.empty(n)
        m2 = np.empty(n)
        m3 = np.empty(n)
        for i in range(n):
            m1[i] = values[i, 0] * tau[i, 0] + values[i, 1] * tau[i, 1] + values[i, 2] * tau[i, 2]
            m2[i] = values[i, 0] * nrm[i, 0] + values[i, 1] * nrm[i, 1] + values[i, 2] * nrm[i, 2]
            m3[i] = values[i, 2]
        r1 = np.empty(n)
        r2 = np.empty(n)
        r3 = np.empty(n)
        for i in range(n):
            ip1 = i + 1 if i + 1 < n else i + 1 - n
            ip2 = i + 2 if i + 2 < n else i + 2 - n
            im1 = i - 1 if i - 1 >= 0 else i - 1 + n
            d1 = (27.0 * (m1[ip1] - m1[i]) - (m1[ip2] - m1[im1])) / (24.0 * h)
            a1 = (9.0 * (m1[i] + m1[ip1]) - (m1[im1] + m1[ip2])) / 16.0
            d2 = (27.0 * (m2[ip1] - m2[i]) - (m2[ip2] - m2[im1])) / (24.0 * h)
            a2 = (9.0 * (m2[i] + m2[ip1]) - (m2[im1] + m2[ip2])) / 16.0
            d3 = (27.0 * (m3[ip1] - m3[i]) - (m3[ip2] - m3[im1])) / (24.0 * h)
            r1[i] = d1 + a2
            r2[i] = d2 - a1
            r3[i] = d3
        for i in range(n):
            im1 = i - 1 if i - 1 >= 0 else i - 1 + n
            im2 = i - 2 if i - 2 >= 0 else i - 2 + n
            ip1 = i + 1 if i + 1 < n else i + 1 - n
            dT1 = (27.0 * (r1[im1] - r1[i]) + (r1[ip1] - r1[im2])) / (24.0 * h)
            aT1 = (9.0 * (r1[i] + r1[im1]) - (r1[ip1] + r1[im2])) / 16.0
            dT2 = (27.0 * (r2[im1] - r2[i]) + (r2[ip1] - r2[im2])) / (24.0 * h)
            aT2 = (9.0 * (r2[i] + r2[im1]) - (r2[ip1] + r2[im2])) / 16.0
            dT3 = (27.0 * (r3[im1] - r3[i]) + (r3[ip1] - r3[im2])) / (24.0 * h)
            g1 = 2.0 * (dT1 - aT2 + kappa2 * m1[i])
            g2 = 2.0 * (aT1 + dT2)
            g3 = 2.0 * (dT3 + kappa2 * m3[i])
            gx = g1 * tau[i, 0] + g2 * nrm[i, 0]
            gy = g1 * tau[i, 1] + g2 * nrm[i, 1]
            gz = g1 * tau[i, 2] + g2 * nrm[i, 2] + g3
            dot = gx * values[i, 0] + gy * values[i, 1] + gz * values[i, 2]
            out[i, 0] = gx - dot * values[i, 0]
            out[i, 1] = gy - dot * values[i, 1]
            out[i, 2] = gz - dot * values[i, 2]
        return out

    @njit(cache=True, nogil=True)
    def _descend_ring_jit(
        values, tau, nrm, kappa2, h, cap, step0, grad_tol, energy_tol, max_iters, in_plane
    ):
        n = values.shape[0]
        v = values.copy()
        g = np.empty_like(v)
        cand = np.empty_like(v)
        energies = np.empty(max_iters + 1)
        d, a = _ring_parts_jit(v, tau, nrm, kappa2, h)
        energy = d + a
        energies[0] = energy
        step = min(step0, cap)
        converged = False
        count = 0
        for _ in range(max_iters):
            if in_plane:
                for i in range(n):
                    if abs(v[i, 2]) > PLANE_GUARD:
                        raise ValueError("in-plane constraint violated during descent")
            _ring_gradient_jit(v, tau, nrm, kappa2, h, g)
            gsq = 0.0
            for i in range(n):
                gsq += g[i, 0] * g[i, 0] + g[i, 1] * g[i, 1] + g[i, 2] * g[i, 2]
            gnorm = np.sqrt(h * gsq)
            if gnorm <= grad_tol:
                converged = True
                break
            s = step * 2.0
            if s > cap:
                s = cap
            accepted = False
            cand_energy = energy
            while s > STALL_STEP:
                for i in range(n):
                    cx = v[i, 0] - s * g[i, 0]
                    cy = v[i, 1] - s * g[i, 1]
                    cz = v[i, 2] - s * g[i, 2]
                    norm = np.sqrt(cx * cx + cy * cy + cz * cz)
                    if norm < 1e-9:
                        raise ValueError("renormalization hit a near-zero vector")
                    cand[i, 0] = cx / norm
                    cand[i, 1] = cy / norm
                    cand[i, 2] = cz / norm
                dc, ac = _ring_parts_jit(cand, tau, nrm, kappa2, h)
                cand_energy = dc + ac
                if cand_energy < energy:
                    accepted = True
                    break
                s *= 0.5
            if not accepted:
                break
            decrement = energy - cand_energy
            for i in range(n):
                v[i, 0] = cand[i, 0]
                v[i, 1] = cand[i, 1]
                v[i, 2] = cand[i, 2]
            energy = cand_energy
            step = s
            count += 1
            energies[count] = energy
            if decrement < energy_tol:
                converged = True
                break
        return v, energies[: count + 1].copy(), count, converged, step

    @njit(cache=True, nogil=True)
    def _z_derivative_jit(values, hz, out):
        nz = values.shape[0]
        n = values.shape[1]
        for i in range(n):
            for c in range(3):
                out[0, i, c] = (
                    -3.0 * values[0, i, c] + 4.0 * values[1, i, c] - values[2, i, c]
                ) / (2.0 * hz)
                out[nz - 1, i, c] = (
                    3.0 * values[nz - 1, i, c]
                    - 4.0 * values[nz - 2, i, c]
                    + values[nz - 3, i, c]
                ) / (2.0 * hz)
        for k in range(1, nz - 1):
            for i in range(n):
                for c in range(3):
                    out[k, i, c] = (values[k + 1, i, c] - values[k - 1, i, c]) / (2.0 * hz)
        return out

    @njit(cache=True, nogil=True)
    def _cylinder_parts_jit(values, tau, nrm, kappa2, h, wz, hz):
        nz = values.shape[0]
        dirichlet = 0.0
        anisotropy = 0.0
        for k in range(nz):
            d, a = _ring_parts_jit(values[k], tau, nrm, kappa2, h)
            dirichlet += wz[k] * d
            anisotropy += wz[k] * a
        q = np.empty_like(values)
        _z_derivative_jit(values, hz, q)
        zsum = 0.0
        for k in range(nz):
            ring = 0.0
            for i in range(values.shape[1]):
                ring += (
                    q[k, i, 0] * q[k, i, 0]
                    + q[k, i, 1] * q[k, i, 1]
                    + q[k, i, 2] * q[k, i, 2]
                )
            zsum += wz[k] * ring
        dirichlet += h * zsum
        return dirichlet, anisotropy

    @njit(cache=True, nogil=True)
    def _cylinder_gradient_jit(values, tau, nrm, kappa2, h, wz, hz, out):
        nz = values.shape[0]
        n = values.shape[1]
        for k in range(nz):
            _ring_gradient_jit(values[k], tau, nrm, kappa2, h, out[k])
        # node projector is linear, so ring part and z part project separately
        q = np.empty_like(values)
        _z_derivative_jit(values, hz, q)
        for k in range(nz):
            for i in range(n):
                for c in range(3):
                    q[k, i, c] *= wz[k]
        zgrad = np.zeros_like(values)
        for i in range(n):
            for c in range(3):
                zgrad[0, i, c] += -3.0 * q[0, i, c] / (2.0 * hz)
                zgrad[1, i, c] += 4.0 * q[0, i, c] / (2.0 * hz)
                zgrad[2, i, c] += -q[0, i, c] / (2.0 * hz)
                zgrad[nz - 1, i, c] += 3.0 * q[nz - 1, i, c] / (2.0 * hz)
                zgrad[nz - 2, i, c] += -4.0 * q[nz - 1, i, c] / (2.0 * hz)
                zgrad[nz - 3, i, c] += q[nz - 1, i, c] / (2.0 * hz)
        for k in range(1, nz - 1):
            for i in range(n):
                for c in range(3):
                    zgrad[k + 1, i, c] += q[k, i, c] / (2.0 * hz)
                    zgrad[k - 1, i, c] -= q[k, i, c] / (2.0 * hz)
        for k in range(nz):
            for i in range(n):
                zx = 2.0 * zgrad[k, i, 0] / wz[k]
                zy = 2.0 * zgrad[k, i, 1] / wz[k]
                zz = 2.0 * zgrad[k, i, 2] / wz[k]
                dot = (
                    zx * values[k, i, 0]
                    + zy * values[k, i, 1]
                    + zz * values[k, i, 2]
                )
                out[k, i, 0] += zx - dot * values[k, i, 0]
                out[k, i, 1] += zy - dot * values[k, i, 1]
                out[k, i, 2] += zz - dot * values[k, i, 2]
        return out

    @njit(cache=True, nogil=True)
    def _was_project_jit(values, tol, max_sweeps):
        nz = values.shape[0]
        n = values.shape[1]
        residual = 1e300
        for _ in range(max_sweeps):
            for k in range(nz):
                mx = 0.0
                my = 0.0
                for i in range(n):
                    mx += values[k, i, 0]
                    my += values[k, i, 1]
                mx /= n
                my /= n
                for i in range(n):
                    cx = values[k, i, 0] - mx
                    cy = values[k, i, 1] - my
                    cz = values[k, i, 2]
                    norm = np.sqrt(cx * cx + cy * cy + cz * cz)
                    if norm < 1e-9:
                        raise ValueError("renormalization hit a near-zero vector")
                    values[k, i, 0] = cx / norm
                    values[k, i, 1] = cy / norm
                    values[k, i, 2] = cz / norm
            residual = 0.0
            for k in range(nz):
                mx = 0.0
                my = 0.0
                for i in range(n):
                    mx += values[k, i, 0]
                    my += values[k, i, 1]
                mx = abs(mx / n)
                my = abs(my / n)
                if mx > residual:
                    residual = mx
                if my > residual:
                    residual = my
            if residual < tol:
                break
        return residual

    @njit(cache=True, nogil=True)
    def _descend_cylinder_jit(
        values, tau, nrm, kappa2, h, wz, hz, cap, step0, grad_tol, energy_tol, max_iters, was
    ):
        nz = values.shape[0]
        n = values.shape[1]
        v = values.copy()
        if was:
            _was_project_jit(v, 1e-12, 60)
        g = np.empty_like(v)
        cand = np.empty_like(v)
        energies = np.empty(max_iters + 1)
        d, a = _cylinder_parts_jit(v, tau, nrm, kappa2, h, wz, hz)
        energy = d + a
        energies[0] = energy
        step = min(step0, cap)
        converged = False
        count = 0
        for _ in range(max_iters):
            _cylinder_gradient_jit(v, tau, nrm, kappa2, h, wz, hz, g)
            gsq = 0.0
            for k in range(nz):
                ring = 0.0
                for i in range(n):
                    ring += (
                        g[k, i, 0] * g[k, i, 0]
                        + g[k, i, 1] * g[k, i, 1]
                        + g[k, i, 2] * g[k, i, 2]
                    )
                gsq += wz[k] * ring
            gnorm = np.sqrt(h * gsq)
            if gnorm <= grad_tol:
                converged = True
                break
            s = step * 2.0
            if s > cap:
                s = cap
            accepted = False
            cand_energy = energy
            while s > STALL_STEP:
                for k in range(nz):
                    for i in range(n):
                        cx = v[k, i, 0] - s * g[k, i, 0]
                        cy = v[k, i, 1] - s * g[k, i, 1]
                        cz = v[k, i, 2] - s * g[k, i, 2]
                        norm = np.sqrt(cx * cx + cy * cy + cz * cz)
                        if norm < 1e-9:
                            raise ValueError("renormalization hit a near-zero vector")
                        cand[k, i, 0] = cx / norm
                        cand[k, i, 1] = cy / norm
                        cand[k, i, 2] = cz / norm
                if was:
                    _was_project_jit(cand, 1e-12, 60)
                dc, ac = _cylinder_parts_jit(cand, tau, nrm, kappa2, h, wz, hz)
                cand_energy = dc + ac
                if cand_energy < energy:
                    accepted = True
                    break
                s *= 0.5
            if not accepted:
                break
            decrement = energy - cand_energy
            for k in range(nz):
                for i in range(n):
                    v[k, i, 0] = cand[k, i, 0]
                    v[k, i, 1] = cand[k, i, 1]
                    v[k, i, 2] = cand[k, i, 2]
            energy = cand_energy
            step = s
            count += 1
            energies[count] = energy
            if decrement < energy_tol:
                converged = True
                break
        return v, energies[: count + 1].copy(), count, converged, step

    @njit(cache=True, nogil=True)
    def _theta_energy_jit(theta, turns, kappa2, h, offset):
        n = theta.shape[0]
        dirichlet = 0.0
        aniso = 0.0
        for i in range(n):
            up = theta[i + 1] if i + 1 < n else theta[0] + offset * turns
            d = (up - theta[i]) / h
            dirichlet += d * d
            s = np.sin(theta[i])
            aniso += s * s
        return h * dirichlet + kappa2 * h * aniso + offset * (1.0 + 2.0 * turns)

    @njit(cache=True, nogil=True)
    def _theta_gradient_jit(theta, turns, kappa2, h, offset, out):
        n = theta.shape[0]
        for i in range(n):
            up = theta[i + 1] if i + 1 < n else theta[0] + offset * turns
            dn = theta[i - 1] if i - 1 >= 0 else theta[n - 1] - offset * turns
            lap = (up - 2.0 * theta[i] + dn) / (h * h)
            out[i] = -2.0 * lap + kappa2 * np.sin(2.0 * theta[i])
        return out

    @njit(cache=True, nogil=True)
    def _descend_theta_jit(
        theta, turns, kappa2, h, offset, cap, step0, grad_tol, energy_tol, max_iters
    ):
        n = theta.shape[0]
        th = theta.copy()
        g = np.empty_like(th)
        energies = np.empty(max_iters + 1)
        energy = _theta_energy_jit(th, turns, kappa2, h, offset)
        energies[0] = energy
        step = min(step0, cap)
        converged = False
        count = 0
        for _ in range(max_iters):
            _theta_gradient_jit(th, turns, kappa2, h, offset, g)
            gsq = 0.0
            for i in range(n):
                gsq += g[i] * g[i]
            gnorm = np.sqrt(h * gsq)
            if gnorm <= grad_tol:
                converged = True
                break
            s = step * 2.0
            if s > cap:
                s = cap
            accepted = False
            cand_energy = energy
            cand = th
            while s > STALL_STEP:
                cand = th - s * g
                cand_energy = _theta_energy_jit(cand, turns, kappa2, h, offset)
                if cand_energy < energy:
                    accepted = True
                    break
                s *= 0.5
            if not accepted:
                break
            decrement = energy - cand_energy
            th = cand
            energy = cand_energy
            step = s
            count += 1
            energies[count] = energy
            if decrement < energy_tol:
                converged = True
                break
        return th, energies[: count + 1].copy(), count, converged, step


# ---------------------------------------------------------------------------
# backend dispatch

if USING_NUMBA:

    def ring_parts(values, tau, nrm, kappa2, h):
        return _ring_parts_jit(values, tau, nrm, kappa2, h)

    def ring_gradient(values, tau, nrm, kappa2, h):
        out = np.empty_like(values)
        return _ring_gradient_jit(values, tau, nrm, kappa2, h, out)

    def descend_ring(values, tau, nrm, kappa2, h, step0, grad_tol, energy_tol, max_iters, in_plane):
        cap = ring_step_cap(kappa2, h)
        return _descend_ring_jit(
            values, tau, nrm, kappa2, h, cap, step0, grad_tol, energy_tol, max_iters, in_plane
        )

    def cylinder_parts(values, tau, nrm, kappa2, h, wz, hz):
        return _cylinder_parts_jit(values, tau, nrm, kappa2, h, wz, hz)

    def cylinder_gradient(values, tau, nrm, kappa2, h, wz, hz):
        out = np.empty_like(values)
        return _cylinder_gradient_jit(values, tau, nrm, kappa2, h, wz, hz, out)

    def descend_cylinder(values, tau, nrm, kappa2, h, wz, hz, step0, grad_tol, energy_tol, max_iters, was):
        cap = cylinder_step_cap(kappa2, h, hz)
        return _descend_cylinder_jit(
            values, tau, nrm, kappa2, h, wz, hz, cap, step0, grad_tol, energy_tol, max_iters, was
        )

    def was_project(values, tol=1e-12, max_sweeps=60):
        return _was_project_jit(values, tol, max_sweeps)

    def theta_energy(theta, turns, kappa2, h):
        return _theta_energy_jit(theta, turns, kappa2, h, 2.0 * np.pi)

    def theta_gradient(theta, turns, kappa2, h):
        out = np.empty_like(theta)
        return _theta_gradient_jit(theta, turns, kappa2, h, 2.0 * np.pi, out)

    def descend_theta(theta, turns, kappa2, h, step0, grad_tol, energy_tol, max_iters):
        cap = theta_step_cap(kappa2, h)
        return _descend_theta_jit(
            theta, turns, kappa2, h, 2.0 * np.pi, cap, step0, grad_tol, energy_tol, max_iters
        )

else:

    def ring_parts(values, tau, nrm, kappa2, h):
        return ring_parts_np(values, tau, nrm, kappa2, h)

    def ring_gradient(values, tau, nrm, kappa2, h):
        return ring_gradient_np(values, tau, nrm, kappa2, h)

    def descend_ring(values, tau, nrm, kappa2, h, step0, grad_tol, energy_tol, max_iters, in_plane):
        return descend_ring_np(
            values, tau, nrm, kappa2, h, step0, grad_tol, energy_tol, max_iters, in_plane
        )

    def cylinder_parts(values, tau, nrm, kappa2, h, wz, hz):
        return cylinder_parts_np(values, tau, nrm, kappa2, h, wz, hz)

    def cylinder_gradient(values, tau, nrm, kappa2, h, wz, hz):
        return cylinder_gradient_np(values, tau, nrm, kappa2, h, wz, hz)

    def descend_cylinder(values, tau, nrm, kappa2, h, wz, hz, step0, grad_tol, energy_tol, max_iters, was):
        return descend_cylinder_np(
            values, tau, nrm, kappa2, h, wz, hz, step0, grad_tol, energy_tol, max_iters, was
        )

    def was_project(values, tol=1e-12, max_sweeps=60):
        return was_project_np(values, tol, max_sweeps)

    def theta_energy(theta, turns, kappa2, h):
        return theta_energy_np(theta, turns, kappa2, h, 2.0 * np.pi)

    def theta_gradient(theta, turns, kappa2, h):
        return theta_gradient_np(theta, turns, kappa2, h, 2.0 * np.pi)

    def descend_theta(theta, turns, kappa2, h, step0, grad_tol, energy_tol, max_iters):
        return descend_theta_np(
            theta, turns, kappa2, h, 2.0 * np.pi, step0, grad_tol, energy_tol, max_iters
        )
