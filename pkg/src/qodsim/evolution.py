"""Time evolution of single-photon states.

The Hamiltonian splits into a free part (diagonal in k space: omega_k per
photon mode, 2*omega_j per atom channel) and a local exchange part that
couples the photon amplitude at each atom's site to that atom's excitation
with strength

    W_{j,p} = -i * D_{j,p} * sqrt(N * omega_j) / (sqrt(2) * L),

purely imaginary, so each atom's 2x2 exchange exponential is a real
rotation by w*tau on (c_p(r_j), c_{j,p}).  One split step applies a half
interaction step, a full spectral free step, and a second half interaction
step; every factor is exactly unitary, so the norm is conserved to
roundoff at any time step.  Waveplate-type atoms couple only after
rotating the (H,V) pair at their site into the (fast, slow) axes.

The fourth-order Runge-Kutta baseline integrates the interaction-picture
amplitudes (photon modes dressed by exp(+i omega_k t), atoms by
exp(+2i omega_j t)) and is not norm-preserving.  A dense Hermitian
matrix-exponential oracle is provided for small grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .field import (
    POSITION,
    GeometryError,
    GridSpec,
    PolarizedField,
    SinglePhotonState,
    dft_forward,
    dft_inverse,
    klattice,
)
from .scene import Scene

DENSE_ORACLE_CAP = 4096


def coupling_strength(d: float, omega_j: float, grid: GridSpec) -> float:
    """|W_{j,p}| for coupling strength d at atom frequency omega_j."""
    return d * np.sqrt(grid.n_modes * omega_j) / (np.sqrt(2.0) * grid.l_geo)


class _AtomTables:
    """Scene atoms regrouped into vectorized fixed-coupling and waveplate sets."""

    def __init__(self, scene: Scene):
        grid = scene.grid
        fixed = [(i, a) for i, a in enumerate(scene.atoms) if a.axis is None]
        wps = [(i, a) for i, a in enumerate(scene.atoms) if a.axis is not None]
        self.n_atoms = scene.n_atoms
        self.omega = np.array([a.omega for a in scene.atoms])

        self.f_rows = np.array([i for i, _ in fixed], dtype=int)
        self.f_ix = np.array([a.ix for _, a in fixed], dtype=int)
        self.f_iy = np.array([a.iy for _, a in fixed], dtype=int)
        self.f_wh = np.array([coupling_strength(a.d_h, a.omega, grid) for _, a in fixed])
        self.f_wv = np.array([coupling_strength(a.d_v, a.omega, grid) for _, a in fixed])

        self.w_rows = np.array([i for i, _ in wps], dtype=int)
        self.w_ix = np.array([a.ix for _, a in wps], dtype=int)
        self.w_iy = np.array([a.iy for _, a in wps], dtype=int)
        self.w_ws = np.array([coupling_strength(a.d_s, a.omega, grid) for _, a in wps])
        self.w_ca = np.array([np.cos(a.axis) for _, a in wps])
        self.w_sa = np.array([np.sin(a.axis) for _, a in wps])

    @property
    def has_waveplates(self) -> bool:
        return self.w_rows.size > 0


def _check_state(scene: Scene, state: SinglePhotonState) -> None:
    if state.field.rep != POSITION:
        raise ValueError("evolution expects position-representation states")
    if state.grid != scene.grid:
        raise GeometryError("state grid does not match the scene")
    if state.n_atoms != scene.n_atoms:
        raise GeometryError(
            f"state carries {state.n_atoms} atom amplitudes, scene has {scene.n_atoms}"
        )


class TrotterStepper:
    """Precomputed split-step operator exp(-i h dt) for one scene."""

    def __init__(self, scene: Scene, dt: float):
        self.scene = scene
        self.dt = dt
        self.tables = t = _AtomTables(scene)
        lat = klattice(scene.grid)
        self.free_phase = np.exp(-1j * lat.omega * dt)
        self.atom_phase = np.exp(-2j * t.omega * dt)
        half = 0.5 * dt
        self._f_ch, self._f_sh = np.cos(t.f_wh * half), np.sin(t.f_wh * half)
        self._f_cv, self._f_sv = np.cos(t.f_wv * half), np.sin(t.f_wv * half)
        self._w_cs, self._w_ss = np.cos(t.w_ws * half), np.sin(t.w_ws * half)

    def _half_interaction(self, h: np.ndarray, v: np.ndarray, amps: np.ndarray) -> None:
        t = self.tables
        if t.f_rows.size:
            fh = h[t.f_ix, t.f_iy]
            ah = amps[t.f_rows, 0]
            h[t.f_ix, t.f_iy] = self._f_ch * fh + self._f_sh * ah
            amps[t.f_rows, 0] = -self._f_sh * fh + self._f_ch * ah
            fv = v[t.f_ix, t.f_iy]
            av = amps[t.f_rows, 1]
            v[t.f_ix, t.f_iy] = self._f_cv * fv + self._f_sv * av
            amps[t.f_rows, 1] = -self._f_sv * fv + self._f_cv * av
        if t.w_rows.size:
            ca, sa = t.w_ca, t.w_sa
            fh, fv = h[t.w_ix, t.w_iy], v[t.w_ix, t.w_iy]
            ah, av = amps[t.w_rows, 0], amps[t.w_rows, 1]
            ff, fs = ca * fh + sa * fv, -sa * fh + ca * fv
            af, as_ = ca * ah + sa * av, -sa * ah + ca * av
            fs, as_ = self._w_cs * fs + self._w_ss * as_, -self._w_ss * fs + self._w_cs * as_
            h[t.w_ix, t.w_iy] = ca * ff - sa * fs
            v[t.w_ix, t.w_iy] = sa * ff + ca * fs
            amps[t.w_rows, 0] = ca * af - sa * as_
            amps[t.w_rows, 1] = sa * af + ca * as_

    def step(self, state: SinglePhotonState) -> SinglePhotonState:
        _check_state(self.scene, state)
        h, v, amps = state.field.h, state.field.v, state.atom_amps
        self._half_interaction(h, v, amps)
        for name, plane in (("h", h), ("v", v)):
            if plane.any():
                ck = sfft.fft2(plane, norm="ortho")
                ck *= self.free_phase
                setattr(state.field, name, sfft.ifft2(ck, norm="ortho"))
        if amps.size:
            amps *= self.atom_phase[:, None]
        self._half_interaction(state.field.h, state.field.v, amps)
        state.time += self.dt
        return state


def trotter_step(state: SinglePhotonState, stepper: TrotterStepper) -> SinglePhotonState:
    """Advance the state by one split step (in place)."""
    return stepper.step(state)


def _coupling_apply(
    tables: _AtomTables,
    h: np.ndarray,
    v: np.ndarray,
    amps: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(h_I applied to the state): returns (dh, dv, damps), dh/dv nonzero at atom sites only."""
    t = tables
    dh = np.zeros_like(h)
    dv = np.zeros_like(v)
    da = np.zeros_like(amps)
    if t.f_rows.size:
        # W = -i w, so the field picks up conj(W) a = +i w a and the atom W f = -i w f
        dh[t.f_ix, t.f_iy] += 1j * t.f_wh * amps[t.f_rows, 0]
        da[t.f_rows, 0] += -1j * t.f_wh * h[t.f_ix, t.f_iy]
        dv[t.f_ix, t.f_iy] += 1j * t.f_wv * amps[t.f_rows, 1]
        da[t.f_rows, 1] += -1j * t.f_wv * v[t.f_ix, t.f_iy]
    if t.w_rows.size:
        ca, sa = t.w_ca, t.w_sa
        fs = -sa * h[t.w_ix, t.w_iy] + ca * v[t.w_ix, t.w_iy]
        as_ = -sa * amps[t.w_rows, 0] + ca * amps[t.w_rows, 1]
        dfs = 1j * t.w_ws * as_
        das = -1j * t.w_ws * fs
        dh[t.w_ix, t.w_iy] += -sa * dfs
        dv[t.w_ix, t.w_iy] += ca * dfs
        da[t.w_rows, 0] += -sa * das
        da[t.w_rows, 1] += ca * das
    return dh, dv, da


def apply_h(state: SinglePhotonState, scene: Scene) -> SinglePhotonState:
    """h|phi>: spectral free part plus the local exchange part (linear, not unitary)."""
    _check_state(scene, state)
    lat = klattice(scene.grid)
    tables = _AtomTables(scene)
    out_planes = []
    for plane in state.field.planes():
        ck = sfft.fft2(plane, norm="ortho")
        out_planes.append(sfft.ifft2(lat.omega * ck, norm="ortho"))
    damps = 2.0 * tables.omega[:, None] * state.atom_amps
    dh, dv, da = _coupling_apply(tables, state.field.h, state.field.v, state.atom_amps)
    field = PolarizedField(scene.grid, out_planes[0] + dh, out_planes[1] + dv, POSITION)
    return SinglePhotonState(field, damps + da, state.time)


@dataclass
class EnergyBreakdown:
    photon: float
    atoms: float
    interaction: float

    @property
    def total(self) -> float:
        return self.photon + self.atoms + self.interaction


def energy(state: SinglePhotonState, scene: Scene) -> EnergyBreakdown:
    """<phi|h|phi> split into photon, atom and interaction contributions."""
    _check_state(scene, state)
    lat = klattice(scene.grid)
    t = _AtomTables(scene)
    photon = 0.0
    for plane in state.field.planes():
        if plane.any():
            ck = sfft.fft2(plane, norm="ortho")
            photon += float(np.sum(lat.omega * np.abs(ck) ** 2))
    atoms = float(np.sum(2.0 * t.omega[:, None] * np.abs(state.atom_amps) ** 2))
    inter = 0.0
    h, v, amps = state.field.h, state.field.v, state.atom_amps
    if t.f_rows.size:
        wh = -1j * t.f_wh
        wv = -1j * t.f_wv
        inter += 2.0 * float(
            np.sum(
                (wh * h[t.f_ix, t.f_iy] * np.conj(amps[t.f_rows, 0])).real
                + (wv * v[t.f_ix, t.f_iy] * np.conj(amps[t.f_rows, 1])).real
            )
        )
    if t.w_rows.size:
        ca, sa = t.w_ca, t.w_sa
        fs = -sa * h[t.w_ix, t.w_iy] + ca * v[t.w_ix, t.w_iy]
        as_ = -sa * amps[t.w_rows, 0] + ca * amps[t.w_rows, 1]
        inter += 2.0 * float(np.sum((-1j * t.w_ws * fs * np.conj(as_)).real))
    return EnergyBreakdown(photon, atoms, inter)


class Rk4Stepper:
    """Interaction-picture classical RK4 baseline (not norm-preserving).

    The picture is re-anchored at every step start, which is unitarily
    equivalent to a global anchor but lets all dressing phase tables be
    precomputed once.
    """

    def __init__(self, scene: Scene, dt: float):
        self.scene = scene
        self.dt = dt
        self.tables = t = _AtomTables(scene)
        lat = klattice(scene.grid)
        self._undress_half = np.exp(-1j * lat.omega * dt / 2)  # k-space, s = dt/2
        self._undress_full = np.exp(-1j * lat.omega * dt)
        self._a_undress_half = np.exp(-2j * t.omega * dt / 2)
        self._a_undress_full = np.exp(-2j * t.omega * dt)

    def _rhs(self, yk: list[np.ndarray], ya: np.ndarray, stage: int, active: tuple[bool, bool]):
        """-i h_I(s) applied to interaction-picture amplitudes; stage 0/1/2 <-> s = 0, dt/2, dt."""
        und = (None, self._undress_half, self._undress_full)[stage]
        a_und = (None, self._a_undress_half, self._a_undress_full)[stage]
        planes = []
        for plane_k, act in zip(yk, active):
            if not act:
                planes.append(np.zeros_like(plane_k))
                continue
            ck = plane_k if und is None else und * plane_k
            planes.append(sfft.ifft2(ck, norm="ortho"))
        ca = ya if a_und is None else a_und[:, None] * ya
        dh, dv, da = _coupling_apply(self.tables, planes[0], planes[1], ca)
        out_k = []
        for dplane, act in ((dh, active[0]), (dv, active[1])):
            if not act:
                out_k.append(np.zeros_like(dplane))
                continue
            gk = sfft.fft2(-1j * dplane, norm="ortho")
            out_k.append(gk if und is None else np.conj(und) * gk)
        da = -1j * da
        if a_und is not None:
            da = np.conj(a_und)[:, None] * da
        return out_k, da

    def step(self, state: SinglePhotonState) -> SinglePhotonState:
        _check_state(self.scene, state)
        dt = self.dt
        wp = self.tables.has_waveplates
        amps = state.atom_amps
        active = (
            bool(state.field.h.any()) or bool(amps[:, 0].any() if amps.size else False) or wp,
            bool(state.field.v.any()) or bool(amps[:, 1].any() if amps.size else False) or wp,
        )
        yk = [
            sfft.fft2(p, norm="ortho") if act else np.zeros_like(p)
            for p, act in zip(state.field.planes(), active)
        ]
        ya = state.atom_amps.astype(complex)
        k1, a1 = self._rhs(yk, ya, 0, active)
        k2, a2 = self._rhs(
            [yk[i] + 0.5 * dt * k1[i] for i in range(2)], ya + 0.5 * dt * a1, 1, active
        )
        k3, a3 = self._rhs(
            [yk[i] + 0.5 * dt * k2[i] for i in range(2)], ya + 0.5 * dt * a2, 1, active
        )
        k4, a4 = self._rhs([yk[i] + dt * k3[i] for i in range(2)], ya + dt * a3, 2, active)
        for i in range(2):
            yk[i] = yk[i] + (dt / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        ya = ya + (dt / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        for name, i in (("h", 0), ("v", 1)):
            if active[i]:
                setattr(state.field, name, sfft.ifft2(self._undress_full * yk[i], norm="ortho"))
        state.atom_amps = self._a_undress_full[:, None] * ya
        state.time += dt
        return state


def rk4_step(state: SinglePhotonState, stepper: Rk4Stepper) -> SinglePhotonState:
    """Advance the state by one interaction-picture RK4 step (in place)."""
    return stepper.step(state)


def free_evolve(state: SinglePhotonState, t: float, scene: Scene | None = None) -> SinglePhotonState:
    """Exact free propagation exp(-i h_0 t) (valid evolution for atom-free scenes)."""
    if state.n_atoms and scene is None:
        raise GeometryError("free_evolve needs the scene when atom amplitudes are present")
    lat = klattice(state.grid)
    phase = np.exp(-1j * lat.omega * t)
    for name, plane in (("h", state.field.h), ("v", state.field.v)):
        if plane.any():
            ck = sfft.fft2(plane, norm="ortho")
            setattr(state.field, name, sfft.ifft2(phase * ck, norm="ortho"))
    if state.n_atoms:
        omega = np.array([a.omega for a in scene.atoms])
        state.atom_amps *= np.exp(-2j * omega * t)[:, None]
    state.time += t
    return state


def dense_hamiltonian(scene: Scene) -> np.ndarray:
    """Full single-excitation Hamiltonian over {|1_{k,p}>} + {|1_{j,p}>}.

    Basis layout: photon H modes (N, FFT order), photon V modes (N),
    atom H channels (N_A), atom V channels (N_A).
    """
    grid = scene.grid
    n = grid.n_modes
    na = scene.n_atoms
    if n + 2 * na > DENSE_ORACLE_CAP:
        raise ValueError(
            f"dense oracle limited to N + 2*N_A <= {DENSE_ORACLE_CAP}, got {n + 2 * na}"
        )
    lat = klattice(grid)
    dim = 2 * n + 2 * na
    ham = np.zeros((dim, dim), complex)
    omega_flat = lat.omega.reshape(-1)
    ham[np.arange(n), np.arange(n)] = omega_flat
    ham[n + np.arange(n), n + np.arange(n)] = omega_flat
    kx = lat.kx[:, None] + np.zeros((1, grid.my))
    ky = lat.ky[None, :] + np.zeros((grid.mx, 1))
    kx, ky = kx.reshape(-1), ky.reshape(-1)
    for j, a in enumerate(scene.atoms):
        rx, ry = a.ix * grid.dx, a.iy * grid.dy
        row_h = 2 * n + j
        row_v = 2 * n + na + j
        ham[row_h, row_h] = 2.0 * a.omega
        ham[row_v, row_v] = 2.0 * a.omega
        plane_wave = np.exp(1j * (kx * rx + ky * ry))
        pref = -1j * np.sqrt(a.omega) / (np.sqrt(2.0) * grid.l_geo)
        if a.axis is None:
            ham[row_h, :n] = pref * a.d_h * plane_wave
            ham[row_v, n : 2 * n] = pref * a.d_v * plane_wave
        else:
            u = (-np.sin(a.axis), np.cos(a.axis))
            g_s = pref * a.d_s * plane_wave
            for pr, urow in ((row_h, u[0]), (row_v, u[1])):
                ham[pr, :n] += urow * u[0] * g_s
                ham[pr, n : 2 * n] += urow * u[1] * g_s
    diag = np.real(np.diag(ham)).copy()
    ham = ham + ham.conj().T
    ham[np.arange(dim), np.arange(dim)] = diag
    return ham


def _state_to_vector(state: SinglePhotonState) -> np.ndarray:
    ck = dft_forward(state.field)
    parts = [ck.h.reshape(-1), ck.v.reshape(-1)]
    if state.n_atoms:
        parts += [state.atom_amps[:, 0], state.atom_amps[:, 1]]
    return np.concatenate(parts)


def _vector_to_state(vec: np.ndarray, grid: GridSpec, na: int, time: float) -> SinglePhotonState:
    n = grid.n_modes
    ck = PolarizedField(
        grid,
        vec[:n].reshape(grid.mx, grid.my).copy(),
        vec[n : 2 * n].reshape(grid.mx, grid.my).copy(),
        rep="wavevector",
    )
    amps = np.zeros((na, 2), complex)
    if na:
        amps[:, 0] = vec[2 * n : 2 * n + na]
        amps[:, 1] = vec[2 * n + na :]
    return SinglePhotonState(dft_inverse(ck), amps, time)


def dense_oracle_evolve(scene: Scene, initial: SinglePhotonState, t: float) -> SinglePhotonState:
    """Evolve by exact Hermitian eigendecomposition of the dense Hamiltonian."""
    _check_state(scene, initial)
    ham = dense_hamiltonian(scene)
    evals, evecs = np.linalg.eigh(ham)
    vec = _state_to_vector(initial)
    out = evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ vec))
    return _vector_to_state(out, scene.grid, scene.n_atoms, initial.time + t)
