"""Phase-shifter calibration: layer count -> acquired phase.

A single photon crosses the shifter slab on a straight path; the phase is
read off the overlap with a freely propagated reference,
phi(n) = arg <psi_free(T) | psi_n(T)>, unwrapped over the layer sweep and
sign-fixed so the table increases.  The overlap modulus doubles as the
transmission check: a slab that reflects rather than phase-shifts is
rejected.
"""

from __future__ import annotations

import numpy as np

from .evolution import TrotterStepper, free_evolve
from .experiments import PS_CAL_TIME, ResultSeries
from .field import GridSpec, SinglePhotonState, gaussian_packet, inner
from .scene import ObjectSpec, scene_from_specs

PS_LINE = 120
PS_D = 0.56
PS_OMEGA = 1.0
MIN_TRANSMISSION = 0.9


class CalibrationError(RuntimeError):
    """Transmission too low: the slab is reflecting, not phase-shifting."""


def calibrate_phase_shifter(
    layer_range=range(0, 21),
    dt: float = 0.1,
    d: float = PS_D,
    omega: float = PS_OMEGA,
    n_line: int = PS_LINE,
) -> ResultSeries:
    """Transmission phase per layer count on the interferometer grid."""
    box = 10 * np.pi
    grid = GridSpec(256, 256, box, box)
    steps = round(PS_CAL_TIME / dt)
    t_final = steps * dt
    ref = gaussian_packet(grid, 2.0, (10.0, 0.0), (5.0, box / 2), 0.0)
    free_evolve(ref, t_final)

    layers = list(layer_range)
    raw_phases = []
    moduli = []
    for n in layers:
        specs = [ObjectSpec("phaseshifter", box / 2, box / 2, 0.0, n_line, n, d, omega)]
        scene = scene_from_specs(grid, specs if n > 0 else [])
        s = gaussian_packet(grid, 2.0, (10.0, 0.0), (5.0, box / 2), 0.0, n_atoms=scene.n_atoms)
        stepper = TrotterStepper(scene, dt)
        for _ in range(steps):
            stepper.step(s)
        bare = SinglePhotonState(s.field, np.zeros((0, 2), complex), s.time)
        ov = inner(ref, bare)
        if abs(ov) < MIN_TRANSMISSION:
            raise CalibrationError(
                f"transmission {abs(ov):.3f} < {MIN_TRANSMISSION} at {n} layers; "
                "object is reflecting, not phase-shifting"
            )
        raw_phases.append(np.angle(ov))
        moduli.append(abs(ov))

    phi = np.unwrap(np.array(raw_phases))
    if len(phi) > 1 and phi[-1] < phi[0]:
        phi = -phi
    rs = ResultSeries(["layers", "phi", "transmission"])
    for n, p, m in zip(layers, phi, moduli):
        rs.add_row(n, float(p), float(m))
    return rs
