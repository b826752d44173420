"""qodsim: grid-based quantum optical dynamics at desk scale."""

from .field import (
    GeometryError,
    GridSpec,
    KLattice,
    PolarizedField,
    Region,
    SinglePhotonState,
    dft_forward,
    dft_inverse,
    gaussian_packet,
    inner,
    klattice,
    number_density,
    region_probability,
)
from .scene import (
    Atom,
    ObjectSpec,
    Scene,
    SceneError,
    SceneParseError,
    build_rotator,
    build_slab,
    parse_scene,
    scene_from_specs,
    serialize_scene,
)
from .evolution import (
    EnergyBreakdown,
    Rk4Stepper,
    TrotterStepper,
    apply_h,
    dense_hamiltonian,
    dense_oracle_evolve,
    energy,
    free_evolve,
    rk4_step,
    trotter_step,
)
from .qf01 import QF01Error, Snapshot, read_qf01, write_qf01

__version__ = "0.1.0"
