"""Multi-photon states in product-term form and two-photon observables.

An N-photon state is stored as sum_T c_T |f_{T,1}> ... |f_{T,N}> with the
single-photon factors kept in a table keyed by id, so factors shared
between terms are evolved exactly once per step (each photon interacts
with its own virtual copy of the atom array, making the evolution operator
a direct product of single-photon operators).

All quadratic observables (norms, overlaps, joint detection probabilities,
bunching totals, reduced polarization matrices) are evaluated through the
Gram matrix of pairwise factor overlaps, turning O(M^2) position double
sums into O(T^2) combinations of single sums.  Joint detection follows the
symmetrized two-photon amplitude: with

    A_pq(r, r') = sum_T c_T f_{T1,p}(r) f_{T2,q}(r')

the probability of finding one photon at (r, p) and the other at (any, q) is

    P_pq(r) = (1/4) sum_{r'} |A_pq(r, r') + A_pq(r', r)|^2,

which counts every unordered detector pair once, so sum_{p,q,r} P_pq(r) = 1
for normalized symmetric states (up to the same-site bunching deficit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import GeometryError, SinglePhotonState, inner
from .evolution import TrotterStepper, trotter_step
from .scene import Scene

POLS = ("H", "V")


@dataclass
class ProductState:
    """Weighted sum of tensor products of single-photon factors."""

    factors: dict[str, SinglePhotonState]
    terms: list[tuple[complex, tuple[str, ...]]]
    time: float = 0.0

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a product state needs at least one term")
        n = len(self.terms[0][1])
        grids = {f.grid for f in self.factors.values()}
        n_atom_set = {f.n_atoms for f in self.factors.values()}
        if len(grids) > 1 or len(n_atom_set) > 1:
            raise GeometryError("all factors must share one grid and atom set")
        for _, ids in self.terms:
            if len(ids) != n:
                raise ValueError("all terms must have the same photon count")
            for i in ids:
                if i not in self.factors:
                    raise KeyError(f"term references unknown factor id {i!r}")

    @property
    def n_photons(self) -> int:
        return len(self.terms[0][1])

    def copy(self) -> "ProductState":
        return ProductState(
            {k: f.copy() for k, f in self.factors.items()},
            [(c, ids) for c, ids in self.terms],
            self.time,
        )

    def factor_gram(self, other: "ProductState" | None = None) -> dict[tuple[str, str], complex]:
        """Pairwise full overlaps <self_a|other_b> (field plus atom channels)."""
        other = other if other is not None else self
        return {
            (ka, kb): inner(fa, fb)
            for ka, fa in self.factors.items()
            for kb, fb in other.factors.items()
        }

    def overlap(self, other: "ProductState") -> complex:
        """<self|other> via the Gram expansion."""
        if self.n_photons != other.n_photons:
            raise GeometryError("photon counts differ")
        gram = self.factor_gram(other)
        total = 0.0 + 0.0j
        for ca, ids_a in self.terms:
            for cb, ids_b in other.terms:
                val = np.conj(ca) * cb
                for sa, sb in zip(ids_a, ids_b):
                    val *= gram[(sa, sb)]
                total += val
        return complex(total)

    def norm_sq(self) -> float:
        return float(self.overlap(self).real)

    def normalize(self) -> "ProductState":
        scale = 1.0 / np.sqrt(self.norm_sq())
        self.terms = [(c * scale, ids) for c, ids in self.terms]
        return self


def evolve_step(state: ProductState, stepper: TrotterStepper) -> ProductState:
    """One split step on every distinct factor; term coefficients unchanged."""
    for f in state.factors.values():
        trotter_step(f, stepper)
    state.time += stepper.dt
    return state


def _packet_factor(grid, params, theta_pol, n_atoms):
    from .field import gaussian_packet

    sigma, kbar, rbar = params
    return gaussian_packet(grid, sigma, kbar, rbar, theta_pol, n_atoms)


def hom_initial(grid, xi, eta, n_atoms: int = 0) -> ProductState:
    """Bosonic two-photon state (|xi>|eta> + |eta>|xi>)/sqrt(2), renormalized.

    `xi`/`eta` are (sigma, kbar, rbar) packet parameter triples.
    """
    f_xi = _packet_factor(grid, xi, 0.0, n_atoms)
    f_eta = _packet_factor(grid, eta, 0.0, n_atoms)
    amp = 1.0 / np.sqrt(2.0)
    state = ProductState(
        {"xi": f_xi, "eta": f_eta},
        [(amp, ("xi", "eta")), (amp, ("eta", "xi"))],
    )
    return state.normalize()


def bell_initial(c: float, grid, xi, eta, n_atoms: int = 0) -> ProductState:
    """Polarization-entangled pair (|HH> + c|VV>)/sqrt(1+c^2), symmetrized.

    c=1 is the maximally entangled state, c=0 the product state |H>|H>.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"entanglement weight c must lie in [0,1], got {c}")
    factors = {
        "H_xi": _packet_factor(grid, xi, 0.0, n_atoms),
        "H_eta": _packet_factor(grid, eta, 0.0, n_atoms),
    }
    terms = [(1.0 + 0.0j, ("H_xi", "H_eta")), (1.0 + 0.0j, ("H_eta", "H_xi"))]
    if c > 0.0:
        factors["V_xi"] = _packet_factor(grid, xi, np.pi / 2, n_atoms)
        factors["V_eta"] = _packet_factor(grid, eta, np.pi / 2, n_atoms)
        terms += [(c + 0.0j, ("V_xi", "V_eta")), (c + 0.0j, ("V_eta", "V_xi"))]
    return ProductState(factors, terms).normalize()


def _plane(f: SinglePhotonState, p: str) -> np.ndarray:
    return f.field.h if p == "H" else f.field.v


def _require_two_photon(state: ProductState) -> None:
    if state.n_photons != 2:
        raise ValueError("this observable is defined for two-photon states")


def bunching_density(state: ProductState) -> np.ndarray:
    """rho(r) = |sum_T c_T sum_p f_{T1,p}(r) f_{T2,p}(r)|^2."""
    _require_two_photon(state)
    first = next(iter(state.factors.values()))
    amp = np.zeros_like(first.field.h)
    for c, (a, b) in state.terms:
        fa, fb = state.factors[a], state.factors[b]
        amp += c * (fa.field.h * fb.field.h + fa.field.v * fb.field.v)
    return np.abs(amp) ** 2


def bunching_at_atoms(state: ProductState, scene: Scene) -> float:
    """Peak bunching density on atom sites (low-density assumption audit)."""
    if not scene.atoms:
        return 0.0
    _require_two_photon(state)
    ix = np.array([a.ix for a in scene.atoms])
    iy = np.array([a.iy for a in scene.atoms])
    amp = 0.0
    for c, (a, b) in state.terms:
        fa, fb = state.factors[a], state.factors[b]
        amp = amp + c * (
            fa.field.h[ix, iy] * fb.field.h[ix, iy]
            + fa.field.v[ix, iy] * fb.field.v[ix, iy]
        )
    return float(np.max(np.abs(amp) ** 2))


def coincidence_overlap(state: ProductState, reference: ProductState) -> float:
    """|<reference|state>| for two-photon states at equal times."""
    _require_two_photon(state)
    if abs(state.time - reference.time) > 1e-9:
        raise ValueError(
            f"states are at different times ({state.time} vs {reference.time})"
        )
    return float(abs(reference.overlap(state)))


def _positional_cross_gram(state: ProductState) -> dict[tuple[str, str, str, str], complex]:
    """M[(a,b,p,q)] = sum_r conj(f_{a,p}(r)) f_{b,q}(r), photon positions only."""
    out: dict[tuple[str, str, str, str], complex] = {}
    keys = list(state.factors)
    for a in keys:
        for b in keys:
            for p in POLS:
                for q in POLS:
                    out[(a, b, p, q)] = complex(
                        np.vdot(_plane(state.factors[a], p), _plane(state.factors[b], q))
                    )
    return out


def joint_polarization_probs(state: ProductState) -> dict[tuple[str, str], float]:
    """P_pq: one photon detected with polarization p, the partner with q.

    P_pq = sum_{r,r'} |Psi_pq(r,r')|^2 with the symmetrized two-photon
    amplitude Psi_pq(r,r') = sum_T c_T f_{T1,p}(r) f_{T2,q}(r').  Because the
    state is exchange-symmetric (all factories symmetrize), this tallies
    every unordered detection outcome exactly once and the four entries sum
    to one for normalized states with unexcited atoms.
    """
    _require_two_photon(state)
    gram = _positional_cross_gram(state)
    probs: dict[tuple[str, str], float] = {}
    for p in POLS:
        for q in POLS:
            acc = 0.0 + 0.0j
            for ct, (t1, t2) in state.terms:
                for cs, (s1, s2) in state.terms:
                    w = ct * np.conj(cs)
                    acc += w * gram[(s1, t1, p, p)] * gram[(s2, t2, q, q)]
            probs[(p, q)] = float(acc.real)
    return probs


def joint_polarization_density(state: ProductState) -> dict[tuple[str, str], np.ndarray]:
    """Per-position P_pq(r) = sum_{r'} |Psi_pq(r,r')|^2.

    The photon pinned at r carries polarization p, its partner is summed
    over all positions with polarization q; sums over r reproduce
    joint_polarization_probs.
    """
    _require_two_photon(state)
    gram = _positional_cross_gram(state)
    first = next(iter(state.factors.values()))
    shape = first.field.h.shape
    out: dict[tuple[str, str], np.ndarray] = {}
    for p in POLS:
        for q in POLS:
            acc = np.zeros(shape, complex)
            for ct, (t1, t2) in state.terms:
                for cs, (s1, s2) in state.terms:
                    w = ct * np.conj(cs)
                    f_t1 = _plane(state.factors[t1], p)
                    f_s1 = _plane(state.factors[s1], p)
                    acc += w * f_t1 * np.conj(f_s1) * gram[(s2, t2, q, q)]
            out[(p, q)] = acc.real
    return out


def reduced_polarization(state: ProductState, which_photon: int) -> np.ndarray:
    """Trace-normalized 2x2 polarization matrix of the kept photon slot."""
    _require_two_photon(state)
    if which_photon not in (0, 1):
        raise ValueError("which_photon must be 0 or 1")
    other = 1 - which_photon
    gram = state.factor_gram()
    rho = np.zeros((2, 2), complex)
    for ct, ids_t in state.terms:
        for cs, ids_s in state.terms:
            w = ct * np.conj(cs)
            env = gram[(ids_s[other], ids_t[other])]
            ft = state.factors[ids_t[which_photon]]
            fs = state.factors[ids_s[which_photon]]
            for i, p in enumerate(POLS):
                for j, q in enumerate(POLS):
                    kept = np.vdot(_plane(fs, q), _plane(ft, p))
                    if ft.n_atoms:
                        kept += np.vdot(fs.atom_amps[:, j], ft.atom_amps[:, i])
                    rho[i, j] += w * env * kept
    rho /= np.trace(rho).real
    return rho


def _correlation(probs: dict[tuple[str, str], float]) -> float:
    return (
        probs[("H", "H")] + probs[("V", "V")] - probs[("H", "V")] - probs[("V", "H")]
    )


def chsh_correlation(states) -> tuple[float, list[float], list[dict]]:
    """S and per-pair E values from four evolved analyzer-pair states.

    `states` are the two-photon states for the angle pairs
    (a,b), (a',b), (a',b'), (a,b') in that order.
    """
    states = list(states)
    if len(states) != 4:
        raise ValueError(f"CHSH needs four analyzer-pair states, got {len(states)}")
    all_probs = [joint_polarization_probs(s) for s in states]
    es = [_correlation(p) for p in all_probs]
    s_val = es[0] + es[1] + es[2] - es[3]
    return s_val, es, all_probs


def chsh_density(states) -> np.ndarray:
    """Correlation density S(r); summing over r gives chsh_correlation's S."""
    states = list(states)
    if len(states) != 4:
        raise ValueError(f"CHSH needs four analyzer-pair states, got {len(states)}")
    maps = []
    for s in states:
        dens = joint_polarization_density(s)
        maps.append(
            dens[("H", "H")] + dens[("V", "V")] - dens[("H", "V")] - dens[("V", "H")]
        )
    return maps[0] + maps[1] + maps[2] - maps[3]
