import numpy as np
import pytest

from qodsim import GridSpec, PolarizedField, Scene, SinglePhotonState, TrotterStepper, gaussian_packet
from qodsim.field import GeometryError
from qodsim.multiphoton import (
    ProductState,
    bell_initial,
    bunching_at_atoms,
    bunching_density,
    chsh_correlation,
    chsh_density,
    coincidence_overlap,
    evolve_step,
    hom_initial,
    joint_polarization_density,
    joint_polarization_probs,
    reduced_polarization,
)
from qodsim.scene import Atom

TINY = GridSpec(16, 16, 4 * np.pi, 4 * np.pi)


def rand_factor(rng, grid=TINY, n_atoms=0):
    shape = (grid.mx, grid.my)
    f = PolarizedField(
        grid,
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
    )
    s = SinglePhotonState(
        f, rng.standard_normal((n_atoms, 2)) + 1j * rng.standard_normal((n_atoms, 2))
    )
    scale = 1 / np.sqrt(s.norm_sq())
    s.field.h *= scale
    s.field.v *= scale
    s.atom_amps *= scale
    return s


def symmetric_random_state(seed, n_atoms=0):
    rng = np.random.default_rng(seed)
    factors = {k: rand_factor(rng, n_atoms=n_atoms) for k in ("a", "b", "c")}
    base = [(0.8 + 0.3j, ("a", "b")), (0.4j, ("c", "c")), (0.2 - 0.5j, ("b", "c"))]
    terms = []
    for coef, (i, j) in base:
        terms.append((coef, (i, j)))
        if i != j:
            terms.append((coef, (j, i)))
    return ProductState(factors, terms).normalize()


def full_vector(f):
    return np.concatenate(
        [f.field.h.ravel(), f.field.v.ravel(), f.atom_amps[:, 0], f.atom_amps[:, 1]]
    )


def field_vector(f, p):
    return (f.field.h if p == "H" else f.field.v).ravel()


def brute_amplitude(state, p, q):
    """Explicit symmetrized two-photon position amplitude Psi_pq(r, r')."""
    return sum(
        c * np.outer(field_vector(state.factors[i], p), field_vector(state.factors[j], q))
        for c, (i, j) in state.terms
    )


class TestGramVsBruteForce:
    def test_norm(self):
        st = symmetric_random_state(0, n_atoms=2)
        psi = sum(
            c * np.kron(full_vector(st.factors[i]), full_vector(st.factors[j]))
            for c, (i, j) in st.terms
        )
        assert st.norm_sq() == pytest.approx(float(np.vdot(psi, psi).real), abs=1e-10)

    def test_overlap(self):
        a = symmetric_random_state(1, n_atoms=2)
        b = symmetric_random_state(2, n_atoms=2)
        psi_a = sum(
            c * np.kron(full_vector(a.factors[i]), full_vector(a.factors[j]))
            for c, (i, j) in a.terms
        )
        psi_b = sum(
            c * np.kron(full_vector(b.factors[i]), full_vector(b.factors[j]))
            for c, (i, j) in b.terms
        )
        assert a.overlap(b) == pytest.approx(complex(np.vdot(psi_a, psi_b)), abs=1e-10)

    def test_joint_polarization_probs(self):
        st = symmetric_random_state(3)
        probs = joint_polarization_probs(st)
        total = 0.0
        for p in "HV":
            for q in "HV":
                brute = float(np.sum(np.abs(brute_amplitude(st, p, q)) ** 2))
                assert probs[(p, q)] == pytest.approx(brute, abs=1e-10)
                total += brute
        assert sum(probs.values()) == pytest.approx(total, abs=1e-10)

    def test_closure_for_photon_sector_states(self):
        st = symmetric_random_state(4, n_atoms=0)
        assert sum(joint_polarization_probs(st).values()) == pytest.approx(1.0, abs=1e-10)

    def test_bunching_total(self):
        st = symmetric_random_state(5)
        rho = bunching_density(st)
        diag = np.diagonal(brute_amplitude(st, "H", "H")) + np.diagonal(
            brute_amplitude(st, "V", "V")
        )
        assert rho.sum() == pytest.approx(float(np.sum(np.abs(diag) ** 2)), abs=1e-10)

    def test_coincidence(self):
        a = symmetric_random_state(6)
        b = symmetric_random_state(7)
        psi_a = sum(
            c * np.kron(full_vector(a.factors[i]), full_vector(a.factors[j]))
            for c, (i, j) in a.terms
        )
        psi_b = sum(
            c * np.kron(full_vector(b.factors[i]), full_vector(b.factors[j]))
            for c, (i, j) in b.terms
        )
        assert coincidence_overlap(a, b) == pytest.approx(abs(np.vdot(psi_b, psi_a)), abs=1e-10)

    def test_density_sums_to_probs(self):
        st = symmetric_random_state(8)
        probs = joint_polarization_probs(st)
        dens = joint_polarization_density(st)
        for key in probs:
            assert dens[key].sum() == pytest.approx(probs[key], abs=1e-10)


class TestExchangeSymmetry:
    def test_slot_swap_invariance(self):
        st = symmetric_random_state(9)
        swapped = ProductState(
            {k: f.copy() for k, f in st.factors.items()},
            [(c, (j, i)) for c, (i, j) in st.terms],
            st.time,
        )
        assert st.norm_sq() == pytest.approx(swapped.norm_sq(), abs=1e-12)
        p1, p2 = joint_polarization_probs(st), joint_polarization_probs(swapped)
        for key in p1:
            assert p1[key] == pytest.approx(p2[key], abs=1e-12)
        assert np.abs(bunching_density(st) - bunching_density(swapped)).max() < 1e-12


class TestHomInitial:
    XI = (1.5, (2.0, 0.0), (3.0, 6.0))
    ETA = (1.5, (0.0, 2.0), (9.0, 6.0))

    def test_normalized(self):
        st = hom_initial(TINY, self.XI, self.ETA)
        assert st.norm_sq() == pytest.approx(1.0, abs=1e-9)

    def test_prenormalization_norm(self):
        from qodsim import inner

        f_xi = gaussian_packet(TINY, *self.XI)
        f_eta = gaussian_packet(TINY, *self.ETA)
        ov = inner(f_xi, f_eta)
        raw = ProductState(
            {"xi": f_xi, "eta": f_eta},
            [(1 / np.sqrt(2), ("xi", "eta")), (1 / np.sqrt(2), ("eta", "xi"))],
        )
        assert raw.norm_sq() == pytest.approx(1.0 + abs(ov) ** 2, abs=1e-12)

    def test_degenerate_packets(self):
        st = hom_initial(TINY, self.XI, self.XI)
        assert st.norm_sq() == pytest.approx(1.0, abs=1e-9)
        rho = bunching_density(st)
        f = st.factors["xi"]
        d = np.abs(f.field.h) ** 2 + np.abs(f.field.v) ** 2
        assert rho.sum() == pytest.approx(float(np.sum(d**2)), rel=1e-9)

    def test_exchange_of_arguments(self):
        a = hom_initial(TINY, self.XI, self.ETA)
        b = hom_initial(TINY, self.ETA, self.XI)
        assert abs(a.overlap(b)) == pytest.approx(1.0, abs=1e-9)


class TestBellInitial:
    XI = (1.5, (2.0, 0.0), (3.0, 6.0))
    ETA = (1.5, (-2.0, 0.0), (9.0, 6.0))

    def test_c_range_validated(self):
        with pytest.raises(ValueError):
            bell_initial(1.2, TINY, self.XI, self.ETA)
        with pytest.raises(ValueError):
            bell_initial(-0.1, TINY, self.XI, self.ETA)

    def test_reduced_maximally_entangled(self):
        st = bell_initial(1.0, TINY, self.XI, self.ETA)
        for which in (0, 1):
            rho = reduced_polarization(st, which)
            assert np.abs(rho - np.eye(2) / 2).max() < 1e-9

    def test_reduced_product_state(self):
        st = bell_initial(0.0, TINY, self.XI, self.ETA)
        rho = reduced_polarization(st, 0)
        assert np.abs(rho - np.diag([1.0, 0.0])).max() < 1e-9

    def test_reduced_intermediate(self):
        st = bell_initial(0.5, TINY, self.XI, self.ETA)
        rho = reduced_polarization(st, 0)
        assert np.abs(rho - np.diag([1.0, 0.25]) / 1.25).max() < 1e-9

    def test_reduced_hermitian_psd_trace_one(self):
        st = bell_initial(0.7, TINY, self.XI, self.ETA)
        rho = reduced_polarization(st, 1)
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_c_zero_drops_vertical_factors(self):
        st = bell_initial(0.0, TINY, self.XI, self.ETA)
        assert set(st.factors) == {"H_xi", "H_eta"}


class TestBunching:
    def test_disjoint_packets_no_bunching(self):
        g = GridSpec(128, 128, 16 * np.pi, 16 * np.pi)
        xi = (2.0, (2.0, 0.0), (13.0, 25.0))
        eta = (2.0, (0.0, 2.0), (38.0, 25.0))
        st = hom_initial(g, xi, eta)
        assert bunching_density(st).max() < 1e-12

    def test_two_photon_required(self):
        rng = np.random.default_rng(10)
        f = {k: rand_factor(rng) for k in "abc"}
        st = ProductState(f, [(1.0, ("a", "b", "c"))]).normalize()
        with pytest.raises(ValueError):
            bunching_density(st)


class TestEvolveStep:
    def test_separated_factors_evolve_independently(self):
        g = GridSpec(64, 64, 8 * np.pi, 8 * np.pi)
        scene = Scene(g, (Atom(32, 32, 2.0, 0.5, 0.5),))
        xi = (1.5, (3.0, 0.0), (6.0, 12.0)); eta = (1.5, (0.0, 3.0), (20.0, 6.0))
        st = hom_initial(g, xi, eta, n_atoms=1)
        solo = {k: f.copy() for k, f in st.factors.items()}
        stepper = TrotterStepper(scene, 0.1)
        for _ in range(30):
            evolve_step(st, stepper)
        for f in solo.values():
            for _ in range(30):
                stepper.step(f)
        for k in solo:
            assert np.abs(st.factors[k].field.h - solo[k].field.h).max() < 1e-13

    def test_factor_economy(self, monkeypatch):
        import qodsim.multiphoton as mp

        g = GridSpec(16, 16, 4 * np.pi, 4 * np.pi)
        scene = Scene(g, ())
        st = bell_initial(1.0, g, (1.5, (2.0, 0), (3.0, 6.0)), (1.5, (0, 2.0), (9.0, 6.0)))
        calls = []
        monkeypatch.setattr(mp, "trotter_step", lambda f, s: calls.append(1))
        evolve_step(st, TrotterStepper(scene, 0.1))
        assert len(calls) == len(st.factors) == 4

    def test_norm_preserved(self):
        g = GridSpec(32, 32, 4 * np.pi, 4 * np.pi)
        scene = Scene(g, (Atom(16, 16, 2.0, 0.5, 0.7), Atom(20, 12, 1.5, 0.3, 0.4)))
        st = bell_initial(
            0.8, g, (1.5, (2.0, 0.0), (3.0, 6.0)), (1.5, (-2.0, 0.0), (9.0, 6.0)), n_atoms=2
        )
        stepper = TrotterStepper(scene, 0.1)
        for _ in range(50):
            evolve_step(st, stepper)
        assert st.norm_sq() == pytest.approx(1.0, abs=1e-10)

    def test_coefficient_scaling_commutes(self):
        g = GridSpec(16, 16, 4 * np.pi, 4 * np.pi)
        scene = Scene(g, (Atom(8, 8, 2.0, 0.5, 0.5),))
        st = hom_initial(g, (1.5, (2.0, 0), (3.0, 6.0)), (1.5, (0, 2.0), (9.0, 6.0)), n_atoms=1)
        scaled = st.copy()
        scaled.terms = [(2.0 * c, ids) for c, ids in scaled.terms]
        stepper = TrotterStepper(scene, 0.1)
        evolve_step(st, stepper)
        evolve_step(scaled, stepper)
        assert scaled.overlap(st) == pytest.approx(0.5 * scaled.norm_sq(), abs=1e-12)


class TestCoincidence:
    def test_identical_states(self):
        st = symmetric_random_state(11)
        assert coincidence_overlap(st, st) == pytest.approx(1.0, abs=1e-12)

    def test_time_mismatch_rejected(self):
        a = symmetric_random_state(12)
        b = symmetric_random_state(13)
        b.time = 1.0
        with pytest.raises(ValueError):
            coincidence_overlap(a, b)


def ideal_analyzer_state(c, theta_a, theta_b, grid=None):
    """Post-analyzer Jones-model state: disjoint packets, plate reflections applied."""
    g = grid or GridSpec(32, 32, 8 * np.pi, 8 * np.pi)
    pk_l = gaussian_packet(g, 2.0, (1.0, 0.0), (6.0, 12.5), 0.0)
    pk_r = gaussian_packet(g, 2.0, (1.0, 0.0), (19.0, 12.5), 0.0)

    def jones(base, alpha, beta):
        f = PolarizedField(g, alpha * base.field.h.copy(), beta * base.field.h.copy())
        return SinglePhotonState(f, np.zeros((0, 2), complex))

    fac = {
        "H_xi": jones(pk_l, np.cos(theta_a), np.sin(theta_a)),
        "V_xi": jones(pk_l, np.sin(theta_a), -np.cos(theta_a)),
        "H_eta": jones(pk_r, np.cos(theta_b), np.sin(theta_b)),
        "V_eta": jones(pk_r, np.sin(theta_b), -np.cos(theta_b)),
    }
    terms = [
        (1.0, ("H_xi", "H_eta")), (c, ("V_xi", "V_eta")),
        (1.0, ("H_eta", "H_xi")), (c, ("V_eta", "V_xi")),
    ]
    return ProductState(fac, terms).normalize()


class TestChsh:
    def pair_states(self, c, theta):
        angles = [(0, theta), (2 * theta, theta), (2 * theta, 3 * theta), (0, 3 * theta)]
        return [ideal_analyzer_state(c, a, b) for a, b in angles]

    def test_tsirelson_point(self):
        s, es, probs = chsh_correlation(self.pair_states(1.0, np.pi / 8))
        assert s == pytest.approx(2 * np.sqrt(2), abs=1e-6)
        for p in probs:
            assert sum(p.values()) == pytest.approx(1.0, abs=1e-6)

    def test_theory_curve(self):
        for theta in (0.0, np.pi / 16, np.pi / 4, 3 * np.pi / 8):
            s, _, _ = chsh_correlation(self.pair_states(1.0, theta))
            assert s == pytest.approx(3 * np.cos(2 * theta) - np.cos(6 * theta), abs=1e-6)

    def test_product_state_no_violation(self):
        for theta in np.linspace(0, np.pi / 2, 9):
            s, _, _ = chsh_correlation(self.pair_states(0.0, theta))
            assert abs(s) <= 2.0 + 1e-6

    def test_needs_four_states(self):
        with pytest.raises(ValueError):
            chsh_correlation(self.pair_states(1.0, np.pi / 8)[:3])

    def test_density_sums_to_s(self):
        states = self.pair_states(0.6, np.pi / 8)
        smap = chsh_density(states)
        s, _, _ = chsh_correlation(states)
        assert smap.sum() == pytest.approx(s, abs=1e-9)  # definitional identity

    def test_density_shape_invariant_for_entangled_state(self):
        # maximally entangled: the spatial pattern changes only by a scalar
        maps = []
        for theta in (np.pi / 16, np.pi / 8, np.pi / 4 + 0.05):
            m = chsh_density(self.pair_states(1.0, theta)).ravel()
            maps.append(m / np.linalg.norm(m))
        assert abs(np.dot(maps[0], maps[1])) > 0.99
        assert abs(np.dot(maps[0], maps[2])) > 0.99


class TestGeometryChecks:
    def test_mixed_grids_rejected(self):
        rng = np.random.default_rng(14)
        f1 = rand_factor(rng, TINY)
        f2 = rand_factor(rng, GridSpec(32, 32, 4.0, 4.0))
        with pytest.raises(GeometryError):
            ProductState({"a": f1, "b": f2}, [(1.0, ("a", "b"))])

    def test_unknown_factor_id(self):
        rng = np.random.default_rng(15)
        with pytest.raises(KeyError):
            ProductState({"a": rand_factor(rng)}, [(1.0, ("a", "zz"))])

    def test_bunching_at_atoms_diagnostic(self):
        g = GridSpec(16, 16, 4 * np.pi, 4 * np.pi)
        scene = Scene(g, (Atom(8, 8, 2.0, 0.5, 0.5),))
        xi = (1.5, (2.0, 0.0), (np.pi, np.pi))
        st = hom_initial(g, xi, xi, n_atoms=1)
        rho = bunching_density(st)
        assert bunching_at_atoms(st, scene) == pytest.approx(rho[8, 8], abs=1e-15)
