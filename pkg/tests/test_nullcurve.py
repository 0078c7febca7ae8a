"""Null-curve assembly: the algebraic identities and frozen origin values.

The component formulas force phi . phi = 0 and fix |phi|^2 for every
input, solution or not, so those two hold at rounding level on random
pairs too.  The origin values below were worked out by hand from the
quotient and the component formulas.
"""

import numpy as np
import pytest

from translator_forge.catalog import catalog, grim_gauss
from translator_forge.gaussmap import (EXTENDED_PLANE, STRICT_DISC,
                                       compatibility_F, make_pair, r3_lift)
from translator_forge.grid import field_from_function, grid_from_spacing
from translator_forge.nullcurve import (R3_SLOTS, build_null_curve,
                                        integrability_residual,
                                        norm_identity_defect, nullity_defect,
                                        phi_scale)


def grim_ncf(h=0.05, half=1.0):
    g = grid_from_spacing(-half, half, -half, half, h)
    pair = r3_lift(field_from_function(g, grim_gauss), mode=STRICT_DISC)
    F, _ = compatibility_F(pair)
    return build_null_curve(pair, F, reduce_to_r3=True)


def lagrangian_ncf(h=0.05):
    spec = catalog("lagrangian_castro_lerma")
    g = grid_from_spacing(*spec.default_domain, h)
    pair = spec.pair_generator(g)
    F, _ = compatibility_F(pair)
    return build_null_curve(pair, F)


def random_pair(grid, rng):
    # bounded well inside the branch-free region: |g1 conj g2| <= 0.25
    def smooth(seed_row):
        a, b, c, d, e = seed_row
        return (0.5 * a * np.tanh(b * grid.uu + c * grid.vv)
                * np.exp(1j * (d * grid.uu + e * grid.vv)))

    coef = rng.uniform(-1.0, 1.0, size=(2, 5))
    return make_pair(grid, smooth(coef[0]), smooth(coef[1]),
                     mode=EXTENDED_PLANE)


class TestFrozenOrigin:
    def test_grim_f_and_phi(self):
        ncf = grim_ncf()
        i0 = ncf.grid.nearest_node(0.0, 0.0)
        assert ncf.f.values[i0] == pytest.approx(-1.0 + 0j, abs=2e-3)
        want = (-1.0, -1.0j, 0.0, 0.0)
        for k in range(4):
            assert ncf.phi[k].values[i0] == pytest.approx(want[k], abs=2e-3)

    def test_lagrangian_F_f_phi(self):
        ncf = lagrangian_ncf()
        i0 = ncf.grid.nearest_node(0.0, 0.0)
        assert ncf.F.values[i0] == pytest.approx(-0.125, abs=2e-3)
        assert ncf.f.values[i0] == pytest.approx(0.25j, abs=2e-3)
        want = (0.0, -0.5, 0.5j, 0.0)
        for k in range(4):
            assert ncf.phi[k].values[i0] == pytest.approx(want[k], abs=4e-3)

    def test_f_is_minus_2i_conj_F(self):
        ncf = lagrangian_ncf(h=0.1)
        want = -2j * np.conj(ncf.F.values)
        diff = np.abs(ncf.f.values - want)
        assert diff[ncf.grid.mask].max() < 1e-15


class TestAlgebraicIdentities:
    def test_nullity_catalog(self):
        for ncf in (grim_ncf(h=0.1), lagrangian_ncf(h=0.1)):
            rel = nullity_defect(ncf).values[ncf.grid.mask].max() \
                / phi_scale(ncf)
            assert rel < 1e-14

    def test_norm_identity_catalog(self):
        for ncf in (grim_ncf(h=0.1), lagrangian_ncf(h=0.1)):
            rel = norm_identity_defect(ncf).values[ncf.grid.mask].max() \
                / phi_scale(ncf)
            assert rel < 1e-14

    def test_identities_hold_for_arbitrary_pairs(self, rng):
        # not solutions of anything, identities hold by construction
        grid = grid_from_spacing(-1, 1, -1, 1, 0.1)
        for _ in range(5):
            pair = random_pair(grid, rng)
            F, _ = compatibility_F(pair)
            ncf = build_null_curve(pair, F)
            s = phi_scale(ncf)
            assert nullity_defect(ncf).values[ncf.grid.mask].max() / s < 1e-13
            assert norm_identity_defect(ncf).values[ncf.grid.mask].max() \
                / s < 1e-13


class TestReduction:
    def test_r3_slots_and_dim(self):
        ncf = grim_ncf(h=0.1)
        assert ncf.dim == 3
        assert ncf.surface_slots == R3_SLOTS
        slot2 = np.abs(ncf.phi[2].values[ncf.grid.mask]).max()
        assert slot2 < 1e-13

    def test_r4_keeps_all_slots(self):
        ncf = lagrangian_ncf(h=0.1)
        assert ncf.dim == 4
        assert ncf.surface_slots == (0, 1, 2, 3)

    def test_reduction_refused_for_asymmetric_pair(self):
        # needs dzbar(g1) != 0 so f, and with it slot 2, is actually nonzero
        g = grid_from_spacing(-1, 1, -1, 1, 0.1)
        pair = make_pair(g, 0.3 * np.conj(g.z), 0.1 * np.ones_like(g.z),
                         mode=EXTENDED_PLANE)
        F, _ = compatibility_F(pair)
        with pytest.raises(ValueError):
            build_null_curve(pair, F, reduce_to_r3=True)


class TestClosedFormDzbar:
    def test_fd_matches_closed_form_grim(self):
        h = 0.05
        rep = integrability_residual(grim_ncf(h=h))
        assert rep.residual.values.max() < 2.0 * 2.0 * h * h

    def test_residual_decays_second_order(self):
        errs = []
        for h in (0.1, 0.05):
            rep = integrability_residual(grim_ncf(h=h))
            errs.append(rep.residual.values.max())
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.35)

    def test_margin_drops_edge_rings(self):
        ncf = grim_ncf(h=0.1)
        rep = integrability_residual(ncf, margin=2)
        n = ncf.grid.n_u
        assert rep.dropped_nodes == n * n - (n - 4) * (n - 4)
