"""Tests for the dressing evaluations: closed forms, branches, gates."""

import numpy as np
import pytest

from laxflows.dressing import (
    dress,
    dressing_a1,
    dressing_a3,
    dressing_ak,
    dressing_pm,
    inverse_composition_residual,
    mu_ak,
    mu_condition_residual,
    mu_solver_pm,
    verify_homomorphism,
)
from laxflows.errors import BranchPointError, LambdaTooSmallError, WrongFamilyError
from laxflows.linalg import frobenius, identity, inverse, random_matrix
from laxflows.operators import (
    apply,
    conjugate_operator,
    identity_operator,
    op_residual,
    random_state,
)
from laxflows.structures import (
    MStructureAk,
    a1_structure,
    a3_structure_block_pair,
    ak_structure,
    build_R,
    pm_structure,
)


@pytest.fixture(scope="module")
def pm22():
    return pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)


class TestDressingA1:
    def test_lambda_zero_is_identity(self):
        c = random_matrix(3, 1)
        ev = dressing_a1(c, 0.0)
        assert op_residual(ev.S, identity_operator(3), 5, 0) < 1e-15
        assert ev.A_op is None

    def test_nilpotent_exact(self):
        c = np.array([[0, 1], [0, 0]], dtype=complex)
        ev = dressing_a1(c, 1.0)
        assert frobenius(apply(ev.S_inv, apply(ev.S, random_matrix(2, 0))) - random_matrix(2, 0)) < 1e-14
        s = a1_structure(2, c=c)
        assert verify_homomorphism(ev, s, 5, 0) < 1e-14

    def test_sog2_random(self):
        s = a1_structure(4, seed=2)
        ev = dressing_a1(s.c, 0.3j)
        assert verify_homomorphism(ev, s, 10, 0) < 1e-11

    def test_l_is_right_resolvent(self):
        c = random_matrix(3, 1)
        lam = 0.2
        ev = dressing_a1(c, lam)
        x = random_matrix(3, 5)
        expected = x @ inverse(identity(3) + lam * c)
        assert frobenius(apply(ev.L_op, x) - expected) < 1e-12


class TestDressingA3:
    def test_lambda_zero_identity(self):
        s = a3_structure_block_pair(np.zeros((2, 2), dtype=complex))
        ev = dressing_a3(s.A, s.B, 0.0)
        assert op_residual(ev.S, identity_operator(4), 5, 0) < 1e-14

    def test_composition(self):
        s = a3_structure_block_pair(np.zeros((2, 2), dtype=complex))
        ev = dressing_a3(s.A, s.B, 0.2)
        assert inverse_composition_residual(ev, 10, 0) < 1e-10

    def test_sog2(self):
        s = a3_structure_block_pair(np.zeros((2, 2), dtype=complex))
        ev = dressing_a3(s.A, s.B, 0.2)
        assert verify_homomorphism(ev, s, 10, 0) < 1e-10

    def test_branch_point(self):
        s = a3_structure_block_pair(random_matrix(2, 1))
        with pytest.raises(BranchPointError):
            dressing_a3(s.A, s.B, 0.5)

    def test_gauge_covariance(self):
        # conjugating the dressing by 1 + lam t realizes the R -> R + ad_t shift
        s = a3_structure_block_pair(0.5 * random_matrix(2, 5))
        lam = 0.2
        ev = dressing_a3(s.A, s.B, lam)
        t = 0.5 * random_matrix(4, 9)
        g = identity(4) + lam * t
        conjugated = conjugate_operator(ev.S, g, inverse(g))
        base = verify_homomorphism(ev, s, 10, 0)
        moved = _homomorphism_of_op(conjugated, s, lam, 10, 0)
        assert abs(base - moved) < 1e-9

    def test_k2_clock_family_agrees_in_gauge_class(self):
        # both the involution-pair formulas and the k = 2 clock dressing
        # solve the same intertwining problem for their respective R's
        s = ak_structure(2, 2, seed=4)
        ev = dressing_ak(s, 0.1)
        assert verify_homomorphism(ev, s, 10, 0) < 1e-9


def _homomorphism_of_op(S, structure, lam, n_pairs, seed):
    from laxflows.structures import circ_from_operator

    r_op = build_R(structure)
    worst = 0.0
    for j in range(n_pairs):
        x = random_matrix(structure.n, seed + 2 * j)
        y = random_matrix(structure.n, seed + 2 * j + 1)
        lhs = apply(S, x) @ apply(S, y)
        rhs = apply(S, x @ y + lam * circ_from_operator(r_op, x, y))
        worst = max(worst, frobenius(lhs - rhs) / max(1.0, frobenius(x) * frobenius(y)))
    return worst


class TestDressingAk:
    def test_l_equals_adjoint_s_inv(self):
        s = ak_structure(3, 1)
        ev = dressing_ak(s, 0.15)
        assert op_residual(ev.L_op, ev.S_inv.adjoint(), 10, 0) < 1e-12

    def test_sog2_k2(self):
        s = ak_structure(2, 1)
        ev = dressing_ak(s, 0.1)
        assert verify_homomorphism(ev, s, 10, 0) < 1e-9

    def test_composition_k3(self):
        s = ak_structure(3, 1)
        ev = dressing_ak(s, 0.1)
        assert inverse_composition_residual(ev, 10, 0) < 1e-9

    def test_annulus_guards(self):
        s = ak_structure(3, 1)
        with pytest.raises(LambdaTooSmallError):
            dressing_ak(s, 0.01)
        with pytest.raises(BranchPointError):
            dressing_ak(s, 0.45)

    def test_mu_branch(self):
        assert abs(mu_ak(3, 0.0) - 1.0) < 1e-15
        mu = mu_ak(3, 0.1)
        assert abs(mu**3 - (2 + 0.4) / (2 - 0.2)) < 1e-14

    def test_missing_T(self):
        s = ak_structure(2, 1)
        bare = MStructureAk(k=s.k, n=s.n, A=s.A, B=s.B, C=s.C, T=None)
        with pytest.raises(WrongFamilyError):
            dressing_ak(bare, 0.1)


class TestMuSolver:
    def test_m1_k1_closed_form(self, ):
        s = pm_structure(1, 1, [0.8], [0.4], d=3, seed=2)
        lam = 0.07
        (mu,) = mu_solver_pm(s, lam)
        assert abs(mu - (0.8 - 0.4 * lam)) < 1e-13

    def test_condition_residual(self, pm22):
        lam = 0.05
        mus = mu_solver_pm(pm22, lam)
        assert mu_condition_residual(pm22, lam, mus) < 1e-12

    def test_branch_values(self, pm22):
        mus = mu_solver_pm(pm22, 0.02)
        assert abs(mus[0] - 1.0) < 0.05
        assert abs(mus[1] - 2.0) < 0.05

    def test_branch_continuity(self, pm22):
        # 20-step path: consecutive roots move by O(|dlam| * |dmu/dlam|)
        lams = np.linspace(0.02, 0.1, 20)
        roots = np.array([mu_solver_pm(pm22, lam) for lam in lams])
        step = lams[1] - lams[0]
        deriv = np.abs(np.diff(roots, axis=0)) / step
        max_deriv = deriv.max()
        jumps = np.abs(np.diff(roots, axis=0)).max()
        assert jumps < 10 * step * max_deriv

    def test_negative_lambda(self, pm22):
        mus = mu_solver_pm(pm22, -1e-4)
        assert abs(mus[0] - (1.0 + 0.3e-4)) < 1e-8


class TestDressingPM:
    def test_sog2(self, pm22):
        ev = dressing_pm(pm22, 0.05)
        assert verify_homomorphism(ev, pm22, 10, 0) < 1e-8

    def test_composition(self, pm22):
        ev = dressing_pm(pm22, 0.05)
        assert inverse_composition_residual(ev, 10, 0) < 1e-8

    def test_l_adjoint_consistency(self, pm22):
        ev = dressing_pm(pm22, 0.06)
        assert op_residual(ev.S_inv, ev.L_op.adjoint(), 5, 0) < 1e-12

    def test_first_order_coefficient(self, pm22):
        # (S(x) - x)/lam at small lam approaches R(x)
        lam = 1e-4
        ev = dressing_pm(pm22, lam)
        r_op = build_R(pm22)
        x = random_state(4, 2, 1)
        fd = (1.0 / lam) * (ev.S(x) - x)
        assert (fd - r_op(x)).norm() / max(1.0, x.norm()) < 1e-3

    def test_sog2_along_annulus(self, pm22):
        for lam in (0.05, 0.08, 0.1, 0.05 + 0.02j):
            ev = dressing_pm(pm22, lam)
            assert verify_homomorphism(ev, pm22, 5, 0) < 1e-8


class TestDegenerations:
    def test_pm_m1_k1_reproduces_left_dressing(self):
        lam1, t1 = 0.8 + 0j, 0.4 + 0j
        s = pm_structure(1, 1, [lam1], [t1], d=3, seed=2)
        lam = 0.07
        ev_pm = dressing_pm(s, lam)
        c = t1 * inverse(s.T - lam1 * identity(3))
        ev_a1 = dressing_a1(c, lam)
        assert op_residual(ev_pm.S, ev_a1.S, 10, 0) < 1e-9
        assert op_residual(ev_pm.L_op, ev_a1.L_op, 10, 0) < 1e-9
        assert op_residual(ev_pm.S_inv, ev_a1.S_inv, 10, 0) < 1e-9

    def test_pm_m1_k2_single_pole(self):
        s = pm_structure(2, 1, [1.0], [0.3], d=2, seed=4)
        ev = dressing_pm(s, 0.05)
        assert verify_homomorphism(ev, s, 10, 0) < 1e-8
        assert inverse_composition_residual(ev, 10, 0) < 1e-8


class TestDispatch:
    def test_dress_all_families(self, pm22):
        cases = [
            (a1_structure(3, seed=1), 0.2),
            (a3_structure_block_pair(0.5 * random_matrix(2, 5)), 0.2),
            (ak_structure(3, 1), 0.15),
            (pm22, 0.05),
        ]
        for s, lam in cases:
            ev = dress(s, lam)
            assert verify_homomorphism(ev, s, 5, 0) < 1e-8
            assert inverse_composition_residual(ev, 5, 0) < 1e-8
            assert op_residual(ev.L_op, ev.S_inv.adjoint(), 5, 0) < 1e-10

    def test_homomorphism_zero_pair(self):
        s = a1_structure(3, seed=1)
        ev = dress(s, 0.2)
        z = np.zeros((3, 3), dtype=complex)
        lhs = apply(ev.S, z) @ apply(ev.S, z)
        assert frobenius(lhs) == 0.0
