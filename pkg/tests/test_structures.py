"""Tests for the compatible-product families and their constructors."""

import cmath

import numpy as np
import pytest

from laxflows.errors import (
    BadShapeError,
    DegenerateParameterError,
    PoleCollisionError,
)
from laxflows.linalg import frobenius, identity, inverse, random_matrix
from laxflows.operators import op_residual, random_state
from laxflows.structures import (
    a1_structure,
    a3_block_pair,
    a3_structure_block_pair,
    a3_structure_canonical,
    a3_structure_random,
    ak_structure,
    build_R,
    circ_product,
    circ_product_pm_closed,
    clock_shift_pair,
    derive_BC,
    involution_canonical,
    pencil_associativity_check,
    perturb_structure,
    pm_structure,
    random_involution,
    skew_Ak,
    skew_a3_structure,
    skew_ak_structure,
    skew_block_diagonal,
    structure_residuals,
    verify_relations,
)


class TestClockShift:
    def test_k2_scalar(self):
        A, T = clock_shift_pair(2, 1, np.array([[3.0 + 0j]]))
        assert np.array_equal(A, np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.array_equal(T, np.diag([3.0 + 0j, -3.0]))
        assert frobenius(A @ T + T @ A) < 1e-15  # eps = -1

    def test_k3_scalar(self):
        eps = cmath.exp(2j * cmath.pi / 3)
        A, T = clock_shift_pair(3, 1, np.array([[2.0 + 0j]]))
        # the bound is a couple of ulps of the k-th root of unity at |D| = 2
        assert frobenius(A @ T - eps * T @ A) < 2e-15
        assert frobenius(np.linalg.matrix_power(A, 3) - identity(3)) == 0.0

    def test_k2_block(self):
        D = 0.5 * random_matrix(2, 3)
        eps = -1.0
        A, T = clock_shift_pair(2, 2, D)
        assert frobenius(A @ T - eps * T @ A) < 1e-14
        Tk = np.linalg.matrix_power(T, 2)
        assert frobenius(Tk[:2, :2] - D @ D) < 1e-14


class TestDeriveBC:
    def test_k2_relations(self):
        A, T = clock_shift_pair(2, 1, np.array([[3.0 + 0j]]))
        B, C = derive_BC(T, A, 2)
        assert verify_relations(A, B, C, 2).max_residual < 1e-12

    def test_k1_degenerate(self):
        T = 2 * identity(3)
        A = random_matrix(3, 1)
        B, C = derive_BC(T, A, 1)
        assert frobenius(B - A) < 1e-13
        assert frobenius(C - 2 * identity(3)) < 1e-13

    def test_k4_rel3(self):
        A, T = clock_shift_pair(4, 1, np.array([[2.0 + 0j]]))
        B, C = derive_BC(T, A, 4)
        report = verify_relations(A, B, C, 4)
        rel3 = [r for name, r in report.entries if "C" in name]
        assert max(rel3) < 1e-11


class TestVerifyRelations:
    def test_k2_resolution_set_empty(self):
        s = ak_structure(2, 1)
        report = verify_relations(s.A, s.B, s.C, 2)
        assert not any("resolution" in name for name, _ in report.entries)

    def test_construction_passes(self):
        A, T = clock_shift_pair(3, 1, np.array([[2.0 + 0j]]))
        B, C = derive_BC(T, A, 3)
        assert verify_relations(A, B, C, 3).max_residual < 1e-11

    def test_perturbation_sensitivity(self):
        s = ak_structure(3, 1)
        broken = perturb_structure(s, "B", 1e-3, seed=1)
        res = verify_relations(broken.A, broken.B, broken.C, 3).max_residual
        assert 1e-4 < res < 1e-1

    @pytest.mark.parametrize("k,d", [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2), (6, 1), (6, 2)])
    def test_families(self, k, d):
        s = ak_structure(k, d, seed=k + d)
        assert verify_relations(s.A, s.B, s.C, k).max_residual < 1e-10


class TestInvolutions:
    def test_canonical_zero_alphas(self):
        A = involution_canonical(4, 2, (0, 0))
        assert frobenius(A @ A - identity(4)) < 1e-15

    def test_canonical_half(self):
        A = involution_canonical(4, 2, (1, 1))
        assert frobenius(A @ A - identity(4)) < 1e-14

    def test_canonical_p1(self):
        A = involution_canonical(4, 1, (1,))
        assert frobenius(A @ A - identity(4)) < 1e-14

    def test_alpha_count_validated(self):
        with pytest.raises(BadShapeError):
            involution_canonical(4, 2, (1,))

    def test_random_involution(self):
        A = random_involution(5, 3)
        assert frobenius(A @ A - identity(5)) < 1e-12


class TestA3BlockPair:
    def test_zero_P(self):
        A, B = a3_block_pair(np.zeros((2, 2), dtype=complex))
        Id = identity(2)
        assert frobenius(B - np.block([[0 * Id, Id], [Id, 0 * Id]])) < 1e-15
        assert frobenius(B @ B - identity(4)) < 1e-15

    def test_identity_P(self):
        A, B = a3_block_pair(identity(2))
        Id = identity(2)
        assert frobenius(B - np.block([[Id, 2 * Id], [0 * Id, -Id]])) < 1e-15
        assert frobenius(B @ B - identity(4)) < 1e-15

    def test_random_P(self):
        A, B = a3_block_pair(random_matrix(2, 5))
        assert frobenius(A @ A - identity(4)) < 1e-13
        assert frobenius(B @ B - identity(4)) < 1e-13


class TestSkewAk:
    def test_k2_paper_form(self):
        alpha = 1.4
        data = skew_Ak(2, alpha**2)
        A = data.A
        assert abs(A[1, 0] - alpha) < 1e-14
        assert abs(A[0, 1] - 1 / alpha) < 1e-14
        assert data.constraint_residual < 1e-13

    def test_k2_fixed_point(self):
        data = skew_Ak(2, 1.0)
        assert frobenius(data.A - np.array([[0, 1], [1, 0]], dtype=complex)) < 1e-14
        assert data.cycle_residual < 1e-15

    def test_k3_constraint(self):
        data = skew_Ak(3, 0.3)
        assert data.constraint_residual < 1e-10
        assert data.b_residual < 1e-12
        assert data.cycle_residual < 1e-12

    @pytest.mark.parametrize("k,z1", [(2, 0.25), (3, 0.8 + 0.2j), (4, 1.7 - 0.6j)])
    def test_structure_relations(self, k, z1):
        s = skew_ak_structure(k, z1=z1)
        assert verify_relations(s.A, s.B, s.C, k).max_residual < 1e-10
        assert s.T is not None  # clock partner recovered from C

    def test_cycle_closure_observed(self):
        # Moebius recursion returns to z1 after k steps for sampled parameters
        for k, z1 in [(2, 0.7), (3, 0.3), (4, 0.3), (5, 0.2 + 0.1j)]:
            assert skew_Ak(k, z1).cycle_residual < 1e-10

    def test_degenerate_parameter(self):
        # z = 1 + 1/eps is the pole of f for k = 4
        eps = cmath.exp(2j * cmath.pi / 4)
        with pytest.raises(DegenerateParameterError):
            skew_Ak(4, 1 + 1 / eps)

    def test_block_diagonal_composite(self):
        A = skew_block_diagonal(2, [(1, 1.0), (1, -1.0), (2, 0.25)])
        s = skew_ak_structure(2, A=A)
        from laxflows.flows import skew_constraint_residual

        assert skew_constraint_residual(s) < 1e-12


class TestBuildR:
    def test_a1_single_term(self):
        s = a1_structure(3, seed=1)
        op = build_R(s)
        assert len(op.terms) == 1
        x = random_matrix(3, 0)
        assert frobenius(op(x) - s.c @ x) < 1e-14

    def test_a3_two_terms(self):
        s = a3_structure_random(4, 2)
        op = build_R(s)
        assert len(op.terms) == 2
        x = random_matrix(4, 0)
        assert frobenius(op(x) - (s.A @ x @ s.B + s.B @ s.A @ x)) < 1e-12

    def test_ak_term_count(self):
        s = ak_structure(3, 1)
        assert len(build_R(s).terms) == 3  # k - 1 clock terms plus the C term

    def test_pm_m1_k1_is_left_multiplication(self):
        lam1, t1 = 0.8 + 0j, 0.4 + 0j
        s = pm_structure(1, 1, [lam1], [t1], d=3, seed=2)
        c = t1 * inverse(s.T - lam1 * identity(3))
        from laxflows.operators import MultiplierOperator

        expected = MultiplierOperator(3, ((c, identity(3)),))
        assert op_residual(build_R(s), expected, 10, 0) < 1e-12


class TestCircProduct:
    def test_a1_closed_form(self):
        s = a1_structure(3, seed=4)
        x, y = random_matrix(3, 0), random_matrix(3, 1)
        assert frobenius(circ_product(s, x, y) - x @ s.c @ y) < 1e-12

    def test_unit_substitution(self):
        s = a3_structure_random(4, 5)
        r_op = build_R(s)
        y = random_matrix(4, 1)
        lhs = circ_product(s, identity(4), y)
        assert frobenius(lhs - r_op(identity(4)) @ y) < 1e-12

    def test_pm_closed_form_matches(self):
        s = pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)
        x = random_state(4, 2, 0)
        y = random_state(4, 2, 1)
        diff = circ_product(s, x, y) - circ_product_pm_closed(s, x, y)
        assert diff.norm() < 1e-10


class TestPencilAssociativity:
    def test_lambda_zero(self):
        s = a1_structure(4, seed=0)
        assert pencil_associativity_check(s, [0.0], 5, 0) < 1e-13

    def test_a3_block_pair(self):
        s = a3_structure_block_pair(random_matrix(2, 5))
        assert pencil_associativity_check(s, [0.1, 0.7j], 10, 0) < 1e-10

    def test_ak(self):
        s = ak_structure(3, 1)
        assert pencil_associativity_check(s, [0.2, -0.3 + 0.1j], 10, 0) < 1e-10

    def test_pm(self):
        s = pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)
        assert pencil_associativity_check(s, [0.3, 0.1 - 0.2j], 10, 0) < 1e-10

    def test_broken_structure_detected(self):
        s = a3_structure_random(4, 1)
        broken = perturb_structure(s, "B", 1e-3, seed=2)
        assert pencil_associativity_check(broken, [0.3], 10, 0) > 1e-6


class TestPMStructureValidation:
    def test_pole_collision(self):
        with pytest.raises(PoleCollisionError):
            pm_structure(2, 2, [1.0, -1.0], [0.3, 0.5], d=2, seed=3)  # lambda^k coincide

    def test_length_mismatch(self):
        with pytest.raises(BadShapeError):
            pm_structure(2, 2, [1.0], [0.3, 0.5], d=2, seed=3)

    def test_structure_residuals(self):
        s = pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)
        res = structure_residuals(s)
        assert res["B^k - 1"] < 1e-12
        assert res["B T - eps T B"] < 1e-12


class TestStructureResiduals:
    def test_a3(self):
        s = a3_structure_canonical(4, 2, (1.0, 0.5), seed=1)
        res = structure_residuals(s)
        assert res["A^2 - 1"] < 1e-13
        assert res["B^2 - 1"] < 1e-12

    def test_skew_a3(self):
        s = skew_a3_structure(4, 2, (1.0, 1.0))
        assert frobenius(s.B - s.A.T) == 0.0

    def test_ak_includes_clock(self):
        s = ak_structure(3, 2, seed=5)
        res = structure_residuals(s)
        assert "A T - eps T A" in res
        assert max(res.values()) < 1e-10
