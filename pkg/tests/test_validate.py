from math import pi

import numpy as np

from ring_noon.config import RunConfig
from ring_noon.hamiltonian import HermitianOperator, build_h0, build_h0_parts
from ring_noon.validate import CHECKS, validate_suite


def test_default_suite_passes():
    rep = validate_suite()
    assert rep.passed, [(c.name, c.value, c.bound, c.detail) for c in rep.failures()]
    assert len(rep.checks) == len(CHECKS)


def test_suite_passes_at_the_degenerate_point():
    cfg = RunConfig().with_overrides(model={"U": 0.0, "delta_J": 0.0})
    assert validate_suite(cfg).passed


def test_mutated_hopping_sign_is_caught():
    # flip the sign of the asymmetric-barrier term; the drive no longer matches dH0/dOmega
    def mutant(p, b):
        HU, HJ, HdJ = build_h0_parts(p, b)
        return HermitianOperator(HU.matrix + HJ.matrix - HdJ.matrix)

    rep = validate_suite(builder=mutant, only={"drive_derivative", "parts_sum"})
    assert not rep.passed
    assert {c.name for c in rep.failures()} == {"drive_derivative", "parts_sum"}


def test_non_hermitian_mutant_is_caught():
    def mutant(p, b):
        H = build_h0(p, b).toarray().astype(complex)
        H[0, -1] += 1e-6j
        return HermitianOperator(H, real=False)

    rep = validate_suite(builder=mutant, only={"hermiticity"})
    assert not rep.passed


def test_periodicity_mutant_is_caught():
    # a phase entering as Omega/2 instead of Omega/3 breaks 2 pi periodicity
    def mutant(p, b):
        return build_h0(p.at(1.5 * p.omega_phase), b)

    rep = validate_suite(builder=mutant, only={"periodicity"})
    assert not rep.passed


def test_crashing_check_is_a_failure():
    def broken(p, b):
        raise np.linalg.LinAlgError("boom")

    rep = validate_suite(builder=broken, only={"hermiticity"})
    assert not rep.passed and "boom" in rep.checks[0].detail
