"""Tests for complex confocal families in symmetric Jordan form"""

import numpy as np
import pytest

from confocal.errors import BranchPoleError, HypothesisError, OffQuadricError
from confocal.geometry.sj_complex import (
    Identity,
    IdentitySample,
    check_identity,
    eval_Qz,
    ivory_map,
    ivory_map_back,
    normal_z,
    principal_sqrt,
    random_canonical_quadric,
    random_parameter,
    random_sj_matrix,
    redraw,
    sample_identity,
    sample_point,
    sample_polar_identity,
    sample_reflection_configuration,
    sqrt_sj,
    translation_identities,
    vertex_configuration,
)
from confocal.schemas.algebra import CanonicalQuadric, SJBlock, SJMatrix, nilpotent_block

KINDS = ("QC", "QWC", "IQWC")


def test_principal_sqrt_branch():
    """Test the branch on the negative real axis"""
    assert principal_sqrt(4.0) == pytest.approx(2.0)
    assert principal_sqrt(-4.0) == pytest.approx(2j)
    assert principal_sqrt(complex(-4.0, -0.0)) == pytest.approx(2j)
    assert principal_sqrt(-1j) == pytest.approx(np.exp(-0.25j * np.pi))


@pytest.mark.parametrize("size", [1, 2, 3, 4, 5, 6])
def test_nilpotent_block_order(size):
    """Test that J_p is symmetric and nilpotent of exact order p"""
    J = nilpotent_block(size)
    assert np.allclose(J, J.T)
    assert np.allclose(np.linalg.matrix_power(J, size), 0.0)
    if size > 1:
        assert np.max(np.abs(np.linalg.matrix_power(J, size - 1))) > 1e-3


def test_sqrt_sj_squares(rng):
    """Test that the block square root squares to I - zA"""
    for _ in range(50):
        M = random_sj_matrix(rng, int(rng.integers(1, 7)), max_block=4)
        # eigenvalue moduli stay below 3, so |1 - z a| >= 0.1
        z = 0.3 * np.exp(1j * rng.uniform(-np.pi, np.pi))
        S = sqrt_sj(M, z)
        R = np.eye(M.dimension) - z * M.realize()
        assert np.max(np.abs(S @ S - R)) < 1e-10 * max(1.0, np.max(np.abs(R)))


def test_sqrt_sj_at_zero(rng):
    M = random_sj_matrix(rng, 4)
    assert np.allclose(sqrt_sj(M, 0.0), np.eye(4))


def test_branch_pole():
    M = SJMatrix(blocks=(SJBlock(eigenvalue=2.0, size=2),))
    with pytest.raises(BranchPoleError):
        sqrt_sj(M, 0.5)


def test_canonical_quadric_validation():
    """Test the normal-form constraints of each kind"""
    A = SJMatrix(blocks=(SJBlock(eigenvalue=1.0, size=2), SJBlock(eigenvalue=2.0, size=1)))
    CanonicalQuadric(A=A, B=(0, 0, 0), C=-1, kind="QC")
    with pytest.raises(ValueError):
        CanonicalQuadric(A=A, B=(0, 0, 1), C=-1, kind="QC")
    with pytest.raises(ValueError):
        CanonicalQuadric(A=A, B=(0, 0, -1), C=0, kind="QWC")
    with pytest.raises(ValueError):
        CanonicalQuadric(A=A, B=(0, 0, 0), C=-1, kind="cone")


@pytest.mark.parametrize("kind", KINDS)
def test_translation_identities(kind, rng):
    for _ in range(20):
        q = random_canonical_quadric(rng, kind, int(rng.integers(3, 7)))
        z = random_parameter(rng, q)
        first, second = translation_identities(q, z)
        assert first < 1e-10
        assert second < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_ivory_map_lands_on_confocal(kind, rng):
    """Test that the Ivory image lies on Q_z and maps back"""
    for _ in range(20):
        q = random_canonical_quadric(rng, kind, int(rng.integers(3, 6)))
        z = random_parameter(rng, q)
        x0 = sample_point(q, rng)
        xz = ivory_map(q, z, x0)
        assert abs(eval_Qz(q, z, xz)) < 1e-8 * (1.0 + np.vdot(xz, xz).real)
        assert np.allclose(ivory_map_back(q, z, xz), x0, atol=1e-8 * (1.0 + np.linalg.norm(x0)))


def test_ivory_map_off_quadric(rng):
    q = random_canonical_quadric(rng, "QC", 3)
    with pytest.raises(OffQuadricError):
        ivory_map(q, 0.3, np.full(3, 10.0))


def test_normal_z_at_base(rng):
    """Test that N_0 is the gradient half A x + B"""
    q = random_canonical_quadric(rng, "QWC", 4)
    x = sample_point(q, rng)
    assert np.allclose(normal_z(q, 0.0, x), q.A.realize() @ x + q.b)


@pytest.mark.parametrize("identity", [Identity.IVORY, Identity.TC, Identity.KEY_LEMMA])
@pytest.mark.parametrize("kind", KINDS)
def test_point_identities(identity, kind, rng):
    """Test the identities that need only two points, from the plane upward"""
    for _ in range(25):
        dim = int(rng.integers(2, 6)) if kind != "IQWC" else int(rng.integers(3, 6))

        def draw():
            q = random_canonical_quadric(rng, kind, dim)
            z = random_parameter(rng, q)
            sample = IdentitySample(x00=sample_point(q, rng), x01=sample_point(q, rng))
            return check_identity(identity, sample, q, z)

        assert redraw(draw) < 1e-9


@pytest.mark.parametrize(
    "identity",
    [Identity.HENRICI, Identity.SEGMENT_RULING, Identity.RULING_RULING, Identity.POLAR_RULINGS],
)
@pytest.mark.parametrize("kind", KINDS)
def test_ruling_identities(identity, kind, rng):
    """Test the identities on rulings and conjugate tangents"""
    for _ in range(25):
        dim = int(rng.integers(3, 7))

        def draw():
            q = random_canonical_quadric(rng, kind, dim)
            z = random_parameter(rng, q)
            if identity is Identity.POLAR_RULINGS:
                sample = sample_polar_identity(q, rng)
            else:
                sample = sample_identity(q, rng)
            return check_identity(identity, sample, q, z)

        assert redraw(draw) < 1e-9


def test_identity_hypotheses(rng):
    """Test that samples off the quadric or without rulings are rejected"""
    q = random_canonical_quadric(rng, "QC", 3)
    x = sample_point(q, rng)
    with pytest.raises(HypothesisError):
        check_identity(Identity.IVORY, IdentitySample(x00=x, x01=np.full(3, 5.0 + 0j)), q, 0.2)
    with pytest.raises(HypothesisError):
        check_identity(Identity.HENRICI, IdentitySample(x00=x, x01=x), q, 0.2)
    with pytest.raises(HypothesisError):
        check_identity(Identity.HENRICI, IdentitySample(x00=x, x01=x, w00=np.ones(3, dtype=complex)), q, 0.2)


@pytest.mark.parametrize("kind", KINDS)
def test_reflection_configuration(kind, rng):
    """Test that a constructed reflection at the Ivory image transports back to the base"""
    for _ in range(10):

        def draw():
            q = random_canonical_quadric(rng, kind, 3)
            z = random_parameter(rng, q)
            x00, x01, x02 = sample_reflection_configuration(q, z, rng)
            return vertex_configuration(q, z, x00, x01, x02, tol=1e-6, rng=rng)

        report = redraw(draw)
        assert report.reflect_at_xz0
        assert report.reflect_at_x00 or report.collinear
        assert report.discriminant_symmetry_residual < 1e-6
