import cmath
import json
import math

import numpy as np
import pytest

from odk.certifier import (
    DENSE,
    NONE,
    SOMEWHERE_DENSE,
    OrbitCertificate,
    check_property_D,
    certify_somewhere_dense,
    evaluate_candidates,
    spanning_test,
    evaluated_family_dense,
    upgrade_to_dense,
    verify_certificate,
)
from odk.errors import FlagRequired, NoClaim, ValidationError, WrongTupleLength
from odk.matrix_group import CommutingGroup

R2 = math.sqrt(2)
A1 = 2 * math.pi * 1j
B1, B2 = R2 + 1j, 1 + 1j * R2


def m(z):
    return np.array([[z]])


@pytest.fixture(scope="module")
def gl1_group():
    return CommutingGroup((m(cmath.exp(B1)), m(cmath.exp(B2))))


@pytest.fixture(scope="module")
def gl1_cert(gl1_group):
    return certify_somewhere_dense(gl1_group, 1.0)


def test_evaluate_candidates():
    assert evaluate_candidates([m(A1)], 1.0).generators[0][0] == A1
    fam = evaluate_candidates([np.diag([1, 1j])], [1, 1])
    assert fam.generators[0] == (1, 1j)
    assert not any(evaluate_candidates([np.zeros((2, 2))], [1, 2]).generators[0])


def test_spanning_test():
    assert spanning_test([m(B1), m(B2)], 1.0) is not None
    assert spanning_test([m(1), m(2)], 1.0) is None
    assert spanning_test([m(0)], 1.0) is None


def test_property_d_examples():
    rep = check_property_D([m(B1), m(B2), m(A1)], 1.0)
    assert rep.ok and rep.stage == "passed"
    F = np.array([[B1.real, B2.real], [B1.imag, B2.imag]])
    assert abs(np.linalg.det(F)) == pytest.approx(1.0)
    rep = check_property_D([m(1), m(1j), m(1 + 1j)], 1.0)
    assert not rep.ok and rep.stage == "density"
    assert rep.verdict.relation.s == (1, 0, 1)
    rep = check_property_D([m(1), m(2), m(3)], 1.0)
    assert not rep.ok and rep.stage == "independence"
    with pytest.raises(WrongTupleLength):
        check_property_D([m(1), m(2)], 1.0)


def test_evaluated_path_agrees_on_examples():
    for tup in ([m(B1), m(B2), m(A1)], [m(1), m(1j), m(1 + 1j)], [m(1), m(2), m(3)]):
        assert check_property_D(tup, 1.0).ok == evaluated_family_dense(tup, 1.0)


def test_gl1_certificate(gl1_cert):
    assert gl1_cert.found and gl1_cert.claim == SOMEWHERE_DENSE
    values = sorted((complex(c.matrix[0, 0]) for c in gl1_cert.candidates), key=lambda z: (z.real, z.imag))
    assert np.allclose(values, sorted([B1, B2, A1], key=lambda z: (z.real, z.imag)))
    assert all(t.consistent for t in gl1_cert.examined)


def test_upgrade(gl1_cert):
    dense = upgrade_to_dense(gl1_cert, True)
    assert dense.claim == DENSE
    assert upgrade_to_dense(dense, True) is dense
    with pytest.raises(FlagRequired):
        upgrade_to_dense(gl1_cert, False)
    with pytest.raises(NoClaim):
        upgrade_to_dense(OrbitCertificate(gl1_cert.x, gl1_cert.candidates, gl1_cert.alphas,
                                          gl1_cert.dependence_residual, gl1_cert.verdict, NONE,
                                          gl1_cert.config), True)


@pytest.mark.parametrize("gen", [2.0, cmath.exp(2j * math.pi * R2)])
def test_negative_controls(gen):
    res = certify_somewhere_dense(CommutingGroup((m(gen),)), 1.0)
    assert not res.found
    assert res.to_json()["refutes_density"] is False
    assert all(t.consistent for t in res.examined)


def test_zero_point_rejected(gl1_group):
    with pytest.raises(ValidationError):
        certify_somewhere_dense(gl1_group, 0.0)


@pytest.mark.parametrize("lam", [2.0, 1j])
def test_scaling_point_preserves_success(gl1_group, lam):
    assert certify_somewhere_dense(gl1_group, lam).found


def test_two_dimensional_group():
    g = CommutingGroup((np.diag([cmath.exp(B1), cmath.exp(B1)]), np.diag([cmath.exp(B2), cmath.exp(B2)])))
    # scalar groups acting on C^2 cannot have dense orbits
    res = certify_somewhere_dense(g, [1, 1])
    assert not res.found


def test_verify_roundtrip_and_tamper(gl1_cert):
    data = json.loads(json.dumps(upgrade_to_dense(gl1_cert, True).to_json()))
    assert verify_certificate(data).ok
    assert OrbitCertificate.from_json(data).to_json() == data

    bad = json.loads(json.dumps(data))
    bad["verdict"]["relation"] = {"s": [1, 0, 0], "residual": 0.0, "height": 1}
    assert not verify_certificate(bad).ok

    bad = json.loads(json.dumps(data))
    bad["alpha"][0] += 1e-4
    assert not verify_certificate(bad).ok

    bad = json.loads(json.dumps(data))
    bad["tuple"][0]["m"] = [2, 0]
    assert not verify_certificate(bad).ok


def test_certificate_is_deterministic(gl1_group):
    a = json.dumps(certify_somewhere_dense(gl1_group, 1.0).to_json(), sort_keys=True)
    b = json.dumps(certify_somewhere_dense(gl1_group, 1.0).to_json(), sort_keys=True)
    assert a == b
