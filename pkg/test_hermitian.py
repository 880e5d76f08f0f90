"""
Test the Hermitian eigensolver, Kronecker product, partial trace and density operators
"""
import numpy as np

from common import DimensionMismatch, InvalidSpectrum, NoConvergence, NonFiniteEntries, NotHermitian
from hermitian import DensityOperator, StateVector, eigh, fidelity, is_unitary, kron, partial_trace_R


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def test_eigh_identity_and_diagonal():
    """Test eigh on matrices that are already diagonal"""
    print("Test 1: eigh on identity and diagonal matrices")

    lam, v = eigh(np.eye(3))
    assert np.allclose(lam, [1, 1, 1]), f"Expected (1,1,1), got {lam}"
    assert np.allclose(np.abs(v) @ np.ones(3), np.ones(3)), "Identity eigenvectors should be a permutation"

    lam, v = eigh(np.diag([0.5, 0.3, 0.2]))
    assert np.allclose(lam, [0.5, 0.3, 0.2], atol=1e-15), f"Got {lam}"
    assert np.allclose(v, np.eye(3)), f"Expected identity eigenvectors, got {v}"

    lam, v = eigh(np.diag([0.2, 0.5, 0.3]))
    assert np.allclose(lam, [0.5, 0.3, 0.2]), f"Eigenvalues should be descending, got {lam}"

    print("✅ PASS: Diagonal inputs come back sorted with trivial eigenvectors")


def test_eigh_pauli_x():
    """Test eigh on Pauli-x"""
    print("\nTest 2: eigh on Pauli-x")

    lam, v = eigh(PAULI_X)
    assert np.allclose(lam, [1.0, -1.0], atol=1e-12), f"Expected (1, -1), got {lam}"
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    assert abs(abs(np.vdot(plus, v[:, 0])) - 1.0) < 1e-12, f"First column should be (1,1)/sqrt2, got {v[:, 0]}"
    assert abs(abs(np.vdot(minus, v[:, 1])) - 1.0) < 1e-12, f"Second column should be (1,-1)/sqrt2, got {v[:, 1]}"

    print("✅ PASS: Pauli-x eigenpairs recovered up to phase")


def test_eigh_random_reconstruction():
    """Test V diag(lambda) V† against random complex Hermitian inputs"""
    print("\nTest 3: Random Hermitian reconstruction")

    rng = np.random.default_rng(11)
    worst = 0.0
    for n in (2, 3, 4, 6, 9):
        for _ in range(10):
            m = random_hermitian(rng, n)
            lam, v = eigh(m)
            assert is_unitary(v, 1e-9), "Eigenvectors should be unitary"
            assert np.all(np.diff(lam) <= 0), f"Eigenvalues not descending: {lam}"
            assert np.allclose(lam, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-9), "Eigenvalues differ from LAPACK"
            worst = max(worst, float(np.max(np.abs((v * lam) @ v.conj().T - m))))
    assert worst < 1e-9, f"Reconstruction error {worst:.3e}"

    print("✅ PASS: Reconstruction within 1e-9")
    print(f"   Worst error: {worst:.2e}")


def test_eigh_errors():
    """Test eigh error paths"""
    print("\nTest 4: eigh errors")

    try:
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))
        assert False, "Non-Hermitian input should raise"
    except NotHermitian:
        pass

    try:
        eigh(PAULI_X, max_sweeps=0)
        assert False, "Zero sweeps on a non-diagonal matrix should raise"
    except NoConvergence:
        pass

    try:
        eigh(np.array([[np.nan, 0], [0, 1]]))
        assert False, "NaN input should raise"
    except NonFiniteEntries:
        pass

    print("✅ PASS: NotHermitian, NoConvergence and NonFiniteEntries raised")


def test_kron_examples():
    """Test the Kronecker product index convention"""
    print("\nTest 5: Kronecker products")

    assert np.allclose(kron(np.eye(2), np.eye(3)), np.eye(6)), "I2 ⊗ I3 should be I6"
    assert np.allclose(kron(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 4, 6, 8])), "diag product wrong"
    e0 = np.zeros(4)
    e0[0] = 1
    assert np.allclose(kron(PAULI_X, PAULI_X) @ e0, [0, 0, 0, 1]), "σx⊗σx e0 should be e3"

    rng = np.random.default_rng(3)
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2))
    assert np.allclose(kron(a, b), np.kron(a, b)), "kron should match numpy.kron"

    print("✅ PASS: kron follows (a⊗b)[i*rb+k, j*cb+l] = a[i,j] b[k,l]")


def test_partial_trace():
    """Test Tr_R on Bell and product states"""
    print("\nTest 6: Partial trace over the reservoir")

    bell = StateVector([1, 0, 0, 1])
    assert np.allclose(partial_trace_R(bell, 2, 2), np.eye(2)), "Unnormalized Bell state should give identity"

    zero_one = kron(np.array([[1], [0]]), np.array([[0], [1]]))[:, 0]
    rho = partial_trace_R(zero_one, 2, 2)
    assert np.allclose(rho, np.diag([0, 1])), f"|0>|1> should give |1><1|, got {rho}"

    rng = np.random.default_rng(5)
    r = rng.normal(size=3) + 1j * rng.normal(size=3)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    a = a / np.linalg.norm(a)
    product = np.kron(r, a)
    rho = partial_trace_R(product, 3, 2)
    expected = np.vdot(r, r) * np.outer(a, a.conj())
    assert np.max(np.abs(rho - expected)) < 1e-12, "Product state should give the A projector"
    assert abs(np.trace(rho) - np.vdot(product, product)) < 1e-12, "Trace should equal <psi|psi>"

    try:
        partial_trace_R(np.ones(5), 2, 2)
        assert False, "Wrong dimension should raise"
    except DimensionMismatch:
        pass

    print("✅ PASS: Partial trace examples and dimension check")


def test_density_operator_validation():
    """Test DensityOperator invariants and rejections"""
    print("\nTest 7: DensityOperator validation")

    rho = DensityOperator(np.diag([0.2, 0.5, 0.3]))
    assert np.allclose(rho.eigenvalues, [0.5, 0.3, 0.2]), f"Got {rho.eigenvalues}"
    assert abs(np.sum(rho.eigenvalues) - 1.0) < 1e-12, "Eigenvalues should sum to 1"
    assert rho.reconstruction_error() < 1e-12, "Reconstruction should be exact"

    clamped = DensityOperator(np.diag([1.0 + 1e-13, -1e-13]))
    assert clamped.eigenvalues[1] == 0.0, f"Tiny negative should clamp to 0, got {clamped.eigenvalues}"
    assert clamped.is_pure(), "Clamped state should be pure"

    failures = {
        "non-Hermitian": ([[0.5, 0.1], [0.0, 0.5]], NotHermitian),
        "trace 2": ([[1.0, 0.0], [0.0, 1.0]], InvalidSpectrum),
        "negative eigenvalue": ([[1.1, 0.0], [0.0, -0.1]], InvalidSpectrum),
        "NaN": ([[np.nan, 0.0], [0.0, 1.0]], NonFiniteEntries),
    }
    for label, (matrix, error) in failures.items():
        try:
            DensityOperator(np.array(matrix, dtype=complex))
            assert False, f"{label} should raise {error.__name__}"
        except error:
            pass

    try:
        rho.matrix[0, 0] = 1.0
        assert False, "DensityOperator matrix should be read-only"
    except ValueError:
        pass

    print("✅ PASS: Invariants enforced, small negatives clamped")


def test_rotated_and_fidelity():
    """Test rotated spectra and fidelity"""
    print("\nTest 8: Rotation and fidelity")

    rng = np.random.default_rng(8)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    rho = DensityOperator.from_spectrum([0.5, 0.3, 0.2])
    rotated = rho.rotated(q)
    assert np.allclose(rotated.eigenvalues, [0.5, 0.3, 0.2], atol=1e-12), "Rotation should preserve the spectrum"
    assert np.allclose(rotated.sqrt() @ rotated.sqrt(), rotated.matrix, atol=1e-12), "sqrt should square back"
    assert abs(fidelity(rotated, rotated) - 1.0) < 1e-10, "Self-fidelity should be 1"
    assert fidelity(DensityOperator(np.diag([1.0, 0.0])), np.diag([0.0, 1.0])) < 1e-12, "Orthogonal states"

    print("✅ PASS: Spectrum preserved, fidelity behaves")


def run_all_tests():
    """Run all hermitian tests"""
    print("="*60)
    print("Running Hermitian Core Tests")
    print("="*60)

    try:
        test_eigh_identity_and_diagonal()
        test_eigh_pauli_x()
        test_eigh_random_reconstruction()
        test_eigh_errors()
        test_kron_examples()
        test_partial_trace()
        test_density_operator_validation()
        test_rotated_and_fidelity()

        print("\n" + "="*60)
        print("✅ ALL TESTS PASSED!")
        print("="*60)

    except AssertionError as e:
        print("\n" + "="*60)
        print(f"❌ TEST FAILED: {e}")
        print("="*60)
        raise


if __name__ == "__main__":
    run_all_tests()
