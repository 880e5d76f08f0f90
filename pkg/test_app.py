"""
Test the command line: outputs, exit codes and determinism
"""
import csv
import json
import tempfile
from pathlib import Path

import unitaries
from app import main
from validation import DEFAULT_BUDGETS, DEFAULT_SAMPLES, Suite


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_volume_command():
    """Test closed-form volumes written by the volume command"""
    print("Test 1: volume command")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "so3.csv"
        code = main(["volume", "--group", "so3", "--spectrum", "0.5,0.3,0.2", "--output", str(out)])
        assert code == 0, f"Exit code {code}"
        row = read_rows(out)[0]
        assert row["method"] == "closed-form", f"Method {row['method']}"
        assert abs(float(row["normalized"]) - 0.97211) < 1e-5, f"Normalized {row['normalized']}"
        assert float(row["lambda1"]) == 0.5 and row["dim"] == "3"

        out = Path(tmp) / "su2.csv"
        assert main(["volume", "--group", "su2", "--spectrum", "1,0", "--output", str(out)]) == 0
        assert float(read_rows(out)[0]["raw"]) == 0.0, "Pure qubit has zero volume"

    print("✅ PASS: SO(3) normalized 0.97211, pure SU(2) zero")


def test_monte_carlo_is_reproducible():
    """Test same seed gives identical files regardless of threads"""
    print("\nTest 2: Monte Carlo reproducibility")

    with tempfile.TemporaryDirectory() as tmp:
        texts = []
        for name, threads in (("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")):
            out = Path(tmp) / name
            code = main(["volume", "--group", "son", "--spectrum", "0.4,0.3,0.2,0.1", "--method", "monte-carlo",
                         "--budget", "5000", "--seed", "11", "--threads", threads, "--output", str(out)])
            assert code == 0, f"Exit code {code}"
            texts.append(out.read_text(encoding="utf-8"))
        assert texts[0] == texts[1], "Reruns differ"
        assert texts[0] == texts[2], "Thread count changed the result"

    print("✅ PASS: Bit-identical reruns")


def test_exit_codes():
    """Test exit codes for bad input"""
    print("\nTest 3: Exit codes")

    with tempfile.TemporaryDirectory() as tmp:
        cases = [
            (["volume", "--spectrum", "0.5,0.6", "--output", tmp], 2),
            (["volume", "--spectrum", "0.5,0.3,0.2", "--seed", "-1", "--output", tmp], 2),
            (["volume", "--output", tmp], 2),
            (["volume", "--group", "su2", "--spectrum", "0.5,0.3,0.2", "--output", tmp], 3),
            (["volume", "--group", "u", "--spectrum", "0.5,0.5", "--method", "closed-form", "--output", tmp], 3),
            (["metric", "--spectrum", "0.5,0.3,0.2", "--xi", "0.1", "--output", tmp], 3),
            (["volume", "--group", "so3", "--spectrum", "0.5,0.3,0.2", "--method", "quadrature",
              "--budget", "10", "--output", tmp], 2),
        ]
        for argv, expected in cases:
            code = main(argv)
            assert code == expected, f"{' '.join(argv[:4])}: expected {expected}, got {code}"

        blocker = Path(tmp) / "blocker"
        blocker.write_text("not a directory", encoding="utf-8")
        code = main(["entropy", "--spectrum", "0.5,0.5", "--output", str(blocker / "sub")])
        assert code == 4, f"Unwritable output should exit 4, got {code}"

    print("✅ PASS: Exit codes 2, 3 and 4")


def test_matrix_file():
    """Test loading a density matrix from a file"""
    print("\nTest 4: Matrix file")

    with tempfile.TemporaryDirectory() as tmp:
        good = Path(tmp) / "rho.txt"
        good.write_text("# diagonal qutrit\n3\n0.5 0 0\n0 0.3 0\n0 0 0.2\n", encoding="utf-8")
        out = Path(tmp) / "volume.csv"
        assert main(["volume", "--matrix-file", str(good), "--output", str(out)]) == 0
        assert abs(float(read_rows(out)[0]["normalized"]) - 0.97211) < 1e-5

        short = Path(tmp) / "short.txt"
        short.write_text("3\n0.5 0 0\n0 0.5 0\n", encoding="utf-8")
        assert main(["volume", "--matrix-file", str(short), "--output", tmp]) == 3, "Missing row"

        rotated = Path(__file__).parent / "data" / "rho_rotated.txt"
        out = Path(tmp) / "rotated.csv"
        assert main(["entropy", "--matrix-file", str(rotated), "--output", str(out)]) == 0
        assert abs(float(read_rows(out)[0]["s_lin"]) - 0.62) < 1e-12, "Complex basis keeps the spectrum"

        both = ["volume", "--matrix-file", str(good), "--spectrum", "0.5,0.3,0.2", "--output", tmp]
        assert main(both) == 2, "Spectrum and matrix file together"

    print("✅ PASS: Matrix file parsed, malformed files rejected")


def test_metric_and_formats():
    """Test the metric table and CSV/JSON agreement"""
    print("\nTest 5: Metric table and output formats")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "metric.csv"
        assert main(["metric", "--spectrum", "0.5,0.3,0.2", "--xi", "0.7,0.3,0.4", "--output", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 11, f"Expected 9 entries plus det and density, got {len(rows)}"
        det = float(rows[9]["re"])
        density = float(rows[10]["re"])
        assert rows[9]["row"] == "det" and det > 0
        assert abs(density ** 2 - det) < 1e-12 * max(1.0, det)

        argv = ["entropy", "--group", "so3", "--spectrum", "0.5,0.3,0.2", "--output", tmp]
        assert main(argv + ["--format", "csv"]) == 0
        assert main(argv + ["--format", "json"]) == 0
        from_csv = read_rows(Path(tmp) / "entropy.csv")[0]
        from_json = json.loads((Path(tmp) / "entropy.json").read_text(encoding="utf-8"))[0]
        assert list(from_csv) == list(from_json), "Columns differ between formats"
        for key, value in from_json.items():
            if value is None:
                assert from_csv[key] == "", f"{key}: expected empty cell"
            else:
                assert float(from_csv[key]) == float(value), f"{key}: {from_csv[key]} != {value}"
        assert abs(from_json["s_lin"] - 0.62) < 1e-12

    print("✅ PASS: Metric table written, CSV and JSON carry the same values")


def test_coarse_grain_command():
    """Test coarse-grain tables and reruns"""
    print("\nTest 6: coarse-grain command")

    with tempfile.TemporaryDirectory() as tmp:
        texts = []
        for run in ("first", "second"):
            out = Path(tmp) / run
            assert main(["coarse-grain", "--ell", "5", "--k", "2", "--measure", "volume", "--output", str(out)]) == 0
            texts.append((out / "coarse_volume_cells.csv").read_text(encoding="utf-8"))
            assert (out / "coarse_volume_bins.csv").exists()
            assert not (out / "coarse_linear_cells.csv").exists(), "Only the requested measure is written"
        assert len(texts[0].strip().split("\n")) == 26, "25 cells plus the header"
        assert texts[0] == texts[1], "Reruns differ"

        assert main(["coarse-grain", "--ell", "5", "--k", "0", "--output", tmp]) == 2, "k = 0 is invalid"

    print("✅ PASS: 25-cell table, bit-identical reruns")


def test_validate_command():
    """Test the self-check suites pass, and fail on a broken rotation"""
    print("\nTest 7: validate command")

    with tempfile.TemporaryDirectory() as tmp:
        argv = ["validate", "--suite", "partial-trace", "--suite", "metric", "--samples", "5", "--output", tmp]
        assert main(argv) == 0, "Suites should pass"
        rows = read_rows(Path(tmp) / "validation.csv")
        assert [row["suite"] for row in rows] == ["partial-trace", "metric"]
        assert all(row["passed"] == "1" for row in rows)

        original = unitaries.plane_rotation

        def broken(n, i, j, phi, psi=0.0, chi=0.0):
            e = original(n, i, j, phi, psi, chi)
            e[..., j - 1, i - 1] *= -1
            return e

        unitaries.plane_rotation = broken
        try:
            code = main(["validate", "--suite", "metric", "--samples", "5", "--output", tmp])
        finally:
            unitaries.plane_rotation = original
        assert code == 1, f"A broken rotation should fail validation, got exit {code}"
        assert read_rows(Path(tmp) / "validation.csv")[0]["passed"] == "0"

    print("✅ PASS: Suites pass, a sign error is caught")


def test_validate_budget():
    """Test --budget reaches the integrating suites"""
    print("\nTest 8: validate --budget")

    with tempfile.TemporaryDirectory() as tmp:
        argv = ["validate", "--suite", "so4-proportionality", "--suite", "volume", "--suite", "metric",
                "--samples", "2", "--budget", "8000", "--output", tmp]
        assert main(argv) == 0, "Suites should pass at a custom budget"
        rows = {row["suite"]: row for row in read_rows(Path(tmp) / "validation.csv")}
        assert rows["so4-proportionality"]["budget"] == "8000"
        assert rows["volume"]["budget"] == "8000"
        assert rows["metric"]["budget"] == "", "Non-integrating suites carry no budget"

        low = ["validate", "--suite", "volume", "--samples", "1", "--budget", "500", "--output", tmp]
        assert main(low) == 2, "Budget below 1000 should exit 2"

    assert DEFAULT_BUDGETS[Suite.VOLUME] >= 32 ** 3, "Volume suite runs at order 32 or more"
    assert DEFAULT_BUDGETS[Suite.SO4_PROPORTIONALITY] >= 1_000_000
    assert DEFAULT_SAMPLES[Suite.SO4_PROPORTIONALITY] >= 10 and DEFAULT_SAMPLES[Suite.VOLUME] >= 50

    print("✅ PASS: Budget passed through and recorded, defaults at full size")


def run_all_tests():
    """Run all command line tests"""
    print("="*60)
    print("Running Command Line Tests")
    print("="*60)

    try:
        test_volume_command()
        test_monte_carlo_is_reproducible()
        test_exit_codes()
        test_matrix_file()
        test_metric_and_formats()
        test_coarse_grain_command()
        test_validate_command()
        test_validate_budget()

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
