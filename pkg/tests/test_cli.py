import json

import numpy as np
import pytest

from qdct.cli import main
from qdct.images import read_pgm, write_pgm

from conftest import WALKTHROUGH_VECTOR, smooth_image


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def vector_file(tmp_path):
    p = tmp_path / "vec.txt"
    p.write_text(" ".join(str(int(v)) for v in WALKTHROUGH_VECTOR) + "\n")
    return p


@pytest.fixture
def image_file(tmp_path):
    p = tmp_path / "img.pgm"
    p.write_bytes(write_pgm(smooth_image(32, seed=2)))
    return p


class TestDctCommand:
    def test_forward_then_inverse_round_trip(self, tmp_path, vector_file):
        coeffs = tmp_path / "coeffs.txt"
        back = tmp_path / "back.txt"
        assert run("dct", vector_file, "--out", coeffs) == 0
        first = float(coeffs.read_text().split()[0])
        assert first**2 == pytest.approx(1.9814e5, rel=1e-3)
        assert run("dct", coeffs, "--inverse", "--out", back) == 0
        values = [float(t) for t in back.read_text().split()]
        assert np.abs(np.asarray(values) - WALKTHROUGH_VECTOR).max() <= 1e-9

    def test_two_d_round_trip(self, tmp_path):
        src = tmp_path / "mat.txt"
        rng = np.random.default_rng(0)
        m = rng.integers(0, 256, size=(8, 8))
        src.write_text("\n".join(" ".join(str(v) for v in row) for row in m))
        coeffs = tmp_path / "c.txt"
        back = tmp_path / "b.txt"
        assert run("dct", src, "--two-d", "--out", coeffs) == 0
        assert run("dct", coeffs, "--two-d", "--inverse", "--out", back) == 0
        values = np.loadtxt(back)
        assert np.abs(values - m).max() <= 1e-9

    def test_parse_error_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2 3\n4 oops 6\n")
        assert run("dct", bad) == 3
        err = capsys.readouterr().err
        assert "line 2" in err and "column 3" in err

    def test_empty_file_is_usage_error(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("\n")
        assert run("dct", empty) == 2

    def test_missing_file_is_io_error(self, tmp_path):
        assert run("dct", tmp_path / "nope.txt") == 6


class TestDemoCommand:
    def test_default_seed_verifies(self, tmp_path):
        out = tmp_path / "demo.txt"
        assert run("demo-example", "--verify", "--out", out) == 0
        text = out.read_text()
        assert "verify=pass" in text
        assert "walkthrough_order=true" in text
        assert "delta_e=11 " in text

    def test_seed_one_verifies(self, capsys):
        assert run("demo-example", "--verify", "--seed", 1) == 0
        text = capsys.readouterr().out
        assert "verify=pass" in text
        assert "check=delta_e_after_first expected=11 actual=11 status=pass" in text

    def test_huge_epsilon_keeps_nothing(self, capsys):
        assert run("demo-example", "--epsilon", "1.0") == 0
        text = capsys.readouterr().out
        assert "accepted_count=1" in text

    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        run("demo-example", "--verify", "--seed", 9, "--out", a, "--no-figure")
        run("demo-example", "--verify", "--seed", 9, "--out", b, "--no-figure")
        assert a.read_bytes() == b.read_bytes()

    def test_figure_written_alongside(self, tmp_path):
        out = tmp_path / "demo.txt"
        assert run("demo-example", "--out", out) == 0
        fig = tmp_path / "demo.png"
        assert fig.exists() and fig.stat().st_size > 0


class TestCompressCommands:
    def test_lossless_topk_round_trip(self, tmp_path, image_file):
        container = tmp_path / "img.qc"
        recon = tmp_path / "recon.pgm"
        assert run("compress", image_file, "--out", container, "--mode", "topk:64",
                   "--stats-out", tmp_path / "stats.txt", "--no-figure") == 0
        assert run("decompress", container, "--out", recon,
                   "--original", image_file, "--stats-out", tmp_path / "d.txt") == 0
        assert recon.read_bytes() == image_file.read_bytes()
        assert "psnr=inf" in (tmp_path / "d.txt").read_text()

    def test_constant_quantum_stats(self, tmp_path):
        img = tmp_path / "const.pgm"
        img.write_bytes(write_pgm(np.full((16, 16), 180, dtype=np.uint8)))
        container = tmp_path / "c.qc"
        stats = tmp_path / "stats.txt"
        assert run("compress", img, "--out", container, "--mode", "quantum-sim",
                   "--seed", 4, "--stats-out", stats) == 0
        text = stats.read_text()
        assert "psnr=inf" in text
        assert "coefficients_kept=4" in text  # one per 8x8 block
        assert (tmp_path / "stats.png").exists()

    def test_seeded_reruns_and_parallel_identical(self, tmp_path, image_file):
        outs = []
        for name, jobs in (("a.qc", 1), ("b.qc", 1), ("c.qc", 4)):
            path = tmp_path / name
            assert run("compress", image_file, "--out", path, "--mode", "quantum-sim",
                       "--seed", 11, "--jobs", jobs,
                       "--stats-out", tmp_path / (name + ".txt"), "--no-figure") == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] == outs[2]
        assert (tmp_path / "a.qc.txt").read_bytes() == (tmp_path / "b.qc.txt").read_bytes()
        assert (tmp_path / "a.qc.txt").read_bytes() == (tmp_path / "c.qc.txt").read_bytes()

    def test_bad_mode_is_usage_error(self, tmp_path, image_file):
        with pytest.raises(SystemExit) as exc:
            run("compress", image_file, "--out", tmp_path / "x.qc", "--mode", "bogus")
        assert exc.value.code == 2

    def test_corrupt_container_is_parse_error(self, tmp_path):
        bad = tmp_path / "bad.qc"
        bad.write_bytes(b"hello\n")
        assert run("decompress", bad, "--out", tmp_path / "y.pgm") == 3

    def test_bad_pgm_is_parse_error(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        assert run("compress", bad, "--out", tmp_path / "z.qc") == 3

    def test_manifest_lists_outputs(self, tmp_path, image_file):
        container = tmp_path / "m.qc"
        manifest = tmp_path / "manifest.json"
        assert run("compress", image_file, "--out", container, "--mode", "topk:8",
                   "--stats-out", tmp_path / "s.txt", "--no-figure",
                   "--manifest", manifest) == 0
        doc = json.loads(manifest.read_text())
        assert doc["command"] == "compress"
        paths = [o["path"] for o in doc["outputs"]]
        assert str(container) in paths and str(tmp_path / "s.txt") in paths
        assert all(len(o["sha256"]) == 64 for o in doc["outputs"])


class TestBenchCommand:
    def test_small_bench_runs_and_is_deterministic(self, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        for out in (a, b):
            assert run("bench-scaling", "--sizes", "16,64,256", "--trials", 40,
                       "--seed", 3, "--out", out, "--no-figure") == 0
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text()
        assert "exponent=" in text and "claimed_exponent=0.5" in text

    def test_single_size_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("bench-scaling", "--sizes", "64")
        assert exc.value.code == 2

    def test_figure_written(self, tmp_path):
        out = tmp_path / "bench.txt"
        assert run("bench-scaling", "--sizes", "16,64,256", "--trials", 10,
                   "--seed", 1, "--out", out) == 0
        assert (tmp_path / "bench.png").exists()

    def test_two_d_bench(self, tmp_path):
        out = tmp_path / "b2.txt"
        assert run("bench-scaling", "--sizes", "4,8,16", "--trials", 30,
                   "--seed", 2, "--two-d", "--out", out, "--no-figure") == 0
        assert "claimed_exponent=1" in out.read_text()


class TestHelp:
    def test_exit_codes_documented(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("--help")
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "exit codes" in text
        for code in ("2 ", "3 ", "4 ", "5 ", "6 "):
            assert code in text
