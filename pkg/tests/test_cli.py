import csv
import json
import math

import pytest

from bellsquash.cli import main, parse_range, UsageError


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# config: ")
    config = json.loads(lines[0][len("# config: "):])
    return config, list(csv.DictReader(lines[1:]))


def test_parse_range():
    assert parse_range("0.05:0.7:0.05") == [round(0.05 * k, 12) for k in range(1, 15)]
    assert parse_range("0.3") == [0.3]
    for bad in ("0.5:0.1:0.1", "0:1:0", "a:b:c", "1:2"):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_sweep_bell_csv(tmp_path):
    out = tmp_path / "bell.csv"
    script = tmp_path / "plot_bell.py"
    code = main([
        "sweep-bell", "--model", "onoff-naive", "--eta", "0.9", "--noise", "1e-6",
        "--tanh-chi", "0.1:0.3:0.1", "--out", str(out), "--plot-script", str(script),
    ])
    assert code == 0
    config, rows = read_csv(out)
    assert config["eta"] == 0.9 and config["model"] == "onoff-naive"
    assert list(rows[0]) == [
        "tanh_chi", "bell_max", "theta_a1", "theta_a2", "theta_b1", "theta_b2",
        "E11", "E12", "E22", "E21", "model",
    ]
    assert [float(r["tanh_chi"]) for r in rows] == pytest.approx([0.1, 0.2, 0.3])
    assert all(float(r["bell_max"]) > 2 * math.sqrt(2) for r in rows)
    compile(script.read_text(), str(script), "exec")


def test_sweep_is_byte_identical(tmp_path):
    args = ["sweep-bell", "--tanh-chi", "0.2:0.4:0.2", "--model", "pnr"]
    out = tmp_path / "a.csv"
    assert main(args + ["--out", str(out)]) == 0
    first = out.read_bytes()
    assert main(args + ["--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_worker_pool_matches_serial(tmp_path):
    args = ["sweep-bell", "--tanh-chi", "0.2:0.4:0.1", "--model", "onoff-squash"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    rows_a, rows_b = read_csv(a)[1], read_csv(b)[1]
    for ra, rb in zip(rows_a, rows_b):
        for key in ra:
            if key != "model":
                assert float(ra[key]) == pytest.approx(float(rb[key]), abs=1e-12)


def test_single_point_bell_limit(tmp_path):
    out = tmp_path / "x.csv"
    assert main(["sweep-bell", "--tanh-chi", "0.001", "--eta", "1", "--noise", "0", "--out", str(out)]) == 0
    (row,) = read_csv(out)[1]
    assert float(row["bell_max"]) == pytest.approx(2 * math.sqrt(2), abs=1e-4)


def test_squash_sweep_below_bound(tmp_path):
    out = tmp_path / "sq.csv"
    assert main(["sweep-bell", "--model", "onoff-squash", "--eta", "1", "--noise", "0",
                 "--tanh-chi", "0.1:0.7:0.3", "--out", str(out)]) == 0
    assert all(float(r["bell_max"]) <= 2 * math.sqrt(2) + 1e-9 for r in read_csv(out)[1])


def test_tomography_scan(tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["tomography-scan", "--eta", "0.6", "--noise", "1e-6", "--tanh-chi", "0.1:0.7:0.2"]
    assert main(common + ["--basis", "fig4a", "--out", str(out_a)]) == 0
    assert main(common + ["--basis", "fig4b", "--out", str(out_b), "--plot-script", str(tmp_path / "p.py")]) == 0
    rows_a, rows_b = read_csv(out_a)[1], read_csv(out_b)[1]
    assert list(rows_a[0]) == ["tanh_chi", "min_eigenvalue", "eig0", "eig1", "eig2", "eig3", "trace"]
    assert all(float(r["min_eigenvalue"]) >= -1e-9 for r in rows_a)
    assert any(float(r["min_eigenvalue"]) < 0 for r in rows_b)


def test_tomography_singlet_limit(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["tomography-scan", "--basis", "fig4a", "--eta", "1", "--noise", "0",
                 "--tanh-chi", "0.001", "--out", str(out)]) == 0
    (row,) = read_csv(out)[1]
    eig = [float(row[f"eig{k}"]) for k in range(4)]
    assert eig == pytest.approx([0, 0, 0, 1], abs=1e-4)


def test_basis_file(tmp_path):
    basis = tmp_path / "basis.json"
    basis.write_text(json.dumps({"a": [[0.7854, 0], [0.7854, 1.5708], [0, 0]],
                                 "b": [[0.3, 0], [0.1, 1.5], [0, 0]]}))
    assert main(["tomography-scan", "--basis", str(basis), "--tanh-chi", "0.3",
                 "--out", str(tmp_path / "o.csv")]) == 0
    degenerate = tmp_path / "deg.json"
    degenerate.write_text(json.dumps({"a": [[0.3, 0], [0.3, 0], [0, 0]], "b": [[0.3, 0], [0.1, 1.5], [0, 0]]}))
    assert main(["tomography-scan", "--basis", str(degenerate), "--tanh-chi", "0.3"]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eta": 1.0, "noise": 0.0, "model": "onoff-squash", "tanh_chi": "0.5"}))
    out = tmp_path / "o.csv"
    assert main(["--config", str(cfg), "optimize-bell", "--out", str(out)]) == 0
    config, (row,) = read_csv(out)
    assert config["model"] == "onoff-squash" and config["eta"] == 1.0
    assert main(["--config", str(cfg), "optimize-bell", "--model", "onoff-naive", "--out", str(out)]) == 0
    config, (row,) = read_csv(out)
    assert config["model"] == "onoff-naive"
    assert float(row["bell_max"]) == pytest.approx(4 * math.cos(math.pi / 4) / 0.9375, abs=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep-bell", "--eta", "1.5"],
        ["sweep-bell", "--tanh-chi", "0.7:0.1:0.1"],
        ["sweep-bell", "--tanh-chi", "1.2"],
        ["sweep-bell", "--cutoff", "many"],
        ["sweep-bell", "--workers", "0"],
        ["sweep-bell", "--model", "bogus"],
        ["optimize-bell", "--tanh-chi", "0.1:0.3:0.1"],
        ["validate", "--tanh-chi", "0.5:0.1:0.1"],
        ["tomography-scan", "--basis", "/nonexistent.json"],
        ["nonsense"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 1


def test_no_coincidence_exit(capsys):
    assert main(["optimize-bell", "--tanh-chi", "0", "--noise", "0"]) == 2
    assert main(["sweep-bell", "--tanh-chi", "0", "--noise", "0"]) == 2


def test_validate(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["validate", "--tanh-chi", "0.1:0.7:0.3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "on-off probability (corrected)" in text and "PASS" in text
    assert "small tanh_chi divergence" in text
    config, rows = read_csv(out)
    forms = {r["form"] for r in rows}
    assert forms == {"onoff-corrected", "onoff-printed", "squash-correlation"}


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "bellsquash", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "sweep-bell" in res.stdout
