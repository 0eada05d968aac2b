import os

import pytest

from refstrat.cli import main, parse_int_list, read_config
from refstrat.samplers import set_from_csv
from refstrat.strata import loads, validate


def read(path):
    with open(path) as fh:
        return fh.read()


def test_parse_helpers(tmp_path):
    assert parse_int_list("2,5,7-9") == [2, 5, 7, 8, 9]
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nmax-samples = 500\nmodel=cubic-B  # inline\n")
    assert read_config(str(cfg)) == {"max_samples": "500", "model": "cubic-B"}


def test_sample_and_extend(tmp_path):
    s, d = str(tmp_path / "s.csv"), str(tmp_path / "d.txt")
    assert main(["sample", "--generator", "RSS", "--marginals", "N(0,1);U(0,2)", "-N", "8",
                 "--seed", "3", "--out", s, "--design-out", d]) == 0
    e, d2 = str(tmp_path / "e.csv"), str(tmp_path / "d2.txt")
    assert main(["extend", "--input", s, "--design", d, "-k", "5", "--seed", "3",
                 "--out", e, "--design-out", d2]) == 0
    out = set_from_csv(read(e), loads(read(d2)))
    assert len(out) == 13 and out.weight_sum() == 1
    assert validate(out.design).ok


def test_extend_hlhs(tmp_path):
    s, e = str(tmp_path / "s.csv"), str(tmp_path / "e.csv")
    main(["sample", "--generator", "LHS", "-N", "5", "--seed", "1", "--out", s])
    assert main(["extend", "--input", s, "--method", "HLHS", "-t", "2", "--out", e]) == 0
    assert len(set_from_csv(read(e))) == 15


def test_extend_errors(tmp_path):
    s = str(tmp_path / "s.csv")
    main(["sample", "--generator", "SRS", "-N", "5", "--seed", "1", "--out", s])
    with pytest.raises(SystemExit):
        main(["extend", "--input", s, "--method", "RSS"])
    assert main(["extend", "--input", s, "--method", "HLHS", "--out",
                 str(tmp_path / "x.csv")]) == 2


def test_metrics(tmp_path, capsys):
    out = str(tmp_path / "m.csv")
    assert main(["metrics", "--generators", "SRS,SBSS", "-N", "16", "--seeds", "0-1",
                 "--n-probe", "1000", "--out", out]) == 0
    assert len(read(out).strip().splitlines()) == 5
    s = str(tmp_path / "s.csv")
    main(["sample", "-N", "9", "--seed", "2", "--out", s])
    assert main(["metrics", s, "--n-probe", "500"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("SRS,9,2,")


def test_optimize_z(tmp_path, capsys):
    sweep = str(tmp_path / "sweep.csv")
    assert main(["optimize-z", "--dist", "N(0,1)", "--sweep-out", sweep, "--points", "11"]) == 0
    text = capsys.readouterr().out
    assert "z_star=0.632" in text
    assert len(read(sweep).splitlines()) == 12


def test_run_writes_outputs(tmp_path, capsys):
    out = str(tmp_path / "run")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model = cubic-E\nreplicates = 3\nthreshold = 0.05\n")
    assert main(["run", "--config", str(cfg), "--seed", "1", "--out-dir", out,
                 "--figures"]) == 0
    assert capsys.readouterr().out.startswith("q10=")
    for name in ("iterations.csv", "convergence.csv", "plot-data/converged_share.csv",
                 "figures/converged_share.png"):
        assert os.path.exists(os.path.join(out, name))
    assert len(read(os.path.join(out, "convergence.csv")).splitlines()) == 4


def test_run_requires_seed_and_valid_generator(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--out-dir", str(tmp_path)])
    assert main(["run", "--seed", "1", "--generator", "LHS", "--out-dir", str(tmp_path)]) == 2


def test_flags_override_config(tmp_path):
    out = str(tmp_path / "run")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model = cubic-E\nreplicates = 5\nthreshold = 0.05\n")
    main(["run", "--config", str(cfg), "--replicates", "2", "--seed", "1", "--out-dir", out])
    assert len(read(os.path.join(out, "convergence.csv")).splitlines()) == 3


@pytest.mark.parametrize("study,args,files", [
    ("cubic", ["--dists", "E", "--replicates", "2", "--threshold", "0.05"],
     ["cubic_convergence.csv", "plot-data/samples_vs_kurtosis.csv",
      "plot-data/reduction_vs_kurtosis.csv"]),
    ("addmult", ["--dims", "2", "--replicates", "5", "-N", "16"], ["projective.csv"]),
    ("spacefill", ["--replicates", "2", "-N", "16", "--n-probe", "1000"],
     ["spacefill.csv", "plot-data/wd2_vs_dimension.csv"]),
    ("twodof", ["--replicates", "1", "--threshold", "0.2", "--max-samples", "60"],
     ["twodof.csv"]),
])
def test_bench_presets(tmp_path, study, args, files):
    out = str(tmp_path / study)
    assert main(["bench", study, "--seed", "0", "--out-dir", out] + args) == 0
    for f in files:
        assert os.path.exists(os.path.join(out, f))
