import json

import pytest

from cli.commands import run
from cli.config import VERSION, read_config_file
from cli.reports import read_csv
from conftest import DNA, forward_feasible, toy_cohort
from hapdata.formats import HAP, read_matrix, write_matrix_file

ALPHABET = ",".join(DNA)


@pytest.fixture
def cohort_file(tmp_path):
    path = tmp_path / "cohort.hap"
    write_matrix_file(toy_cohort(), path, HAP)
    return path


def jsonl(text: str) -> list:
    return [json.loads(line) for line in text.splitlines() if line]


def test_gen_writes_records_and_provenance(cohort_file, tmp_path):
    out = tmp_path / "synth.hap"
    code = run(["gen", "-i", str(cohort_file), "-o", str(out), "--n", "2", "--count", "3", "--alphabet", ALPHABET,
                "--threads", "1", "--seed", "4"])
    assert code == 0
    synth = read_matrix(out, alphabet=DNA)
    assert synth.n_samples == 3
    assert synth.sample_ids == ("synth0", "synth1", "synth2")

    lines = jsonl((tmp_path / "synth.hap.provenance.jsonl").read_text())
    assert lines[0]["header"]["version"] == VERSION
    assert lines[0]["header"]["config"]["subcommand"] == "gen"
    toy = toy_cohort()
    for i, line in enumerate(lines[1:]):
        members = [toy.sample_ids.index(s) for s in line["members"]]
        assert forward_feasible(synth.column(i), toy, members)


def test_gen_is_reproducible(cohort_file, tmp_path):
    outputs = []
    for name in ("a.hap", "b.hap"):
        out = tmp_path / name
        assert run(["gen", "-i", str(cohort_file), "-o", str(out), "--n", "3", "--count", "2", "--z", "0.5",
                    "--retry", "3", "--threads", "1"]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_gen_markov(cohort_file, tmp_path):
    out = tmp_path / "markov.hap"
    assert run(["gen", "-i", str(cohort_file), "-o", str(out), "--method", "markov", "--count", "4",
                "--window", "2"]) == 0
    assert read_matrix(out).n_samples == 4


def test_gen_vcf_needs_even_count(cohort_file, tmp_path, capsys):
    out = tmp_path / "synth.vcf"
    assert run(["gen", "-i", str(cohort_file), "-o", str(out), "--n", "2", "--count", "3", "--threads", "1"]) == 1
    assert "satgen: error:" in capsys.readouterr().err
    assert run(["gen", "-i", str(cohort_file), "-o", str(out), "--n", "2", "--count", "2", "--threads", "1"]) == 0
    assert read_matrix(out).sample_ids == ("synth0_0", "synth0_1")


def test_dump_cnf(cohort_file, tmp_path):
    cnf = tmp_path / "f.cnf"
    assert run(["gen", "-i", str(cohort_file), "-o", str(tmp_path / "s.hap"), "--n", "2", "--count", "2",
                "--threads", "1", "--dump-cnf", str(cnf)]) == 0
    assert (tmp_path / "f.0.cnf").read_text().startswith("p cnf ")
    assert (tmp_path / "f.1.cnf").exists()


@pytest.mark.parametrize("argv", [
    ["gen", "--n", "2"],
    ["gen", "-i", "x.hap", "-o", "y.hap", "--n", "0"],
    ["gen", "-i", "x.hap", "-o", "y.hap", "--z", "-1"],
    ["gen", "-i", "x.hap", "-o", "y.hap", "--threads", "0"],
    ["frobnicate"],
    ["audit"],
])
def test_usage_errors_exit_two(argv):
    assert run(argv) == 2


def test_missing_input_is_a_domain_error(tmp_path, capsys):
    assert run(["convert", "-i", str(tmp_path / "nope.hap"), "-o", str(tmp_path / "x.hap")]) == 1
    assert "satgen: error:" in capsys.readouterr().err


def test_infeasible_n_is_a_domain_error(cohort_file, tmp_path):
    assert run(["gen", "-i", str(cohort_file), "-o", str(tmp_path / "s.hap"), "--n", "9"]) == 1


def test_config_file(cohort_file, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(f"# generation\ninput = {cohort_file}\nn = 2\ncount = 2\nthreads = 1\n")
    assert read_config_file(config)["n"] == "2"
    out = tmp_path / "s.hap"
    assert run(["gen", "--config", str(config), "-o", str(out)]) == 0
    header = jsonl((tmp_path / "s.hap.provenance.jsonl").read_text())[0]["header"]
    assert header["config"]["n"] == 2
    assert header["config"]["count"] == 2

    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    assert run(["gen", "--config", str(bad), "-i", str(cohort_file), "-o", str(out)]) == 2
    bad.write_text("n = zero\n")
    assert run(["gen", "--config", str(bad), "-i", str(cohort_file), "-o", str(out)]) == 2


def test_flags_override_config(cohort_file, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("count = 5\n")
    out = tmp_path / "s.hap"
    assert run(["gen", "--config", str(config), "-i", str(cohort_file), "-o", str(out), "--count", "1",
                "--n", "2"]) == 0
    assert read_matrix(out).n_samples == 1


def test_convert(cohort_file, tmp_path):
    out = tmp_path / "copy.hap"
    assert run(["convert", "-i", str(cohort_file), "-o", str(out)]) == 0
    assert out.read_bytes() == cohort_file.read_bytes()
    assert run(["convert", "-i", str(cohort_file), "-o", str(tmp_path / "odd.vcf")]) == 1


def test_reverse_reports(cohort_file, tmp_path, capsys):
    synth = tmp_path / "synth.hap"
    write_matrix_file(toy_cohort().subset([0]), synth, HAP)
    table = tmp_path / "freq.csv"
    code = run(["reverse", "-i", str(cohort_file), "--synth", str(synth), "--n", "2", "--trials", "4",
                "--threads", "1", "--alphabet", ALPHABET, "--posterior", "s0", "--csv", str(table)])
    assert code == 0
    lines = jsonl(capsys.readouterr().out)
    assert lines[0]["header"]["config"]["subcommand"] == "reverse"
    record = lines[1]
    assert record["record"] == "s0"
    assert record["iterations"] == 4
    assert all(len(s) == 2 for s in record["sets"])
    assert 0.0 <= record["posterior"]["posterior"] <= 1.0
    frame = read_csv(table)
    assert list(frame.columns) == ["record", "sample", "frequency", "exposed"]
    assert len(frame) == 5


def test_eval_commands(cohort_file, capsys):
    base = ["--real", str(cohort_file), "--synth", str(cohort_file), "--alphabet", ALPHABET]
    assert run(["eval", "freq"] + base) == 0
    assert jsonl(capsys.readouterr().out)[1]["correlation"] == pytest.approx(1.0)
    assert run(["eval", "ld"] + base) == 0
    assert jsonl(capsys.readouterr().out)[1]["binned_error"] == 0.0
    assert run(["eval", "wasserstein", "--projections", "5"] + base) == 0
    assert jsonl(capsys.readouterr().out)[1]["distance"] == pytest.approx(0.0, abs=1e-9)
    assert run(["eval", "pca", "-k", "2"] + base) == 0
    assert len(jsonl(capsys.readouterr().out)[1]["explained_variance"]) == 2


def test_eval_pca_table(cohort_file, tmp_path):
    table = tmp_path / "pca.csv"
    assert run(["eval", "pca", "--real", str(cohort_file), "--synth", str(cohort_file), "--csv", str(table)]) == 0
    frame = read_csv(table)
    assert list(frame["group"]) == ["real"] * 5 + ["synth"] * 5


def test_audit_commands(cohort_file, tmp_path, capsys):
    assert run(["audit", "attr", "-i", str(cohort_file), "--method", "markov", "--window", "1", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# ")
    sweep = read_csv(_write(tmp_path / "sweep.csv", out))
    assert list(sweep["option1"]) == [1, 2]

    assert run(["audit", "ktuple", "-i", str(cohort_file), "--synth", str(cohort_file), "-k", "2",
                "--tuples", "3"]) == 0
    line = jsonl(capsys.readouterr().out)[1]
    assert line["private_rate"] == 1.0 and line["fictitious_rate"] == 0.0

    assert run(["audit", "posterior", "-i", str(cohort_file), "--synth", str(cohort_file), "--n", "2",
                "--target", "s0", "1"]) == 0
    lines = jsonl(capsys.readouterr().out)
    assert [line["sample"] for line in lines[1:]] == ["s0", "s1"]

    assert run(["audit", "exposure", "-i", str(cohort_file), "--n", "2", "--repetitions", "2", "--trials", "2",
                "--threads", "1"]) == 0
    assert jsonl(capsys.readouterr().out)[1]["total"] == 4


def test_bench(tmp_path):
    table = tmp_path / "bench.csv"
    assert run(["bench", "--sites", "8", "16", "--samples", "6", "--n", "3", "--csv", str(table)]) == 0
    frame = read_csv(table)
    assert list(frame["sites"]) == [8, 16]
    assert list(frame["status"]) == ["ok", "ok"]


def test_version(capsys):
    assert run(["--version"]) == 0
    assert VERSION in capsys.readouterr().out


def _write(path, text):
    path.write_text(text)
    return path
