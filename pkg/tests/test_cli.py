import json

from gwprune.cli import main
from gwprune.trees import Tree


def run(tmp_path, *argv):
    return main(["--out-dir", str(tmp_path), *argv])


class TestIgwCommand:
    def test_single_point(self, tmp_path):
        assert run(tmp_path, "igw", "--q0", "0.75") == 0
        doc = json.loads((tmp_path / "igw_constants.json").read_text())
        assert doc["c"] == 4.0
        assert abs(doc["a"] - 3 * (4 ** (1 / 3) - 1)) < 1e-12
        assert abs(doc["R"] - 4.0 ** (4 / 3)) < 1e-12
        pmf = (tmp_path / "igw_pmf.csv").read_text().splitlines()
        assert pmf[0] == "k,q_k"
        assert float(pmf[1].split(",")[1]) == 0.75
        tok = (tmp_path / "igw_tokunaga.csv").read_text().splitlines()
        assert tok[0] == "i,j,T,T_reg,t_total"

    def test_binary_point_row(self, tmp_path):
        assert run(tmp_path, "igw", "--q0", "0.5") == 0
        doc = json.loads((tmp_path / "igw_constants.json").read_text())
        assert (doc["a"], doc["c"], doc["R"]) == (1.0, 2.0, 4.0)

    def test_sweep(self, tmp_path):
        assert run(tmp_path, "igw", "--sweep", "0.5:0.99:0.01") == 0
        lines = (tmp_path / "igw_sweep.csv").read_text().splitlines()
        assert lines[0] == "q0,a,c,T1,R"
        assert len(lines) == 51
        first = [float(v) for v in lines[1].split(",")]
        assert first == [0.5, 1.0, 2.0, 1.0, 4.0]
        rs = [float(line.split(",")[4]) for line in lines[1:]]
        cs = [float(line.split(",")[2]) for line in lines[1:]]
        assert all(b > a for a, b in zip(rs, rs[1:]))  # R increases
        assert all(b > a for a, b in zip(cs, cs[1:]))  # c increases

    def test_bad_q0_is_usage_error(self, tmp_path):
        assert run(tmp_path, "igw", "--q0", "1.5") == 2


class TestConvergeCommand:
    def test_zipf_example(self, tmp_path):
        assert run(tmp_path, "converge", "--dist", "zipf-example",
                   "--steps", "60", "--tol", "5e-3") == 0
        doc = json.loads((tmp_path / "converge_summary.json").read_text())
        assert doc["status"] == "converged-to-igw"
        # the declared target tracks the slowly drifting q0 path; the true
        # attractor is the binary law at 0.5
        assert abs(doc["target_q"] - 0.5) < 0.05
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "step,q0,mean,sup_distance,status"

    def test_subcritical(self, tmp_path):
        assert run(tmp_path, "converge", "--dist", "finite:0.6,0,0.4",
                   "--steps", "60", "--tol", "1e-3") == 0
        doc = json.loads((tmp_path / "converge_summary.json").read_text())
        assert doc["status"] == "converged-to-point-mass"
        assert doc["final_q0"] > 0.999

    def test_igw_immediate(self, tmp_path):
        assert run(tmp_path, "converge", "--dist", "igw:0.9",
                   "--steps", "60", "--tol", "1e-3") == 0
        doc = json.loads((tmp_path / "converge_summary.json").read_text())
        assert doc["status"] == "converged-to-igw"
        assert doc["n_steps"] == 1 and abs(doc["target_q"] - 0.9) < 1e-12


class TestMcCommand:
    def test_small_run(self, tmp_path):
        assert run(tmp_path, "mc", "--dist", "binary", "--order", "3",
                   "--trees", "1500", "--seed", "3",
                   "--max-vertices", "300000") == 0
        doc = json.loads((tmp_path / "mc_summary.json").read_text())
        assert doc["n_accepted"] == 1500
        assert doc["censoring_rate"] < 5e-3
        lines = (tmp_path / "mc_estimates.csv").read_text().splitlines()
        assert lines[0] == "kind,i,j,estimate,se,n"
        t12 = next(line for line in lines if line.startswith("T,1,2"))
        assert abs(float(t12.split(",")[3]) - 1.0) < 0.2

    def test_conditioning_failure_exit_code(self, tmp_path):
        assert run(tmp_path, "mc", "--dist", "binary", "--order", "6",
                   "--trees", "100000", "--budget", "100000") == 4

    def test_determinism(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for sub in (a, b):
            sub.mkdir()
            assert main(["--out-dir", str(sub), "mc", "--dist", "binary",
                         "--order", "2", "--trees", "500", "--seed", "9"]) == 0
        assert (a / "mc_estimates.csv").read_text() == \
            (b / "mc_estimates.csv").read_text()


class TestOscillatoryCommand:
    def test_q0_08(self, tmp_path):
        assert run(tmp_path, "oscillatory", "--q0", "0.8",
                   "--m-max", "150") == 0
        doc = json.loads((tmp_path / "oscillatory_summary.json").read_text())
        assert 5.0 < doc["B"] < 25.0
        assert abs(doc["criticality_gap"]) <= 1e-10
        assert doc["invariance_residual"] <= 1e-8
        assert abs(doc["L_from_identity"] - doc["L_from_lattice"]) <= 1e-8
        rows = (tmp_path / "oscillatory_residual.csv").read_text().splitlines()
        assert rows[0] == "z,residual"
        assert all(float(r.split(",")[1]) <= 1e-8 for r in rows[1:])
        qm = (tmp_path / "oscillatory_qm.csv").read_text().splitlines()
        assert qm[0] == "m,q_igw,q_osc"
        assert len(qm) == 150  # m = 2..150

    def test_bad_q0(self, tmp_path):
        assert run(tmp_path, "oscillatory", "--q0", "0.5") == 2


class TestTreeCommands:
    def test_prune_round_trip(self, tmp_path):
        t = Tree((None, 0, 1, 1, 2, 2, 3, 3))
        src = tmp_path / "t.json"
        dst = tmp_path / "p.json"
        src.write_text(t.to_json())
        assert run(tmp_path, "prune-tree", "--in", str(src),
                   "--out", str(dst)) == 0
        pruned = Tree.from_json(dst.read_text())
        assert pruned == Tree((None, 0, 1, 1))

    def test_order_command(self, tmp_path, capsys):
        t = Tree((None, 0, 1, 1, 2, 2, 3, 3))
        src = tmp_path / "t.json"
        out = tmp_path / "stats.json"
        src.write_text(t.to_json())
        assert run(tmp_path, "order", "--in", str(src), "--out", str(out)) == 0
        assert capsys.readouterr().out.strip() == "3"
        doc = json.loads(out.read_text())
        assert doc["order"] == 3
        assert doc["N"] == [4, 2, 1]

    def test_missing_file_usage_error(self, tmp_path):
        assert run(tmp_path, "order", "--in", str(tmp_path / "nope.json")) == 2


class TestEnvironment:
    def test_out_dir_env_var(self, tmp_path, monkeypatch):
        sub = tmp_path / "from_env"
        monkeypatch.setenv("GWPRUNE_OUT_DIR", str(sub))
        assert main(["igw", "--q0", "0.6"]) == 0
        assert (sub / "igw_constants.json").exists()

    def test_summary_echoes_config_and_version(self, tmp_path):
        from gwprune import __version__
        assert run(tmp_path, "converge", "--dist", "igw:0.8",
                   "--steps", "10", "--tol", "1e-3") == 0
        doc = json.loads((tmp_path / "converge_summary.json").read_text())
        assert doc["version"] == __version__
        assert doc["config"]["dist"] == "igw:0.8"
