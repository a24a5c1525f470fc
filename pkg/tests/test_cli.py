"""File schemas, generators, CLI commands, determinism, error categories."""

import json
import os

import numpy as np
import pytest

from wasscurve import cli, dataio
from wasscurve.dataio import SchemaError


def write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


class TestSchemas:
    def test_sample_schema_round_trip(self, tmp_path):
        p = tmp_path / "s.csv"
        rows = [(0.0, 0.1), (0.0, 0.9), (1.0, 0.4), (1.0, 0.6)]
        dataio.write_sample_csv(str(p), rows)
        schema, parsed = dataio.read_snapshot_rows(str(p))
        assert schema == "samples"
        assert len(parsed) == 4
        assert parsed[0][1] == 1.0  # unit weight per particle

    def test_atom_schema_parses_weights(self, tmp_path):
        p = tmp_path / "a.csv"
        write(p, "t,weight,x1\n0,0.25,0.0\n0,0.75,1.0\n")
        schema, parsed = dataio.read_snapshot_rows(str(p))
        assert schema == "atoms"
        assert parsed[0][1] == 0.25

    def test_malformed_row_reports_line_number(self, tmp_path):
        p = tmp_path / "bad.csv"
        write(p, "t,x1\n0,0.5\n1,oops\n")
        with pytest.raises(SchemaError, match=":3"):
            dataio.read_snapshot_rows(str(p))

    def test_wrong_header_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        write(p, "time,x\n0,0.5\n")
        with pytest.raises(SchemaError, match="header"):
            dataio.read_snapshot_rows(str(p))

    def test_atom_weights_must_sum_to_one(self, tmp_path):
        p = tmp_path / "a.csv"
        write(p, "t,weight,x1\n0,0.5,0.0\n0,0.3,1.0\n")
        with pytest.raises(SchemaError, match="sum to"):
            dataio.load_snapshots(str(p))

    def test_three_dirac_atom_file(self, tmp_path):
        p = tmp_path / "a.csv"
        write(p, "t,weight,x1\n0,1,0.0\n0.5,1,0.7\n1,1,0.2\n")
        ds = dataio.load_snapshots(str(p))
        assert len(ds) == 3
        for m in ds.measures:
            assert m.weights.max() == pytest.approx(1.0)

    def test_single_timestamp_file_loads(self, tmp_path):
        p = tmp_path / "one.csv"
        write(p, "t,x1\n0.5,0.1\n0.5,0.9\n")
        ds = dataio.load_snapshots(str(p))
        assert len(ds) == 1

    def test_lambda_file(self, tmp_path):
        p = tmp_path / "lam.csv"
        write(p, "t,lambda\n0,0.5\n1,0.5\n")
        lam = dataio.load_lambda_file(str(p))
        assert lam == {0.0: 0.5, 1.0: 0.5}


class TestGenerators:
    def test_ou_rows_match_variance_law(self):
        rows = dataio.generate_ou_rows(n_times=20, n_samples=2000, seed=0)
        by_t = {}
        for t, x in rows:
            by_t.setdefault(t, []).append(x)
        assert len(by_t) == 20
        for t, xs in by_t.items():
            target = 2.0 * (1.0 - np.exp(-2.0 * t))
            assert np.var(xs) == pytest.approx(target, rel=0.15)

    def test_logistic_rows_deterministic(self):
        a = dataio.generate_logistic_rows(r=4.0, n_snapshots=3, n_particles=50, seed=5)
        b = dataio.generate_logistic_rows(r=4.0, n_snapshots=3, n_particles=50, seed=5)
        assert a == b

    def test_mixture_toy_schema(self):
        doc = dataio.generate_mixture_toy()
        assert len(doc["basis"]) == 4
        assert len(doc["snapshots"]) == 4
        for s in doc["snapshots"]:
            assert sum(s["weights"]) == pytest.approx(1.0)

    def test_full_ou_file_loads_as_twenty_snapshots(self, tmp_path):
        p = tmp_path / "ou.csv"
        dataio.write_sample_csv(str(p), dataio.generate_ou_rows())  # 20 x 1000 default
        ds = dataio.load_snapshots(str(p), grid_points=40)
        assert len(ds) == 20
        assert ds.horizon == 1.0
        assert len(ds.grid) == 40


class TestRunRegress:
    def make_input(self, tmp_path):
        p = tmp_path / "in.csv"
        rows = dataio.generate_logistic_rows(r=3.0, n_snapshots=4, n_particles=400, seed=0)
        dataio.write_sample_csv(str(p), rows)
        return p

    def test_regress_writes_deterministic_outputs(self, tmp_path):
        src = self.make_input(tmp_path)
        out = tmp_path / "out"
        cfg = cli.RunConfig(
            command="regress",
            input=str(src),
            output=str(out),
            epsilon=0.05,
            grids={"data": (0.0, 1.0, 12)},
            query_times=(0.0, 0.5, 1.0),
        )
        outs = []
        for _ in range(2):  # identical config and seed: byte-identical files
            cli.run(cfg)
            outs.append((out / "result.json").read_bytes())
        assert outs[0] == outs[1]
        doc = json.loads(outs[0])
        assert doc["objectives"]["surrogate"] >= 0
        assert doc["coupling"]["emitted_mass"] >= 0.999
        assert os.path.exists(out / "marginal_t0.5.csv")

    def test_round_trip_objectives_bit_exact(self, tmp_path):
        src = self.make_input(tmp_path)
        out = tmp_path / "o"
        cfg = cli.RunConfig(
            command="regress", input=str(src), output=str(out),
            epsilon=0.05, grids={"data": (0.0, 1.0, 10)},
        )
        bundle = cli.run(cfg)
        doc = json.loads((out / "result.json").read_text())
        assert doc["objectives"]["surrogate"] == bundle.objectives["surrogate"]

    def test_quadratic_nested_beats_linear(self, tmp_path):
        src = self.make_input(tmp_path)
        eps = 0.01
        grid_pts = 8
        lin = cli.run(cli.RunConfig(
            command="regress", input=str(src), curve="linear", epsilon=eps,
            grids={"data": (0.0, 1.0, grid_pts)},
        ))
        centers = np.linspace(0, 1, grid_pts)
        diffs = np.unique(np.round(centers[None, :] - centers[:, None], 12))
        quad = cli.run(cli.RunConfig(
            command="regress", input=str(src), curve="quadratic", epsilon=eps,
            grids={
                "data": (0.0, 1.0, grid_pts),
                "x1": (float(diffs.min()), float(diffs.max()), len(diffs)),
                "x2": (0.0, 0.5, 2),  # contains the embedding value 0
            },
        ))
        n_lin = grid_pts * grid_pts
        n_quad = grid_pts * len(diffs) * 2
        slack = eps * np.log(n_quad / n_lin)
        assert quad.objectives["surrogate"] <= lin.objectives["surrogate"] + slack + 1e-9


class TestRunDistance:
    def test_identical_atom_files_zero(self, tmp_path):
        p = tmp_path / "a.csv"
        write(p, "t,weight,x1\n0,0.5,0.0\n0,0.5,1.0\n")
        bundle = cli.run(cli.RunConfig(command="distance", input=str(p), input_b=str(p)))
        assert bundle.objectives["w2_squared"] == pytest.approx(0.0, abs=1e-12)

    def test_dirac_pair(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write(a, "t,weight,x1\n0,1,0.0\n")
        write(b, "t,weight,x1\n0,1,3.0\n")
        bundle = cli.run(cli.RunConfig(command="distance", input=str(a), input_b=str(b)))
        assert bundle.objectives["w2_squared"] == pytest.approx(9.0, abs=1e-12)

    def test_multi_timestamp_rejected(self, tmp_path):
        p = tmp_path / "m.csv"
        write(p, "t,weight,x1\n0,1,0.0\n1,1,1.0\n")
        with pytest.raises(ValueError, match="one timestamp"):
            cli.run(cli.RunConfig(command="distance", input=str(p), input_b=str(p)))


class TestRunGaussianAndGmm:
    def test_gaussian_on_generated_ou(self, tmp_path):
        src = tmp_path / "ou.csv"
        dataio.write_sample_csv(str(src), dataio.generate_ou_rows(n_times=8, n_samples=400, seed=1))
        bundle = cli.run(cli.RunConfig(command="gaussian", input=str(src), curve="linear"))
        assert "sdp_linear" in bundle.objectives
        assert "geodesic_1d" in bundle.objectives
        assert bundle.objectives["sdp_linear"] <= bundle.objectives["geodesic_1d"] + 1e-6

    def test_gaussian_quadratic_via_main(self, tmp_path, capsys):
        src = tmp_path / "ou.csv"
        dataio.write_sample_csv(str(src), dataio.generate_ou_rows(n_times=10, n_samples=300, seed=2))
        rc = cli.main(["gaussian", "--input", str(src), "--curve", "quadratic"])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert summary["objectives"]["sdp_quadratic"] <= summary["objectives"]["geodesic_1d"]

    def test_gmm_toy_runs_and_meets_constraints(self, tmp_path):
        src = tmp_path / "mix.json"
        dataio.write_json(str(src), dataio.generate_mixture_toy())
        bundle = cli.run(cli.RunConfig(
            command="gmm", input=str(src), epsilon=0.05, max_iter=30000, query_times=(0.0, 0.5, 1.0),
        ))
        assert bundle.diagnostics["marginal_residual"] <= 1e-8
        assert len(bundle.marginals) == 3
        comp_mass = sum(c["weight"] for c in bundle.marginals[1]["components"])
        assert comp_mass == pytest.approx(1.0, abs=1e-9)


class TestRunInvariant:
    def test_r3_defaults_peak_near_fixed_point(self, tmp_path):
        src = tmp_path / "log.csv"
        dataio.write_sample_csv(str(src), dataio.generate_logistic_rows(r=3.0, n_snapshots=6, n_particles=1000, seed=0))
        out = tmp_path / "out"
        bundle = cli.run(cli.RunConfig(command="invariant", input=str(src), output=str(out), epsilon=0.05))
        weights = np.asarray(bundle.marginals[0]["weights"])
        centers = np.asarray([p[0] for p in bundle.marginals[0]["points"]])
        assert abs(centers[int(np.argmax(weights))] - 2.0 / 3.0) <= 0.05

    def test_invariant_writes_stationary_csv(self, tmp_path):
        src = tmp_path / "log.csv"
        dataio.write_sample_csv(str(src), dataio.generate_logistic_rows(r=3.0, n_snapshots=4, n_particles=300, seed=0))
        out = tmp_path / "out"
        bundle = cli.run(cli.RunConfig(
            command="invariant", input=str(src), output=str(out),
            boxes=30, epsilon=0.02, domain=(0.0, 1.0),
        ))
        assert (out / "stationary.csv").exists()
        header = (out / "stationary.csv").read_text().splitlines()[0]
        assert header == "center,mass,arcsine_mass"
        total = sum(bundle.marginals[0]["weights"])
        assert total == pytest.approx(1.0, abs=1e-9)


class TestMainEntry:
    def test_generate_and_regress_end_to_end(self, tmp_path, capsys):
        src = tmp_path / "in.csv"
        rc = cli.main([
            "generate", "logistic", "--output", str(src),
            "--snapshots", "4", "--particles", "200", "--seed", "0",
        ])
        assert rc == 0
        out = tmp_path / "res"
        rc = cli.main([
            "regress", "--input", str(src), "--epsilon", "0.05",
            "--grid", "0:1:10", "--query-times", "0,1", "--output", str(out),
        ])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert summary["command"] == "regress"

    def test_io_error_category(self, tmp_path, capsys):
        rc = cli.main(["regress", "--input", str(tmp_path / "missing.csv")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"]["category"] == "io"

    def test_schema_error_category(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        write(p, "nope\n1\n")
        rc = cli.main(["regress", "--input", str(p)])
        assert rc == 3
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"]["category"] == "schema"

    def test_precondition_error_category(self, tmp_path, capsys):
        p = tmp_path / "two.csv"
        write(p, "t,x1\n0,0.1\n1,0.9\n")
        rc = cli.main(["regress", "--input", str(p), "--grid", "0:1:8"])
        assert rc == 4
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"]["category"] == "precondition"

    def test_bad_grid_spec_rejected(self, capsys):
        rc = cli.main(["regress", "--input", "x.csv", "--grid", "q=0:1:5"])
        assert rc == 4

    def test_config_echo_materializes_defaults(self, tmp_path):
        p = tmp_path / "a.csv"
        write(p, "t,weight,x1\n0,1,0.0\n")
        bundle = cli.run(cli.RunConfig(command="distance", input=str(p), input_b=str(p)))
        echo = bundle.config_echo
        assert echo["epsilon"] == 0.1 and echo["tol"] == 1e-8 and echo["seed"] == 0
