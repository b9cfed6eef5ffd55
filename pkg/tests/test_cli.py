import hashlib
import json

import numpy as np
import pandas as pd
import pytest

from xsdf.cli import main

DGP = """
t = 150
seed = 3
b = [[0.0, 0.4, 0.0], [0.0, 0.0, 0.4], [0.4, 0.0, 0.0]]
sigma_s = 1.0
sigma_eps = 0.4
"""


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data")
    spec = root / "dgp.toml"
    spec.write_text(DGP)
    assert main(["--out", str(root / "data"), "synth", "--spec", str(spec)]) == 0
    return root / "data"


class TestSynth:
    def test_deterministic_outputs(self, tmp_path):
        spec = tmp_path / "dgp.toml"
        spec.write_text(DGP)
        for out in ("one", "two"):
            assert main(["--out", str(tmp_path / out), "synth", "--spec", str(spec)]) == 0
        for name in ("signals.csv", "returns.csv"):
            assert digest(tmp_path / "one" / name) == digest(tmp_path / "two" / name)

    def test_null_predictability_note(self, tmp_path, capsys):
        spec = tmp_path / "dgp.toml"
        spec.write_text("t = 10\nseed = 1\nb = [[0.0]]\nsigma_s = 1.0\nsigma_eps = 1.0\n")
        assert main(["--out", str(tmp_path / "o"), "synth", "--spec", str(spec)]) == 0
        assert "null predictability" in capsys.readouterr().out

    def test_non_psd_exits_config(self, tmp_path, capsys):
        spec = tmp_path / "dgp.toml"
        spec.write_text(
            "t = 10\nseed = 1\nb = [[0.0, 0.0], [0.0, 0.0]]\n"
            "sigma_s = [[1.0, 2.0], [2.0, 1.0]]\nsigma_eps = 1.0\n"
        )
        assert main(["--out", str(tmp_path / "o"), "synth", "--spec", str(spec)]) == 4


class TestValidate:
    def test_clean_files(self, data_dir, tmp_path):
        code = main(
            [
                "--out", str(tmp_path),
                "validate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
            ]
        )
        assert code == 0
        assert (tmp_path / "manifest.json").exists()

    def test_missing_cell_exit_and_message(self, data_dir, tmp_path, capsys):
        broken = tmp_path / "broken.csv"
        lines = (data_dir / "signals.csv").read_text().splitlines()
        broken.write_text("\n".join(lines[:-1]) + "\n")  # drop last cell
        code = main(
            [
                "--out", str(tmp_path),
                "validate",
                "--signals", str(broken),
                "--returns", str(data_dir / "returns.csv"),
            ]
        )
        assert code == 2
        assert "missing cell" in capsys.readouterr().err

    def test_misaligned_dates_exit(self, data_dir, tmp_path, capsys):
        ret = pd.read_csv(data_dir / "returns.csv")
        dates = sorted(set(ret["date"]))
        shift = {d: f"{2050 + i // 12}-{i % 12 + 1:02d}" for i, d in enumerate(dates)}
        ret["date"] = [shift[d] for d in ret["date"]]
        bad = tmp_path / "ret.csv"
        ret.to_csv(bad, index=False)
        code = main(
            [
                "--out", str(tmp_path),
                "validate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(bad),
            ]
        )
        assert code == 3


class TestEstimate:
    def test_outputs_match_library(self, data_dir, tmp_path):
        out = tmp_path / "est"
        code = main(
            [
                "--out", str(out),
                "estimate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--objective", "max_return",
            ]
        )
        assert code == 0
        from xsdf import align, build_managed, load_returns, load_signals, standardize
        from xsdf.estimators import estimate_max_return

        sample = align(
            standardize(load_signals(data_dir / "signals.csv")),
            load_returns(data_dir / "returns.csv"),
        )
        params = estimate_max_return(build_managed(sample))
        lam = pd.read_csv(out / "lambda.csv")
        np.testing.assert_allclose(lam["value"].to_numpy(), params.signal_weights, atol=0)
        psi = pd.read_csv(out / "psi.csv")
        np.testing.assert_allclose(
            psi["value"].to_numpy(), params.spillover.reshape(-1), atol=0
        )

    def test_self_restriction_diagonal_rows(self, data_dir, tmp_path):
        out = tmp_path / "est"
        code = main(
            [
                "--out", str(out),
                "estimate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--restriction", "self",
                "--ridge", "0.1",
            ]
        )
        assert code == 0
        psi = pd.read_csv(out / "psi.csv")
        assert len(psi) == 3
        assert (psi["from_asset"] == psi["to_asset"]).all()

    def test_date_range_restricts_window(self, data_dir, tmp_path):
        out = tmp_path / "est"
        code = main(
            [
                "--out", str(out),
                "estimate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--ridge", "0.1",
                "--start", "2003-01",
                "--end", "2005-12",
            ]
        )
        assert code == 0
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["window"] == ["2003-02", "2006-01"]  # return months

    def test_zero_cost_flag_merges(self, data_dir, tmp_path):
        out = tmp_path / "est"
        code = main(
            [
                "--out", str(out),
                "estimate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--ridge", "0.1",
                "--zero-cost",
            ]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["zero_cost"] is True

    def test_cv_choice_recorded_in_manifest(self, data_dir, tmp_path):
        out = tmp_path / "est"
        code = main(
            [
                "--out", str(out),
                "estimate",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--ridge", "cv",
                "--tol", "1e-6",
                "--max-iter", "100",
            ]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        grid = [10.0 ** x for x in range(4, -7, -1)]
        assert manifest["chosen_ridge"] in grid


class TestBacktest:
    def run_once(self, data_dir, out):
        return main(
            [
                "--out", str(out),
                "backtest",
                "--signals", str(data_dir / "signals.csv"),
                "--returns", str(data_dir / "returns.csv"),
                "--window-months", "120",
                "--ridge", "1.0",
                "--zero-cost",
                "--leverage", "2",
                "--tol", "1e-6",
            ]
        )

    def test_constraints_in_weights_csv(self, data_dir, tmp_path):
        out = tmp_path / "bt"
        assert self.run_once(data_dir, out) == 0
        weights = pd.read_csv(out / "weights.csv")
        sums = weights.groupby("date")["weight"].sum()
        asums = weights.groupby("date")["weight"].apply(lambda w: w.abs().sum())
        assert np.max(np.abs(sums.to_numpy())) < 1e-10
        assert np.max(np.abs(asums.to_numpy() - 2.0)) < 1e-10

    def test_rerun_bit_identical(self, data_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert self.run_once(data_dir, out_a) == 0
        assert self.run_once(data_dir, out_b) == 0
        names = [
            "oos_returns.csv", "weights.csv", "lambda_history.csv",
            "chosen_lambda.csv", "report.csv", "connectedness.csv",
            "total_connectedness.csv", "trailing_sharpe.csv",
        ]
        for name in names:
            assert digest(out_a / name) == digest(out_b / name), name
        ma = json.loads((out_a / "manifest.json").read_text())
        mb = json.loads((out_b / "manifest.json").read_text())
        ma.pop("timestamp"), mb.pop("timestamp")
        assert ma == mb

    def test_outputs_parse_back(self, data_dir, tmp_path):
        from xsdf.backtest import load_state

        out = tmp_path / "bt"
        assert self.run_once(data_dir, out) == 0
        returns = pd.read_csv(out / "oos_returns.csv")
        assert list(returns.columns) == ["date", "return"]
        # total connectedness parses as a dated state series
        tot = pd.read_csv(out / "total_connectedness.csv")
        state = tot.rename(columns={"total": "value"})
        state_path = tmp_path / "state.csv"
        state.to_csv(state_path, index=False)
        loaded = load_state(state_path)
        assert len(loaded.dates) == len(returns)


class TestAnalyze:
    def test_diagonal_psi_zero_total(self, tmp_path, capsys):
        psi = tmp_path / "psi.csv"
        psi.write_text("from_asset,to_asset,value\na1,a1,0.5\na2,a2,-0.25\n")
        out = tmp_path / "an"
        assert main(["--out", str(out), "analyze", "--psi", str(psi)]) == 0
        tot = (out / "total_connectedness.csv").read_text().strip().splitlines()
        assert tot[1] == ",0.0"

    def test_blocks_shape(self, tmp_path):
        psi = tmp_path / "psi.csv"
        psi.write_text(
            "from_asset,to_asset,value\n"
            "a1,a1,0.5\na1,a2,0.1\na2,a1,-0.3\na2,a2,0.2\n"
        )
        labels = tmp_path / "labels.csv"
        labels.write_text("asset,label\na1,small\na2,big\n")
        out = tmp_path / "an"
        code = main(
            ["--out", str(out), "analyze", "--psi", str(psi), "--labels", str(labels)]
        )
        assert code == 0
        blocks = pd.read_csv(out / "blocks.csv")
        assert len(blocks) == 4  # four ordered group pairs

    def test_spanning_strategy_on_itself(self, tmp_path):
        rng = np.random.default_rng(1)
        dates = [f"2001-{m:02d}" for m in range(1, 13)] * 10
        dates = [f"{2001 + i // 12}-{i % 12 + 1:02d}" for i in range(120)]
        values = rng.normal(0.005, 0.02, size=120)
        strat = tmp_path / "strat.csv"
        strat.write_text(
            "date,return\n" + "".join(f"{d},{float(v)!r}\n" for d, v in zip(dates, values))
        )
        factors = tmp_path / "factors.csv"
        factors.write_text(
            "date,self\n" + "".join(f"{d},{float(v)!r}\n" for d, v in zip(dates, values))
        )
        out = tmp_path / "an"
        code = main(
            ["--out", str(out), "analyze", "--spanning", str(strat), str(factors)]
        )
        assert code == 0
        table = pd.read_csv(out / "spanning.csv")
        alpha = table.loc[table["term"] == "alpha", "coefficient"].iloc[0]
        loading = table.loc[table["term"] == "self", "coefficient"].iloc[0]
        assert abs(alpha) < 1e-10
        assert abs(loading - 1.0) < 1e-10

    def test_panel_reg(self, tmp_path):
        rng = np.random.default_rng(2)
        months = [f"2001-{m:02d}" for m in range(1, 13)]
        assets = [f"a{i}" for i in range(10)]
        conn_rows, char_rows = [], []
        for m in months:
            me = rng.standard_normal(10)
            net = 0.002 * me + 0.0001 * rng.standard_normal(10)
            for a, x, y in zip(assets, me, net):
                conn_rows.append(f"{m},{a},0.0,0.0,{float(y)!r}")
                char_rows.append(f"{m},{a},{float(x)!r}")
        conn = tmp_path / "conn.csv"
        conn.write_text("date,asset,from,to,net\n" + "\n".join(conn_rows) + "\n")
        chars = tmp_path / "chars.csv"
        chars.write_text("date,asset,me\n" + "\n".join(char_rows) + "\n")
        out = tmp_path / "an"
        code = main(
            [
                "--out", str(out),
                "analyze",
                "--panel-reg", str(conn), str(chars),
                "--measure", "net",
            ]
        )
        assert code == 0
        table = pd.read_csv(out / "panel_reg.csv")
        slope = table.loc[table["characteristic"] == "me", "coef_x1000"].iloc[0]
        assert 1.5 < slope < 2.5

    def test_nothing_to_do_is_config_error(self, tmp_path):
        assert main(["--out", str(tmp_path), "analyze"]) == 4


class TestConfigFile:
    def test_flags_override_file(self, data_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"signals = {data_dir / 'signals.csv'}\n"
            f"returns = {data_dir / 'returns.csv'}\n"
            "window_months = 120\n"
            "ridge = 1.0\n"
            "zero_cost = true\n"
            "leverage = 2\n"
            "tol = 1e-6\n"
        )
        out = tmp_path / "bt"
        code = main(
            ["--out", str(out), "backtest", "--config", str(cfg), "--ridge", "0.5"]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["ridge"] == "0.5"
        chosen = pd.read_csv(out / "chosen_lambda.csv")
        assert (chosen["ridge"] == 0.5).all()

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("volume = 11\n")
        assert main(["--out", str(tmp_path), "backtest", "--config", str(cfg)]) == 4

    def test_usage_error_maps_to_config_exit(self, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "backtest", "--objective", "nonsense"]) == 4
