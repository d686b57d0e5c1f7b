import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from wctsv.cli import main
from wctsv.frontier import classical_mv, frontier_params
from wctsv.market_data import compute_losses, estimate_moments, load_price_panel
from wctsv.worst_case import Family, MomentProfile, wc_expected_regret


@pytest.fixture
def runner():
    return CliRunner()


def write_prices(path, losses, start_price=100.0):
    losses = np.asarray(losses, dtype=float)
    rows, d = losses.shape
    tickers = [f"T{i}" for i in range(d)]
    prices = np.empty((rows + 1, d))
    prices[0] = start_price
    for k in range(rows):
        prices[k + 1] = prices[k] * (1.0 - losses[k])
    lines = ["date," + ",".join(tickers)]
    for k in range(rows + 1):
        day = f"2024-01-{k + 1:02d}" if k < 30 else f"2024-02-{k - 29:02d}"
        lines.append(day + "," + ",".join(f"{p:.12f}" for p in prices[k]))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def toy_prices(tmp_path):
    rng = np.random.default_rng(42)
    return write_prices(tmp_path / "prices.csv", rng.normal(1e-4, 0.01, size=(12, 2)))


class TestWc:
    def test_symmetric_tsv_above_mean(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0", "--sigma", "1", "--t", "0.5", "--family", "symmetric", "--measure", "tsv"],
        )
        assert res.exit_code == 0
        assert res.output.splitlines() == ["value: 0.5", "regime: t > mu"]

    def test_budget_at_floor_is_zero(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0", "--sigma", "1", "--t", "1", "--lambda", "1", "--measure", "tsv"],
        )
        assert res.exit_code == 0
        assert res.output.splitlines()[0] == "value: 0.0"

    def test_budget_below_floor_exits_one(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0", "--sigma", "1", "--t", "1", "--lambda", "0.5", "--measure", "tsv"],
        )
        assert res.exit_code == 1
        assert "empty uncertainty set" in res.output

    def test_printed_value_round_trips(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0.3", "--sigma", "0.7", "--t", "0.1", "--measure", "regret"],
        )
        want = wc_expected_regret(MomentProfile(0.3, 0.7), 0.1, Family.ARBITRARY)
        printed = float(res.output.splitlines()[0].split(": ")[1])
        assert printed == want.value

    def test_json_shape(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0", "--sigma", "1", "--t", "0.5", "--family", "symmetric",
             "--measure", "tsv", "--json"],
        )
        payload = json.loads(res.output)
        assert list(payload) == ["value", "regime", "inputs"]
        assert payload["value"] == 0.5
        assert payload["inputs"]["lambda"] is None
        assert payload["inputs"]["family"] == "symmetric"

    def test_regret_rejects_lambda(self, runner):
        res = runner.invoke(
            main,
            ["wc", "--mu", "0", "--sigma", "1", "--t", "0", "--lambda", "1", "--measure", "regret"],
        )
        assert res.exit_code == 2

    def test_nonpositive_sigma_is_usage_error(self, runner):
        res = runner.invoke(main, ["wc", "--mu", "0", "--sigma", "0", "--t", "0", "--measure", "tsv"])
        assert res.exit_code == 2


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


VERIFY_HEADER = [
    "mu", "sigma", "t", "lam", "family", "k",
    "closed_form", "oracle_value", "witness_value", "gap",
]


class TestVerify:
    def test_unconstrained_sweep(self, runner, tmp_path):
        out = tmp_path / "report.csv"
        res = runner.invoke(
            main,
            ["verify", "--grid-spec", "n=8", "--budget", "10000", "--seed", "1", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        rows = read_rows(out)
        assert len(rows) == 8
        assert list(rows[0]) == VERIFY_HEADER
        for row in rows:
            assert row["family"] == "symmetric" and row["k"] == "5" and row["lam"] == ""
            closed, oracle = float(row["closed_form"]), float(row["oracle_value"])
            scale = float(row["sigma"]) ** 2 + (float(row["t"]) - float(row["mu"])) ** 2
            assert closed - 5e-3 * scale <= oracle <= closed + 1e-6 * scale

    def test_constrained_sweep_cycles_regimes(self, runner, tmp_path):
        out = tmp_path / "report.csv"
        res = runner.invoke(
            main,
            ["verify", "--grid-spec", "n=6", "--constrained", "--budget", "10000",
             "--seed", "1", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        rows = read_rows(out)
        assert len(rows) == 6
        regimes = set()
        for row in rows:
            assert row["k"] == "6"
            lam = float(row["lam"])
            assert lam > 0
            m = lam + float(row["mu"]) - float(row["t"])
            sigma = float(row["sigma"])
            regimes.add("a" if sigma <= m else ("b" if sigma <= 2 * m else "c"))
        assert regimes == {"a", "b", "c"}

    def test_corrupt_closed_form_fails_but_writes_all_rows(self, runner, tmp_path):
        out = tmp_path / "report.csv"
        res = runner.invoke(
            main,
            ["verify", "--grid-spec", "n=5", "--budget", "10000", "--seed", "1",
             "--corrupt-closed-form", "--out", str(out)],
        )
        assert res.exit_code == 1
        assert "violate" in res.output
        assert len(read_rows(out)) == 5

    def test_budget_zero_is_usage_error(self, runner, tmp_path):
        res = runner.invoke(main, ["verify", "--budget", "0", "--out", str(tmp_path / "r.csv")])
        assert res.exit_code == 2

    def test_same_seed_byte_identical(self, runner, tmp_path):
        args = ["verify", "--grid-spec", "n=4", "--budget", "10000", "--seed", "9"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert runner.invoke(main, args + ["--out", str(a)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(b)]).exit_code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_overrides_flag(self, runner, tmp_path):
        base = ["verify", "--grid-spec", "n=3", "--budget", "10000"]
        flag2 = tmp_path / "flag2.csv"
        env2 = tmp_path / "env2.csv"
        runner.invoke(main, base + ["--seed", "2", "--out", str(flag2)])
        res = runner.invoke(
            main, base + ["--seed", "1", "--out", str(env2)], env={"WCTSV_SEED": "2"}
        )
        assert res.exit_code == 0, res.output
        assert env2.read_bytes() == flag2.read_bytes()

    def test_bad_env_seed_is_usage_error(self, runner, tmp_path):
        res = runner.invoke(
            main,
            ["verify", "--grid-spec", "n=3", "--out", str(tmp_path / "r.csv")],
            env={"WCTSV_SEED": "not-a-number"},
        )
        assert res.exit_code == 2

    @pytest.mark.parametrize(
        "spec",
        ["sigma=-1:2", "mu=2:-2", "n=0", "bogus=1:2", "mu=1:x"],
    )
    def test_bad_grid_specs(self, runner, tmp_path, spec):
        res = runner.invoke(main, ["verify", "--grid-spec", spec, "--out", str(tmp_path / "r.csv")])
        assert res.exit_code == 2

    def test_nonnegative_needs_positive_mu_range(self, runner, tmp_path):
        res = runner.invoke(
            main,
            ["verify", "--family", "nonnegative", "--out", str(tmp_path / "r.csv")],
        )
        assert res.exit_code == 2
        ok = runner.invoke(
            main,
            ["verify", "--family", "nonnegative", "--grid-spec", "mu=0.3:2,n=4",
             "--budget", "10000", "--out", str(tmp_path / "nn.csv")],
        )
        assert ok.exit_code == 0, ok.output
        assert all(row["k"] == "3" for row in read_rows(tmp_path / "nn.csv"))


class TestFrontierCmd:
    def test_matches_library_composition(self, runner, toy_prices):
        res = runner.invoke(main, ["frontier", "--prices", str(toy_prices)])
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        losses = compute_losses(load_price_panel(toy_prices))
        n = losses.losses.shape[0]
        fp = frontier_params(estimate_moments(losses, n, n - 1))
        assert payload["u"] == fp.u
        assert (payload["v0"], payload["v1"], payload["v2"]) == (fp.v0, fp.v1, fp.v2)
        assert payload["assets"] == ["T0", "T1"]
        weights = list(payload["gmv"]["weights"].values())
        assert sum(weights) == pytest.approx(1.0, abs=1e-12)

    def test_missing_file(self, runner):
        assert runner.invoke(main, ["frontier", "--prices", "/no/such.csv"]).exit_code == 2


class TestOptimizeCmd:
    def test_mv_matches_library(self, runner, toy_prices):
        res = runner.invoke(
            main, ["optimize", "--prices", str(toy_prices), "--model", "MV", "--nu", "0.001"]
        )
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        losses = compute_losses(load_price_panel(toy_prices))
        n = losses.losses.shape[0]
        model = estimate_moments(losses, n, n - 1)
        want = classical_mv(frontier_params(model), model, 0.001)
        assert list(payload["weights"].values()) == want.weights.tolist()
        assert payload["objective"] == want.objective
        assert payload["regime"] == want.regime

    def test_infeasible_budget_exits_one(self, runner, toy_prices):
        res = runner.invoke(
            main,
            ["optimize", "--prices", str(toy_prices), "--model", "EEP_TSV",
             "--t", "0.5", "--lambda", "1e-9"],
        )
        assert res.exit_code == 1
        assert "Error" in res.output


class TestBacktestCmd:
    def test_writes_outputs(self, runner, tmp_path):
        rng = np.random.default_rng(3)
        prices = write_prices(tmp_path / "p.csv", rng.normal(1e-4, 0.01, size=(14, 3)))
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("window = 8\nmodels = MV, TSV\nnu = 0.001\n")
        out = tmp_path / "out"
        res = runner.invoke(
            main,
            ["backtest", "--prices", str(prices), "--config", str(cfg), "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        wealth = (out / "wealth.csv").read_text().strip().splitlines()
        assert wealth[0] == "date,model,wealth"
        assert len(wealth) == 1 + 6 * 2  # 14 loss rows, window 8 -> 6 oos days x 2 models
        summary = json.loads((out / "summary.json").read_text())
        assert [rec["model"] for rec in summary] == ["MV", "TSV"]

    def test_model_failure_exits_one(self, runner, tmp_path):
        rng = np.random.default_rng(4)
        prices = write_prices(tmp_path / "p.csv", rng.normal(1e-4, 0.01, size=(12, 3)))
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("window = 8\nmodels = EEP_TSV\nt = 0.5\nlambda = 1e-9\n")
        res = runner.invoke(
            main,
            ["backtest", "--prices", str(prices), "--config", str(cfg),
             "--out", str(tmp_path / "out")],
        )
        assert res.exit_code == 1
        assert "failed on" in res.output

    def test_config_parse_error_is_usage_error(self, runner, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("not a config\n")
        res = runner.invoke(main, ["backtest", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2
        assert "line 1" in res.output

    def test_missing_prices_exits_two(self, runner, tmp_path):
        res = runner.invoke(
            main, ["backtest", "--prices", "/no/such.csv", "--out", str(tmp_path / "o")]
        )
        assert res.exit_code == 2
