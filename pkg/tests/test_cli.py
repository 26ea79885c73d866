import csv
import io
import json

import pytest

from coopmac import MacParams, NetworkConfig, Scheme, evaluate
from coopmac.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def scenario(tmp_path, **kv):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(kv))
    return str(path)


def test_eval_json_matches_library(tmp_path, capsys):
    path = scenario(tmp_path, scheme="direct-link", power=1.0, beta=0.5, t_f=0.5, tau=0.3)
    code, out, _ = run(capsys, "eval", "--scenario", path)
    doc = json.loads(out)
    ref = evaluate(Scheme.DIRECT_LINK, NetworkConfig(1.0, 0.5), MacParams(0.5, 0.5, 0.0, 0.3))
    assert code == 0
    assert doc["c_f"] == ref.c_f and doc["min_rate"] == ref.min_rate
    assert doc["shares"]["s_f"] == ref.shares.s_f


def test_eval_tau_zero(tmp_path, capsys):
    path = scenario(tmp_path, scheme="decode-idle-forward", t_f=0.3, t_n=0.3, tau=0.0)
    code, out, _ = run(capsys, "eval", "--scenario", path)
    assert code == 0 and json.loads(out)["min_rate"] == 0


def test_unknown_key_exits_2(tmp_path, capsys):
    path = scenario(tmp_path, scheme="two-hop", t_f=0.3, tau=0.2, snr=3)
    code, _, err = run(capsys, "eval", "--scenario", path)
    assert code == 2 and "'snr'" in err


@pytest.mark.parametrize("text", ["{not json", "[1, 2]"])
def test_malformed_file_exits_2(tmp_path, capsys, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, _, _ = run(capsys, "eval", "--scenario", str(path))
    assert code == 2


def test_bad_values_exit_2(tmp_path, capsys):
    assert run(capsys, "eval", "--scheme", "nope")[0] == 2
    path = scenario(tmp_path, scheme="two-hop", t_f=0.8, t_n=0.8, tau=0.2)
    assert run(capsys, "eval", "--scenario", path)[0] == 2
    path = scenario(tmp_path, beta_start=0.1)
    assert run(capsys, "sweep-snr", "--scenario", path)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_overrides_win(tmp_path, capsys):
    path = scenario(tmp_path, scheme="two-hop", beta=0.3, t_f=0.3, t_n=0.3, tau=0.2)
    _, a, _ = run(capsys, "eval", "--scenario", path, "--beta", "0.6")
    ref = evaluate(Scheme.TWO_HOP, NetworkConfig(1.0, 0.6), MacParams.from_fractions(0.3, 0.3, 0.2))
    assert json.loads(a)["min_rate"] == ref.min_rate


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_sweep_snr_csv(tmp_path, capsys):
    path = scenario(tmp_path, snr_db_start=-4, snr_db_stop=4, snr_db_step=4,
                    tau_grid_points=49, simplex_step=0.05, refine_iters=20)
    out_file = tmp_path / "out.csv"
    assert run(capsys, "sweep-snr", "--scenario", path, "--out", str(out_file))[0] == 0
    raw = out_file.read_bytes()
    assert b"\r" not in raw
    rows = _rows(raw.decode())
    assert rows[0] == ["snr_db", "rate_direct_link", "rate_two_hop", "rate_naive_df",
                       "rate_decode_idle_forward", "rate_decode_straightforward", "c_nocoop",
                       "gain_pct_naive_df", "gain_pct_decode_idle_forward", "gain_pct_decode_straightforward"]
    assert [r[0] for r in rows[1:]] == ["-4", "0", "4"]
    for r in rows[1:]:
        vals = [float(x) for x in r]
        assert vals[6] == max(vals[1], vals[2])
        for rate, gain in zip(vals[3:6], vals[7:]):
            assert gain == pytest.approx(100 * (rate - vals[6]) / vals[6], abs=1e-9)
        assert all(len(x.replace("-", "").replace(".", "").lstrip("0")) <= 12 for x in r)


def test_sweep_beta_rows_and_schemes(tmp_path, capsys):
    path = scenario(tmp_path, beta_start=0.2, beta_stop=0.8, beta_step=0.3, schemes=["decode-idle-forward"],
                    tau_grid_points=49, simplex_step=0.05, refine_iters=20)
    code, out, _ = run(capsys, "sweep-beta", "--scenario", path, "--snr-db", "0.5")
    rows = _rows(out)
    assert code == 0 and len(rows) == 4
    assert rows[0] == ["beta", "rate_direct_link", "rate_two_hop", "rate_decode_idle_forward", "c_nocoop",
                       "gain_pct_decode_idle_forward"]


def test_simulate_exit_codes(tmp_path, capsys):
    path = scenario(tmp_path, scheme="naive-df", t_f=1 / 3, t_n=1 / 3, tau=0.5, sigma=0.0)
    code, out, _ = run(capsys, "simulate", "--scenario", path, "--seed", "11")
    assert code == 0 and out.rstrip().endswith("PASS")
    code, out, _ = run(capsys, "simulate", "--scenario", path, "--seed", "11", "--perturb-s-f", "0.1")
    assert code == 1 and "FAIL" in out
    idle = scenario(tmp_path, scheme="direct-link", t_f=0.5, tau=0.0)
    assert run(capsys, "simulate", "--scenario", idle, "--n-phases", "1000")[0] == 0
