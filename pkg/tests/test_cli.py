import csv
import io

import pytest

from fasris.analytic import average_secure_bler
from fasris.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_CONFIG,
    PRESETS,
    ConfigError,
    SweepSpec,
    build_spec,
    load_config,
    main,
    parse_values,
    run_sweep,
    sweep_csv,
    validation_verdict,
    SweepRow,
)
from fasris.params import default_params


def _rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_parse_values():
    assert parse_values("1, 2,3") == (1.0, 2.0, 3.0)
    assert parse_values("log:1:100:3") == pytest.approx((1.0, 10.0, 100.0))
    assert parse_values("lin:0:1:5") == pytest.approx((0, 0.25, 0.5, 0.75, 1.0))
    for bad in ("log:0:1:3", "lin:1:2", "a,b"):
        with pytest.raises(ConfigError):
            parse_values(bad)


def test_load_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scenario\nP = 10\nM = 16   # elements\naxis = L\nvalues = 1,2\n")
    raw = load_config(cfg, ["P=20"])
    assert raw == {"P": "20", "M": "16", "axis": "L", "values": "1,2"}
    spec = build_spec(raw)
    assert spec.base.P == 20.0 and spec.base.M == 16 and spec.axis == "L" and spec.values == (1.0, 2.0)
    assert spec.params_at(2.0).L == 2 and isinstance(spec.params_at(2.0).L, int)


def test_config_rejects_unknown_and_invalid(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("Power = 10\n")
    with pytest.raises(ConfigError, match="unknown config keys: Power"):
        load_config(cfg)
    with pytest.raises(ConfigError):
        load_config(None, ["novalue"])
    with pytest.raises(ConfigError):
        build_spec({"M": "2.5"})
    with pytest.raises(ConfigError):
        build_spec({"axis": "a_C", "values": "0.6"})
    with pytest.raises(ConfigError):
        build_spec({"values": "10,1"})
    with pytest.raises(ConfigError):
        build_spec({"preset": "nope"})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_allocation_axis_keeps_power_split(params):
    spec = build_spec({"axis": "a_C", "values": "0.1,0.3"})
    p = spec.params_at(0.3)
    assert p.a_C == 0.3 and p.a_E == pytest.approx(0.7)


def test_presets_build():
    for name, (axis, values, _, _) in PRESETS.items():
        spec = build_spec({"preset": name})
        assert spec.axis == axis and len(spec.values) == len(values)
    relaxed = build_spec({"preset": "power_relaxed"})
    assert relaxed.base.N_c == 250 and relaxed.base.delta == 0.5
    assert any("N_c=250" in n for n in relaxed.notes)


def test_exit_codes(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["sweep", "--set", "values=10", "--out", str(out)]) == EXIT_OK
    assert main(["sweep", "--set", "bogus=1"]) == EXIT_CONFIG
    assert main(["sweep", "--set", "axis=a_C", "--set", "values=0.6"]) == EXIT_CONFIG
    assert main(["ceiling", "--set", "rho2_C=0", "--set", "rho2_E=0", "--out", str(out)]) == EXIT_NUMERIC
    err = capsys.readouterr().err
    assert "configuration error" in err and "numerical failure" in err


def test_single_point_sweep_equals_direct_call(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["sweep", "--set", "values=31.6", "--out", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    assert len(rows) == 1
    ref = average_secure_bler(default_params(P=31.6))
    assert float(rows[0]["analytic"]) == pytest.approx(ref.value, rel=1e-5)
    assert float(rows[0]["expected_phi"]) == pytest.approx(ref.expected_phi, rel=1e-5)
    assert rows[0]["error"] == "" and rows[0]["mc_mean"] == ""


def test_csv_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep", "--set", "values=log:1:1000:4", "--set", "note=stable"]
    assert main(argv + ["--out", str(a)]) == EXIT_OK
    assert main(argv + ["--out", str(b), "--workers", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "# note: stable" in text and "# base: P=100" in text and "seconds" not in text


def test_timing_is_opt_in(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["sweep", "--set", "values=10", "--timing", "--out", str(out)]) == EXIT_OK
    assert float(_rows(out.read_text())[0]["seconds"]) > 0


def test_workers_preserve_order():
    spec = build_spec({"values": "1,10,100,1000"})
    serial = run_sweep(spec, 1)
    pooled = run_sweep(spec, 3)
    assert [r.value for r in pooled] == [1, 10, 100, 1000]
    assert [r.analytic for r in pooled] == [r.analytic for r in serial]


def test_monte_carlo_mode_outputs_probabilities(tmp_path):
    out = tmp_path / "mc.csv"
    assert main(["sweep", "--mode", "both", "--samples", "2000", "--set", "axis=L",
                 "--set", "values=1,3", "--set", "P=10", "--out", str(out)]) == EXIT_OK
    for row in _rows(out.read_text()):
        for key in ("analytic", "mc_mean", "expected_phi", "expected_psi_phi", "expected_psi_xi"):
            assert 0.0 <= float(row[key]) <= 1.0
        assert float(row["mc_stderr"]) >= 0


def test_validation_verdict():
    assert validation_verdict(SweepRow(1.0, analytic=0.12, mc_mean=0.1, mc_stderr=0.001))
    assert not validation_verdict(SweepRow(1.0, analytic=0.05, mc_mean=0.1, mc_stderr=0.001))
    assert validation_verdict(SweepRow(1.0, analytic=2e-5, mc_mean=1e-5, mc_stderr=1e-5))
    assert not validation_verdict(SweepRow(1.0, analytic=None, mc_mean=0.1, mc_stderr=0.0))


def test_ks_and_ceiling_commands(tmp_path):
    out = tmp_path / "ks.csv"
    assert main(["ks", "--samples", "5000", "--set", "M_values=4,8", "--out", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    assert [r["M"] for r in rows] == ["4", "8"]
    assert all(0 < float(r["ks"]) < 1 for r in rows)
    assert main(["ceiling", "--out", str(out)]) == EXIT_OK
    row = _rows(out.read_text())[0]
    assert float(row["hi_ceiling"]) == pytest.approx(1.0)


def test_sweep_csv_error_column(params):
    spec = SweepSpec(base=params, axis="P", values=(1.0,))
    text = sweep_csv(spec, [SweepRow(1.0, error="DomainError: boom")])
    assert _rows(text)[0]["error"] == "DomainError: boom"
