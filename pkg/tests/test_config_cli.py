import json
from pathlib import Path

import pytest

from cavreg import ConfigurationError, HidingModel, PhotonModel
from cavreg.cli import main
from cavreg.config import load_config, parse_config_text, schema_help

DEFAULTS = Path(__file__).parent.parent / "src" / "cavreg" / "defaults.cfg"


def test_defaults_load_and_match_module_defaults():
    config = load_config()
    assert config.photon_model() == PhotonModel()
    assert config.hiding_model() == HidingModel()
    assert config.idle_model().tau_depump_ms == 150.0
    rates = config.error_table().lookup(config.probe_config())
    assert rates.infidelity_f2 == 0.008
    config.validate_models()


def test_unknown_key_reports_line_number():
    text = DEFAULTS.read_text() + "\n[register]\nbogus_key = 3\n"
    nlines = len(text.splitlines())
    with pytest.raises(ConfigurationError, match=f"{nlines}.*bogus_key"):
        parse_config_text(text, source="bad.cfg")


def test_missing_key_reported_by_name():
    text = "\n".join(
        line for line in DEFAULTS.read_text().splitlines() if "kappa_mhz" not in line
    )
    with pytest.raises(ConfigurationError, match="missing keys.*cavity.kappa_mhz"):
        parse_config_text(text)


def test_invalid_value_reports_key_and_line():
    text = DEFAULTS.read_text().replace(
        "quantum_efficiency = 0.27", "quantum_efficiency = 1.8"
    )
    with pytest.raises(ConfigurationError, match="quantum_efficiency"):
        parse_config_text(text)


def test_duplicate_key_rejected():
    text = DEFAULTS.read_text() + "\n[run]\ntrials = 5\n"
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config_text(text)


def test_key_outside_section_rejected():
    with pytest.raises(ConfigurationError, match="outside"):
        parse_config_text("trials = 7\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigurationError, match="key = value"):
        parse_config_text("[run]\ntrials 7\n")


def test_schema_help_covers_sections():
    text = schema_help()
    for section in ("register", "cavity", "photon", "hiding", "code", "run"):
        assert f"[{section}]" in text


def test_cli_validate_config_ok(capsys):
    assert main(["validate-config"]) == 0
    assert "OK" in capsys.readouterr().out


def test_cli_validate_config_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(DEFAULTS.read_text().replace("threshold_counts = 2", "threshold_counts = 0"))
    assert main(["validate-config", "--config", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_missing_config_file_is_exit_1(tmp_path, capsys):
    # an unreadable path is a runtime failure, not a config-content error
    rc = main(["validate-config", "--config", str(tmp_path / "nope.cfg")])
    assert rc == 1


def test_cli_seed_changes_output(tmp_path):
    import os

    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        assert main(["search-cost", "--trials", "300", "--seed", "1", "--out", "a.csv"]) == 0
        assert main(["search-cost", "--trials", "300", "--seed", "1", "--out", "b.csv"]) == 0
        assert main(["search-cost", "--trials", "300", "--seed", "2", "--out", "c.csv"]) == 0
    finally:
        os.chdir(cwd)
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert a != (tmp_path / "c.csv").read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["experiment"] == "search_cost"
    assert meta["trials"] == 300


def test_cli_histogram_csv_schema(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["histogram", "--trials", "500", "--seed", "9", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == "counts,frequency,condition"


def test_cli_lifetime_small(tmp_path, capsys):
    out = tmp_path / "l.csv"
    rc = main([
        "lifetime", "--trials", "2000", "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    header = out.read_text().splitlines()[0]
    assert header == "t_ms,d,p_err,stderr,survivor_mean"
    assert "extension factor" in capsys.readouterr().out
