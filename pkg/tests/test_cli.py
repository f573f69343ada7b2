"""End-to-end command tests, in process via cli.main(argv).

Exit codes: 0 ok, 2 config, 3 numeric, 4 horizon, 5 acceptance.
"""

import json
import math
import os
import subprocess
import sys

import pytest

from loopmeasure import GroupPresentation, SpectrumTable, load_spectrum, save_spectrum
from loopmeasure.cli import main
from loopmeasure.detlap import _two_sided_records


def _write(tmp_path, name, text):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def test_mass_hyperbolic(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "m.toml",
        f'out_dir = "{tmp_path}"\nformula = "HYP_CLASS"\n[params]\nlength = 1.0\n',
    )
    assert main(["mass", cfg]) == 0
    out = capsys.readouterr().out
    assert "0.58197670686932645" in out
    with open(os.path.join(tmp_path, "mass.json")) as fh:
        record = json.load(fh)
    assert record["formula"] == "HYP_CLASS"
    assert record["value"] == 1.0 / (math.e - 1.0)
    assert record["inputs"] == {"length": 1.0, "iteration": 1}


def test_mass_unknown_key_named(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "m.toml",
        'formula = "HYP_CLASS"\ntypo_key = 3\n[params]\nlength = 1.0\n',
    )
    assert main(["mass", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "typo_key" in capsys.readouterr().err


def test_mass_unknown_formula(tmp_path, capsys):
    cfg = _write(tmp_path, "m.toml", 'formula = "NOPE"\n[params]\nlength = 1.0\n')
    assert main(["mass", cfg, "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "NOPE" in err and "HYP_CLASS" in err


def test_mass_missing_required_key(tmp_path, capsys):
    cfg = _write(tmp_path, "m.toml", 'formula = "HYP_CLASS"\n[params]\n')
    assert main(["mass", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "length" in capsys.readouterr().err


def test_mass_infinite_winding_is_config_error(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "m.toml",
        'formula = "ANNULUS_WINDING"\n[params]\nr = 1.0\nm = 0\n',
    )
    assert main(["mass", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_spectrum_idempotent_and_loadable(tmp_path):
    cfg = _write(
        tmp_path,
        "s.toml",
        f'out_dir = "{tmp_path}"\ngroup = "modular-torus"\nmax_word_length = 5\n',
    )
    assert main(["spectrum", cfg]) == 0
    gspc = os.path.join(tmp_path, "spectrum.gspc")
    csv = os.path.join(tmp_path, "spectrum.csv")
    first = (open(gspc, "rb").read(), open(csv, "rb").read())
    assert main(["spectrum", cfg]) == 0
    assert (open(gspc, "rb").read(), open(csv, "rb").read()) == first
    table = load_spectrum(gspc)
    assert table.max_word_length == 5
    assert table.n_records > 0


def test_spectrum_custom_generators(tmp_path):
    cfg = _write(
        tmp_path,
        "s.toml",
        "\n".join(
            [
                f'out_dir = "{tmp_path}"',
                "generators = [[[1.0, 1.0], [1.0, 2.0]], [[1.0, -1.0], [-1.0, 2.0]]]",
                'group_name = "hand-rolled"',
                "max_word_length = 3",
            ]
        )
        + "\n",
    )
    assert main(["spectrum", cfg]) == 0
    table = load_spectrum(os.path.join(tmp_path, "spectrum.gspc"))
    assert table.group_name == "hand-rolled"


def test_identity_happy_path(tmp_path, capsys):
    area = math.sqrt(3.0) / 2.0
    cfg = _write(
        tmp_path,
        "i.toml",
        "\n".join(
            [
                f'out_dir = "{tmp_path}"',
                'group = "modular-torus"',
                "max_word_length = 8",
                "class = [1, 0]",
                f"area = {area!r}",
                "class_norm = 1.0",
            ]
        )
        + "\n",
    )
    assert main(["identity", cfg]) == 0
    assert os.path.exists(os.path.join(tmp_path, "identity.csv"))
    assert "relative_gap" in capsys.readouterr().out


def test_identity_wrong_marking(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "i.toml",
        "\n".join(
            [
                f'out_dir = "{tmp_path}"',
                'group = "modular-torus"',
                "max_word_length = 6",
                "class = [1, 0]",
                "area = 1.0",
                "class_norm = 1.0",
            ]
        )
        + "\n",
    )
    assert main(["identity", cfg]) == 2
    assert "marking" in capsys.readouterr().err


def test_mass_essential_total_horizon_exit(tmp_path, capsys):
    # a cache whose horizon is below log 2 cannot support the tail bound
    table = SpectrumTable(
        group_name="toy",
        generators=GroupPresentation.modular_torus().generators,
        max_word_length=2,
        records=_two_sided_records([0.4]),
        reliable_horizon=0.5,
    )
    cache = os.path.join(tmp_path, "low.gspc")
    save_spectrum(table, cache)
    cfg = _write(
        tmp_path,
        "m.toml",
        "\n".join(
            [
                f'out_dir = "{tmp_path}"',
                'formula = "ESSENTIAL_TOTAL"',
                "[params]",
                f'spectrum_path = "{cache}"',
                "tail_exponent = 0.5",
            ]
        )
        + "\n",
    )
    assert main(["mass", cfg]) == 4
    assert "horizon" in capsys.readouterr().err.lower()


def test_detlap_routes(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "d.toml",
        f'out_dir = "{tmp_path}"\nsynthetic = "sparse"\narea = {4.0 * math.pi!r}\n',
    )
    assert main(["detlap", cfg]) == 0
    out = capsys.readouterr().out
    assert "|diff|" in out
    text = open(os.path.join(tmp_path, "detlap.txt")).read()
    assert "route=" in text and "route_difference=" in text


def test_detlap_requires_one_source(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "d.toml",
        "\n".join(
            [
                f'out_dir = "{tmp_path}"',
                'synthetic = "sparse"',
                'group = "modular-torus"',
                "max_word_length = 6",
                "area = 12.0",
            ]
        )
        + "\n",
    )
    assert main(["detlap", cfg]) == 2


def _mc_cfg_lines(tmp_path, seed="seed = 5"):
    return [
        f'out_dir = "{tmp_path}"',
        "omega1 = [1.0, 0.0]",
        f"omega2 = [0.5, {math.sqrt(3.0) / 2.0!r}]",
        "p = 1",
        "q = 0",
        "m = 1",
        "n_steps = 32",
        "n_samples = 9000",
        "n_batches = 2",
    ] + ([seed] if seed else [])


def test_mc_idempotent(tmp_path, capsys):
    cfg = _write(tmp_path, "mc.toml", "\n".join(_mc_cfg_lines(tmp_path)) + "\n")
    assert main(["mc", cfg]) == 0
    path = os.path.join(tmp_path, "mc.csv")
    first = open(path, "rb").read()
    assert main(["mc", cfg]) == 0
    assert open(path, "rb").read() == first
    assert "closed_form=" in capsys.readouterr().out


def test_mc_missing_seed(tmp_path, capsys):
    cfg = _write(tmp_path, "mc.toml", "\n".join(_mc_cfg_lines(tmp_path, seed="")) + "\n")
    assert main(["mc", cfg]) == 2
    assert "seed" in capsys.readouterr().err


def test_selftest_subset(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "st.toml",
        f'out_dir = "{tmp_path}"\nchecks = ["constants", "coherence"]\n',
    )
    assert main(["selftest", cfg]) == 0
    lines = open(os.path.join(tmp_path, "selftest.txt")).read().splitlines()
    assert len(lines) == 2
    assert all(line.startswith("PASS ") for line in lines)


def test_selftest_unknown_check(tmp_path, capsys):
    cfg = _write(tmp_path, "st.toml", 'checks = ["nope"]\n')
    assert main(["selftest", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "nope" in capsys.readouterr().err


def test_out_dir_override(tmp_path):
    sub = os.path.join(tmp_path, "somewhere-else")
    cfg = _write(
        tmp_path,
        "m.toml",
        f'out_dir = "{tmp_path}"\nformula = "HYP_CLASS"\n[params]\nlength = 2.0\n',
    )
    assert main(["mass", cfg, "--out-dir", sub]) == 0
    assert os.path.exists(os.path.join(sub, "mass.json"))
    assert not os.path.exists(os.path.join(tmp_path, "mass.json"))


def test_threads_validation_and_independence(tmp_path):
    base = "\n".join(_mc_cfg_lines(tmp_path)) + "\n"
    cfg1 = _write(tmp_path, "t1.toml", base + "threads = 1\n")
    cfg2 = _write(tmp_path, "t2.toml", base + "threads = 2\n")
    cfg0 = _write(tmp_path, "t0.toml", base + "threads = 0\n")
    assert main(["mc", cfg0]) == 2
    assert main(["mc", cfg1]) == 0
    first = open(os.path.join(tmp_path, "mc.csv"), "rb").read()
    assert main(["mc", cfg2]) == 0
    assert open(os.path.join(tmp_path, "mc.csv"), "rb").read() == first


def test_bad_toml(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.toml", "formula = [unterminated\n")
    assert main(["mass", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "TOML" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["mass", os.path.join(tmp_path, "absent.toml")]) == 2
    assert "error:" in capsys.readouterr().err


def test_help_lists_formulas(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for fid in ("HYP_CLASS", "ANNULUS_TOTAL_SERIES", "ESSENTIAL_TOTAL"):
        assert fid in out
    assert "exit codes" in out.lower()


def test_module_entry_point(tmp_path):
    cfg = _write(
        tmp_path,
        "m.toml",
        f'out_dir = "{tmp_path}"\nformula = "FLAT_CLASS"\n[params]\narea = 1.0\nnorm = 1.0\n',
    )
    proc = subprocess.run(
        [sys.executable, "-m", "loopmeasure", "mass", cfg],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "FLAT_CLASS" in proc.stdout
