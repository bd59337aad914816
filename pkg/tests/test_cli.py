import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import SQUARE_W, SQUARE_X, same_columns
from polyfacet import __version__, mip
from polyfacet.cli import main
from polyfacet.io import read_json, read_matrix, write_json, write_matrix
from polyfacet.metrics import check_fbc
from polyfacet.mip import MipSolution


def _datagen(tmp_path, *extra, name="ds"):
    out = tmp_path / name
    rc = main(["datagen", "--out", str(out), "--r", "3", "--n1", "12", "--n2", "4", *extra])
    assert rc == 0
    return out


def test_datagen_files(tmp_path):
    out = _datagen(tmp_path, "--purity", "0.7", "--seed", "5")
    x, w, h = (read_matrix(out / f) for f in ("X.csv", "W_true.csv", "H_true.csv"))
    assert x.shape == (3, 40) and w.shape == (3, 3) and h.shape == (3, 40)
    assert check_fbc(w, h, 12).passed
    meta = read_json(out / "meta.json")
    assert meta["config"]["seed"] == 5 and meta["noise_variance"] == 0.0


def test_datagen_noise_and_outliers(tmp_path):
    out = _datagen(tmp_path, "--purity", "0.7", "--snr", "30", "--outliers", "10", "--m", "5")
    x = read_matrix(out / "X.csv")
    assert x.shape == (5, 50)
    meta = read_json(out / "meta.json")
    clean = read_matrix(out / "W_true.csv") @ read_matrix(out / "H_true.csv")
    assert meta["noise_variance"] == pytest.approx(np.mean(clean**2) / 1000)


def test_datagen_rank_deficient(tmp_path):
    out = tmp_path / "rd"
    assert main(["datagen", "--fixture", "rank-deficient", "--purity", "0.7", "--out", str(out)]) == 0
    assert read_matrix(out / "X.csv").shape == (4, 200)


@pytest.mark.parametrize("preset, bound", [("snr60", 0.05), ("snr40", 0.2)])
def test_gfpi_presets(tmp_path, capsys, preset, bound):
    snr = preset[3:]
    data = _datagen(tmp_path, "--purity", "0.8", "--snr", snr, "--seed", "1")
    capsys.readouterr()
    out = tmp_path / "fit"
    rc = main(["gfpi", str(data / "X.csv"), "--r", "3", "--preset", preset, "--time-limit", "1",
               "--out", str(out), "--estimate-h"])
    assert rc == 0
    brief = json.loads(capsys.readouterr().out)
    assert brief["n_facets"] == 3 and "facets" not in brief
    assert read_matrix(out / "H.csv").shape == (3, 40)
    result = read_json(out / "result.json")
    assert result["params"]["gamma"] == (0.01 if preset == "snr60" else 0.1)
    rc = main(["eval", "--w-true", str(data / "W_true.csv"), "--w-est", str(out / "W.csv"),
               "--x", str(data / "X.csv"), "--h", str(out / "H.csv")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["err"] <= bound and report["re"] < 0.1


def test_gfpi_needs_facet_count(tmp_path):
    data = _datagen(tmp_path)
    assert main(["gfpi", str(data / "X.csv"), "--out", str(tmp_path / "o")]) == 2


def test_bfpi_square(tmp_path):
    write_matrix(tmp_path / "sq.csv", SQUARE_X)
    assert main(["bfpi", str(tmp_path / "sq.csv"), "--s", "3", "--out", str(tmp_path / "o")]) == 0
    w = read_matrix(tmp_path / "o" / "W.csv")
    assert same_columns(w, SQUARE_W, 1e-10)


@pytest.mark.parametrize("algo", ["spa", "snpa"])
def test_separable_commands(tmp_path, algo):
    data = _datagen(tmp_path, "--purity", "1.0")
    assert main([algo, str(data / "X.csv"), "--r", "3", "--out", str(tmp_path / algo)]) == 0
    assert read_json(tmp_path / algo / "result.json")["algorithm"] == algo


def test_eval_identical_and_permuted(tmp_path, capsys, rng):
    w = rng.uniform(size=(4, 3))
    write_matrix(tmp_path / "a.csv", w)
    write_matrix(tmp_path / "b.csv", w[:, [2, 0, 1]])
    for other in ("a.csv", "b.csv"):
        assert main(["eval", "--w-true", str(tmp_path / "a.csv"), "--w-est", str(tmp_path / other),
                     "--out", str(tmp_path / "r.json")]) == 0
        assert json.loads(capsys.readouterr().out)["err"] == 0
    assert read_json(tmp_path / "r.json")["permutation"] == [1, 2, 0]


def test_eval_usage_errors(tmp_path, rng):
    write_matrix(tmp_path / "a.csv", rng.uniform(size=(4, 3)))
    a = str(tmp_path / "a.csv")
    assert main(["eval", "--w-true", a, "--w-est", str(tmp_path / "missing.csv")]) == 2
    assert main(["eval", "--w-true", a, "--w-est", a, "--x", a]) == 2
    write_matrix(tmp_path / "b.csv", rng.uniform(size=(4, 2)))
    assert main(["eval", "--w-true", a, "--w-est", str(tmp_path / "b.csv")]) == 2


def test_bad_csv_is_usage_error(tmp_path):
    (tmp_path / "bad.csv").write_text("1,a\n")
    assert main(["spa", str(tmp_path / "bad.csv"), "--r", "1", "--out", str(tmp_path / "o")]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["gfpi"])
    assert info.value.code == 2


def test_infeasible_exit_4(tmp_path):
    def nothing(inst, **_):
        return MipSolution(theta=None, membership=np.zeros(0, dtype=int), slacks=None,
                           objective=np.inf, status="infeasible")

    mip.register_backend("cli_nothing", nothing, overwrite=True)
    write_matrix(tmp_path / "sq.csv", SQUARE_X)
    rc = main(["gfpi", str(tmp_path / "sq.csv"), "--t-facets", "4", "--backend", "cli_nothing",
               "--out", str(tmp_path / "o")])
    assert rc == 4


def test_numerical_exit_3(tmp_path):
    def broken(inst, **_):
        raise RuntimeError("boom")

    mip.register_backend("cli_broken", broken, overwrite=True)
    write_matrix(tmp_path / "sq.csv", SQUARE_X)
    rc = main(["gfpi", str(tmp_path / "sq.csv"), "--t-facets", "4", "--backend", "cli_broken",
               "--out", str(tmp_path / "o")])
    assert rc == 3


def test_sweep_command(tmp_path, capsys):
    spec = {"algorithm": "spa", "data": {"r": 3, "m": 3, "n1": 6, "n2": 2},
            "grid": {"purity": [0.7, 1.0]}, "seeds": 2}
    write_json(tmp_path / "spec.json", spec)
    assert main(["sweep", str(tmp_path / "spec.json"), "--out", str(tmp_path / "s.csv")]) == 0
    assert "wrote 4 rows" in capsys.readouterr().out
    assert main(["sweep", str(tmp_path / "none.json"), "--out", str(tmp_path / "s.csv")]) == 2


def test_unmix_cube_command(tmp_path):
    data = _datagen(tmp_path, "--purity", "0.8", "--n1", "4", "--n2", "4", "--m", "6")
    out = tmp_path / "cube"
    rc = main(["unmix-cube", str(data / "X.csv"), "--width", "4", "--height", "4", "--r", "3",
               "--gamma", "0", "--time-limit", "2", "--out", str(out)])
    assert rc == 0
    maps = np.array([read_matrix(out / f"abundance_{k}.csv") for k in range(3)])
    assert maps.shape == (3, 4, 4) and np.allclose(maps.sum(axis=0), 1, atol=1e-9)
    rc = main(["unmix-cube", str(data / "X.csv"), "--width", "5", "--height", "4", "--r", "3",
               "--out", str(out)])
    assert rc == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "polyfacet", "--version"], capture_output=True,
                         text=True, check=True)
    assert __version__ in res.stdout
