import json

import numpy as np
import pytest

from emitpair.cli import EXIT_CONFIG, EXIT_GEOMETRY, EXIT_NUMERICAL, EXIT_OK, main
from emitpair.gridio import import_csv


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


SMALL_MEDIUM = {
    "seed": 5,
    "n_scatterers": 40,
    "region": {"x0": -1.5, "y0": -1.5, "width": 3.0, "height": 3.0},
    "alpha_bare": 2.9323,
    "exclusion_radius": 0.05,
    "mode": "TE",
    "wavelength_nm": 698.0,
}


def small_map_config(out, threads=1, nx=21, ny=21):
    return {
        "version": 1,
        "command": "g2-map",
        "threads": threads,
        "out": out,
        "medium": SMALL_MEDIUM,
        "emitters": {"r1": [0.0, 0.0], "r2": [1.0, 0.0]},
        "grid": {"origin": [-1.5, -1.5], "extent": [3.0, 3.0], "nx": nx, "ny": ny},
    }


class TestGenMedium:
    def test_byte_identical_across_runs(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["gen-medium", "--seed", "42", "--out", "a"]) == EXIT_OK
        assert main(["gen-medium", "--seed", "42", "--out", "b"]) == EXIT_OK
        assert (tmp_path / "a.medium.json").read_bytes() == \
            (tmp_path / "b.medium.json").read_bytes()

    def test_seed_changes_output(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        main(["gen-medium", "--seed", "1", "--out", "a"])
        main(["gen-medium", "--seed", "2", "--out", "b"])
        assert (tmp_path / "a.medium.json").read_bytes() != \
            (tmp_path / "b.medium.json").read_bytes()


class TestDiagnose:
    def test_writes_diagnostics(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        dense = dict(SMALL_MEDIUM, n_scatterers=150)   # thickness > 3 at this density
        cfg = write_config(tmp_path / "c.json", {
            "command": "diagnose", "medium": dense, "out": "d"})
        assert main(["diagnose", "--config", cfg]) == EXIT_OK
        data = json.loads((tmp_path / "d.diagnostics.json").read_text())
        assert data["k_ell"] > 1.0
        assert data["optical_thickness"] > 3.0
        assert data["diffusive"] is True


class TestG2Command:
    def test_report_written(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write_config(tmp_path / "c.json", {
            "command": "g2",
            "out": "r",
            "medium": {"n_scatterers": 0, "mode": "TM"},
            "emitters": {"r1": [-0.25, 0.0], "r2": [0.25, 0.0]},
            "detectors": {"a": {"r": [0.0, 1.3]}, "b": {"r": [0.0, -2.1]}},
        })
        assert main(["g2", "--config", cfg]) == EXIT_OK
        rep = json.loads((tmp_path / "r.report.json").read_text())
        # both detectors on the perpendicular bisector: maximal coincidence
        assert rep["g2"] == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= rep["big_g2"] <= 1.0
        assert rep["classification"] in ("superradiant", "subradiant", "intermediate")

    def test_requires_config(self):
        assert main(["g2"]) == EXIT_CONFIG


class TestG2Map:
    def test_end_to_end_raster(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write_config(tmp_path / "c.json", small_map_config("m"))
        assert main(["g2-map", "--config", cfg]) == EXIT_OK
        grid = import_csv(tmp_path / "m.g2.csv")
        finite = grid.values[np.isfinite(grid.values)]
        assert finite.size
        assert np.all(finite >= 0.0) and np.all(finite <= 1.0 + 1e-12)
        assert (tmp_path / "m.g2.pgm").exists()
        assert (tmp_path / "m.g2.pgm.mask.pgm").exists()
        cls = import_csv(tmp_path / "m.classification.csv")
        v, c = grid.values, cls.values
        ok = np.isfinite(v)
        assert np.all(c[ok & (1 - v <= 0.05)] == 1.0)
        assert np.all(c[ok & (v <= 0.05) & (1 - v > 0.05)] == 0.0)

    def test_deterministic_across_runs_and_threads(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        blobs = {}
        for tag, threads in (("t1a", 1), ("t1b", 1), ("t8", 8)):
            cfg = write_config(tmp_path / f"{tag}.json",
                               small_map_config(tag, threads=threads))
            assert main(["g2-map", "--config", cfg]) == EXIT_OK
            blobs[tag] = (tmp_path / f"{tag}.g2.csv").read_bytes()
        assert blobs["t1a"] == blobs["t1b"] == blobs["t8"]


class TestDosMaps:
    def test_outputs(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write_config(tmp_path / "c.json", {
            "command": "dos-maps",
            "out": "d",
            "medium": SMALL_MEDIUM,
            "emitters": {"r1": [0.0, 0.0], "r2": [1.0, 0.0]},
            "grid": {"origin": [-1.0, -1.0], "extent": [2.0, 2.0], "nx": 11, "ny": 11},
        })
        assert main(["dos-maps", "--config", cfg]) == EXIT_OK
        ldos = import_csv(tmp_path / "d.ldos.csv")
        cdos = import_csv(tmp_path / "d.cdos.csv")
        ok = np.isfinite(ldos.values)
        assert np.all(ldos.values[ok] >= -1e-12)
        assert np.all(np.isfinite(cdos.values[ok]))


class TestFindDetectors:
    def test_search_and_exit_codes(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write_config(tmp_path / "c.json", {
            "command": "find-detectors",
            "out": "s",
            "medium": {"n_scatterers": 0, "mode": "TM"},
            "emitters": {"r1": [-0.16, 0.0], "r2": [0.16, 0.0]},
            "search": {"region": {"x0": -0.5, "y0": 0.3, "width": 1.0, "height": 0.7},
                       "target": "maximize", "coarse": 7},
        })
        assert main(["find-detectors", "--config", cfg]) == EXIT_OK
        out = json.loads((tmp_path / "s.detectors.json").read_text())
        assert out["g2"] >= 1.0 - 1e-6

    def test_geometry_error_exit(self, tmp_path):
        # emitter inside the search region -> exit 3
        cfg = write_config(tmp_path / "c.json", {
            "command": "find-detectors",
            "medium": {"n_scatterers": 0, "mode": "TM"},
            "emitters": {"r1": [0.0, 0.0], "r2": [1.0, 0.0]},
            "search": {"region": {"x0": -1.0, "y0": -1.0, "width": 2.0, "height": 2.0}},
        })
        assert main(["find-detectors", "--config", cfg]) == EXIT_GEOMETRY


class TestExitCodes:
    def test_unknown_key_exits_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"command": "g2", "bogus": 1})
        assert main(["g2", "--config", cfg]) == EXIT_CONFIG

    def test_command_mismatch_exits_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"command": "g2"})
        assert main(["diagnose", "--config", cfg]) == EXIT_CONFIG

    def test_missing_config_file_exits_config(self):
        assert main(["g2", "--config", "/nonexistent/path.json"]) == EXIT_CONFIG

    def test_missing_section_exits_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {
            "command": "g2", "medium": {"n_scatterers": 0, "mode": "TM"}})
        assert main(["g2", "--config", cfg]) == EXIT_CONFIG

    def test_numerical_error_exits_two(self, tmp_path):
        # TE detectors blind to both emitters: undefined correlation
        cfg = write_config(tmp_path / "c.json", {
            "command": "g2",
            "medium": {"n_scatterers": 0, "mode": "TE"},
            "emitters": {"r1": [0.0, 0.0], "r2": [0.5, 0.0],
                         "u1": [1.0, 0.0], "u2": [1.0, 0.0]},
            "detectors": {"a": {"r": [2.0, 0.0], "e": [0.0, 1.0]},
                          "b": {"r": [3.0, 0.0], "e": [1.0, 0.0]}},
        })
        assert main(["g2", "--config", cfg]) == EXIT_NUMERICAL

    def test_packing_error_exits_geometry(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write_config(tmp_path / "c.json", {
            "command": "gen-medium",
            "medium": {"seed": 1, "n_scatterers": 50,
                       "region": {"x0": 0.0, "y0": 0.0, "width": 0.1, "height": 0.1},
                       "alpha_bare": 1.0, "exclusion_radius": 0.5, "mode": "TM"},
        })
        assert main(["gen-medium", "--config", cfg]) == EXIT_GEOMETRY


class TestDefaultMapConfig:
    def test_default_diffusive_map_end_to_end(self, tmp_path, monkeypatch):
        # no config: the built-in diffusive medium and 201x201 grid
        monkeypatch.chdir(tmp_path)
        assert main(["g2-map", "--threads", "8", "--out", "fig"]) == EXIT_OK
        grid = import_csv(tmp_path / "fig.g2.csv")
        assert (grid.nx, grid.ny) == (201, 201)
        finite = grid.values[np.isfinite(grid.values)]
        assert np.all(finite >= 0.0) and np.all(finite <= 1.0 + 1e-12)
        assert grid.metadata["k_ell"] == pytest.approx(5.0, abs=1.0)


class TestValidateCommand:
    def test_runs_green(self, capsys):
        assert main(["validate"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestEntryPoint:
    def test_module_invocation(self):
        import subprocess
        import sys
        proc = subprocess.run([sys.executable, "-m", "emitpair", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "emitpair" in proc.stdout
