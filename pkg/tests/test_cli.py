import math
import subprocess
import sys

import numpy as np
import pytest

from pertspec import io
from pertspec.cli import main
from pertspec.config import ExperimentConfig, format_config, load_config, parse_config_text
from pertspec.errors import ConfigError, MetadataMismatch
from pertspec.limits import kappa
from pertspec.pointprocess import (CorrelationEstimate, RescaledProcess, SpectrumRecord, bin_averaged_curve,
                                   default_bin_edges)

SMALL = ["model=torus_exp", "h=0.1", "realizations=3", "windowRadius=2", "masterSeed=42"]


def sets(items):
    out = []
    for it in items:
        out += ["--set", it]
    return out


def test_config_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# torus run\nmodel = torus_exp   # inline comment\n\ndelta_exponent = 5\nz0 = 1.6+0.1i\n"
                 "clamp = yes\nsigmaPlus = 0.5, 1.0\n")
    cfg = load_config(p, ["realizations=7", "DELTAEXPONENT=4.5"])
    assert cfg.model == "torus_exp" and cfg.z0 == 1.6 + 0.1j and cfg.clamp
    assert cfg.realizations == 7 and cfg.deltaExponent == 4.5
    assert cfg.sigmaPlus == (0.5, 1.0)
    assert cfg.delta == pytest.approx(0.01**4.5)


@pytest.mark.parametrize("bad", ["deltaExponent=3", "realizations=0", "model=foo", "law=cauchy",
                                 "nonsense=1", "h=abc", "q=0", "gamma=1,2"])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        load_config(None, [bad])


def test_config_roundtrip():
    cfg = load_config(None, ["z0=0.5-0.25j", "gamma=0.5,1.5,0.5,1.5", "clamp=true"])
    again = ExperimentConfig(**parse_config_text(format_config(cfg)))
    assert again == cfg


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    recs = [SpectrumRecord(0.01, 1e-8, 17 + i, "spectrum", rng.normal(size=5) + 1j * rng.normal(size=5)) for i in range(3)]
    io.write_spectra(tmp_path / "s.csv", recs)
    back = io.read_spectra(tmp_path / "s.csv")
    for a, b in zip(recs, back):
        assert np.array_equal(a.eigenvalues, b.eigenvalues) and a.seed == b.seed and a.h == b.h and a.delta == b.delta
    procs = [RescaledProcess(1.6 + 0.1j, 0.01, 2.0, rng.normal(size=k) * 0.5 + 0j) for k in (3, 0, 2)]
    io.write_rescaled(tmp_path / "r.csv", "ens", procs)
    ens = io.read_rescaled(tmp_path / "r.csv")
    assert ens.ensemble == "ens" and len(ens.processes) == 3
    for a, b in zip(procs, ens.processes):
        assert np.array_equal(a.points, b.points) and a.z0 == b.z0 and a.windowRadius == b.windowRadius
    e = np.linspace(0, 4, 5)
    est = CorrelationEstimate(e, np.array([1, 2, 3, 4]), rng.uniform(size=4), rng.uniform(size=4), 9, 0.3)
    io.write_corr(tmp_path / "c.csv", est)
    got = io.read_corr(tmp_path / "c.csv")
    assert np.array_equal(got.binEdges, e) and np.array_equal(got.khat, est.khat)
    assert np.array_equal(got.stderr, est.stderr) and np.array_equal(got.pairCounts, est.pairCounts)
    curves = {"a": (np.array([0.0, 1.0]), np.array([0.5, 0.25])), "b": (np.array([2.0]), np.array([1 / 3]))}
    io.write_curves(tmp_path / "k.csv", curves)
    back = io.read_curves(tmp_path / "k.csv")
    assert all(np.array_equal(back[k][0], curves[k][0]) and np.array_equal(back[k][1], curves[k][1]) for k in curves)


def test_csv_headers(tmp_path):
    assert main(["spectrum", "--out", str(tmp_path)] + sets(SMALL)) == 0
    assert (tmp_path / "spectra.csv").read_text().splitlines()[0] == "realization,seed,h,delta,re,im"
    assert (tmp_path / "rescaled.csv").read_text().splitlines()[0] == "ensemble,z0_re,z0_im,h,R,realization,w_re,w_im"


def test_spectrum_deterministic_across_runs_and_threads(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["spectrum", "--out", str(a)] + sets(SMALL)) == 0
    assert main(["spectrum", "--out", str(b)] + sets(SMALL)) == 0
    assert main(["spectrum", "--out", str(c), "--threads", "3"] + sets(SMALL)) == 0
    for name in ("spectra.csv", "rescaled.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_spectrum_vanishing_delta(tmp_path):
    assert main(["spectrum", "--out", str(tmp_path)] + sets(SMALL + ["realizations=1", "deltaExponent=400"])) == 0
    ev = io.read_spectra(tmp_path / "spectra.csv")[0].eigenvalues
    K = (ev.size - 1) // 2
    target = (0.1 * np.arange(-K, K + 1)) ** 2
    assert np.max(np.abs(np.sort(ev.real) - np.sort(target))) < 1e-12
    assert np.max(np.abs(ev.imag)) < 1e-12


def test_partial_outputs_removed(tmp_path, monkeypatch):
    import pertspec.cli as cli

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(cli.io, "write_rescaled", boom)
    out = tmp_path / "o"
    assert main(["spectrum", "--out", str(out)] + sets(SMALL)) == 1
    assert not (out / "spectra.csv").exists()
    assert list(out.iterdir()) == []


def test_gaf_command_density(tmp_path):
    R, sigma = 3.0, 0.5
    args = ["gaf", "--out", str(tmp_path)] + sets(["sigmaPlus=0.5", "realizations=400", f"windowRadius={R}"])
    assert main(args) == 0
    ens = io.read_rescaled(tmp_path / "rescaled.csv")
    assert ens.ensemble == "gaf_product"
    counts = np.array([p.points.size for p in ens.processes])
    assert counts.size == 400
    assert abs(counts.mean() - sigma * R * R) <= 3 * counts.std(ddof=1) / math.sqrt(counts.size)


def test_gaf_det_command(tmp_path):
    args = ["gaf", "--out", str(tmp_path)] + sets(["gafKind=det", "realizations=5", "windowRadius=2",
                                                    "sigmaPlus=0.6,0.3", "sigmaMinus=0.6,0.3"])
    assert main(args) == 0
    assert io.read_rescaled(tmp_path / "rescaled.csv").ensemble == "gaf_det"


def test_correlate_and_report_exit_codes(tmp_path):
    common = ["sigmaPlus=0.5", "windowRadius=4"]
    assert main(["gaf", "--out", str(tmp_path)] + sets(common + ["realizations=300"])) == 0
    assert main(["correlate", "--out", str(tmp_path)] + sets(common)) == 0
    est = io.read_corr(tmp_path / "corr.csv")
    assert est.khat.size == 40  # default bin count
    assert main(["report", "--out", str(tmp_path)] + sets(common + ["theory=kappa"])) == 0
    for name in ("curves.csv", "report.txt", "figure.svg"):
        assert (tmp_path / name).exists()
    svg = (tmp_path / "figure.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg and "<circle" in svg
    # the wrong theory is flagged with the statistical-failure status
    assert main(["report", "--out", str(tmp_path)] + sets(common + ["theory=ginibre"])) == 2


def test_report_exact_kappa_samples(tmp_path):
    sigma, R = 0.5, 5.0
    e = default_bin_edges(sigma)
    k = bin_averaged_curve(lambda u: kappa(sigma * u / 2), e, R)
    io.write_corr(tmp_path / "corr.csv", CorrelationEstimate(e, np.ones(40, int), k, np.full(40, 0.01), 2, 0.1))
    assert main(["report", "--out", str(tmp_path)] + sets(["sigmaPlus=0.5", "windowRadius=5", "theory=kappa"])) == 0
    assert "max_abs_z 0\n" in (tmp_path / "report.txt").read_text()


def test_correlate_metadata_mismatch(tmp_path):
    p1 = [RescaledProcess(0j, 1.0, 2.0, np.array([0.1, 0.5j]))] * 2
    p2 = [RescaledProcess(0j, 1.0, 3.0, np.array([0.1, 0.5j]))] * 2
    io.write_rescaled(tmp_path / "a.csv", "x", p1)
    io.write_rescaled(tmp_path / "b.csv", "x", p2)
    assert main(["correlate", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path)]) == 1
    with pytest.raises(MetadataMismatch):
        from pertspec.cli import cmd_correlate
        import argparse

        cmd_correlate(argparse.Namespace(inputs=[tmp_path / "a.csv", tmp_path / "b.csv"], out=str(tmp_path)),
                      load_config(None, []))


def test_weyl_command(tmp_path, capsys):
    args = ["weyl", "--out", str(tmp_path)] + sets(["model=complex_ho", "h=0.05", "realizations=2",
                                                     "gamma=0.5,1.5,0.5,1.5", "weylTolerance=0.25"])
    code = main(args)
    out = capsys.readouterr().out
    assert "meanCount" in out and "predicted" in out
    assert code in (0, 2)
    assert main(["weyl"] + sets(["model=complex_ho"])) == 1  # gamma missing


def test_bad_config_exit_code():
    assert main(["spectrum", "--set", "deltaExponent=2"]) == 1
    assert main(["spectrum", "--threads", "0"]) == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pertspec", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "spectrum" in r.stdout
