import numpy as np
import pytest

from graph2ts import fileio
from graph2ts.cli import load_config_file, main
from graph2ts.dataset import synth_generate


@pytest.fixture
def series_file(tmp_path):
    rng = np.random.default_rng(42)
    values = np.cumsum(rng.standard_normal(2400)) * 0.1 + np.sin(np.arange(2400) / 9.0)
    p = tmp_path / "series.txt"
    p.write_text("signal\n" + "\n".join(repr(float(v)) for v in values) + "\n")
    return p


def run(*argv):
    return main([str(a) for a in argv])


class TestConfigFile:
    def test_parse_and_coerce(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("epochs = 7\nlr = 0.001  # comment\nvariant = no_graph\n")
        cfg = load_config_file(p)
        assert cfg == {"epochs": 7, "lr": 0.001, "variant": "no_graph"}

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("learning_rate = 0.1\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config_file(p)

    def test_flag_overrides_file(self, tmp_path, series_file, capsys):
        p = tmp_path / "run.cfg"
        p.write_text("window_length = 8\nstride = 8\n")
        out = tmp_path / "w.txt"
        assert run("ingest", "--input", series_file, "--out", out,
                   "--config", p, "--window-length", "16") == 0
        assert fileio.read_windows(out).shape[1] == 16


class TestPipelineCommands:
    def test_ingest(self, tmp_path, series_file):
        out = tmp_path / "w.txt"
        assert run("ingest", "--input", series_file, "--out", out,
                   "--window-length", "32", "--stride", "32") == 0
        w = fileio.read_windows(out)
        assert w.shape == (75, 32)

    def test_graph_with_sidecar_and_reuse(self, tmp_path):
        wfile = tmp_path / "w.txt"
        fileio.write_windows(wfile, synth_generate("sine_mix", 30, 32, 1))
        gfile = tmp_path / "g.txt"
        assert run("graph", "--windows", wfile, "--out", gfile, "--n-states", "5") == 0
        graphs, q = fileio.read_graphs(gfile)
        assert q == 5 and graphs.shape == (30, 25)
        bounds = fileio.read_boundaries(str(gfile) + ".boundaries")
        assert bounds.n_states == 5
        # reuse the sidecar for another window file
        gfile2 = tmp_path / "g2.txt"
        assert run("graph", "--windows", wfile, "--out", gfile2,
                   "--boundaries", str(gfile) + ".boundaries") == 0
        assert np.array_equal(fileio.read_graphs(gfile2)[0], graphs)

    def test_full_small_pipeline(self, tmp_path):
        wfile = tmp_path / "w.txt"
        fileio.write_windows(wfile, synth_generate("sine_mix", 60, 32, 5))
        rundir = tmp_path / "run"
        assert run("train", "--windows", wfile, "--outdir", rundir,
                   "--epochs", "2", "--batch-size", "16", "--embed-dim", "8",
                   "--latent-dim", "2", "--seed", "5") == 0
        for name in ("checkpoint.g2ts", "loss_log.csv", "boundaries.txt",
                     "eval_windows.txt", "eval_graphs.txt"):
            assert (rundir / name).exists()
        synth = tmp_path / "synth.txt"
        assert run("generate", "--checkpoint", rundir / "checkpoint.g2ts",
                   "--graphs", rundir / "eval_graphs.txt", "--out", synth,
                   "--seed", "5") == 0
        report = tmp_path / "metrics.txt"
        curves = tmp_path / "curves"
        embeds = tmp_path / "emb"
        assert run("eval", "--real", rundir / "eval_windows.txt", "--synth", synth,
                   "--out", report, "--curves-dir", curves,
                   "--embeddings-dir", embeds,
                   "--checkpoint", rundir / "checkpoint.g2ts") == 0
        assert report.read_text().startswith("# graph2ts-metrics v1\n")
        assert (curves / "acf_real.csv").exists()
        assert (curves / "psd_synth.csv").exists()
        first = (embeds / "real_embeddings.txt").read_text().splitlines()[0]
        assert first == "# graph2ts-embeddings v1 D=8"
        stats = tmp_path / "tails.txt"
        assert run("stats", "--windows", synth, "--out", stats) == 0
        assert stats.read_text().startswith("# graph2ts-tailstats v1\n")

    def test_generate_q_mismatch(self, tmp_path):
        wfile = tmp_path / "w.txt"
        fileio.write_windows(wfile, synth_generate("sine_mix", 40, 32, 5))
        rundir = tmp_path / "run"
        run("train", "--windows", wfile, "--outdir", rundir, "--epochs", "1",
            "--batch-size", "16", "--embed-dim", "8", "--latent-dim", "2")
        gfile = tmp_path / "g5.txt"
        run("graph", "--windows", wfile, "--out", gfile, "--n-states", "5")
        rc = run("generate", "--checkpoint", rundir / "checkpoint.g2ts",
                 "--graphs", gfile, "--out", tmp_path / "s.txt")
        assert rc == 2  # reported as an error, not a traceback

    def test_ablate_grid(self, tmp_path):
        wfile = tmp_path / "w.txt"
        fileio.write_windows(wfile, synth_generate("sine_mix", 60, 32, 6))
        out = tmp_path / "ablation.csv"
        assert run("ablate", "--windows", wfile, "--out", out, "--epochs", "1",
                   "--batch-size", "16", "--embed-dim", "8", "--latent-dim", "2",
                   "--seed", "6") == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# graph2ts-ablation v1"
        assert lines[1].startswith("config,wasserstein,ks,")
        labels = [ln.split(",")[0] for ln in lines[2:]]
        assert labels == ["full", "no_graph", "deterministic",
                          "w_recon=0", "w_align=0", "w_dist=0", "beta_max=0"]


class TestChecks:
    def test_selfcheck(self, capsys):
        assert run("selfcheck") == 0
        out = capsys.readouterr().out
        assert "fig1: PASS" in out
        assert "metric_identities: PASS" in out

    def test_gradcheck_small(self, tmp_path, capsys):
        report = tmp_path / "gc.txt"
        rc = run("gradcheck", "--embed-dim", "6", "--latent-dim", "2",
                 "--out", report, "--seed", "2")
        assert rc == 0
        text = report.read_text()
        assert text.startswith("# graph2ts-gradcheck v1\n")
        assert "status=PASS" in text
        assert "PASS" in capsys.readouterr().out
