import csv
import filecmp

import pytest

from tpmauth.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    SummaryError,
    run_experiment,
    summarize,
    summarize_files,
)

HEADERS = {
    "fig2_distance.csv": ["scenario", "t", "mean_d", "min_d", "max_d"],
    "fig2_runs.csv": ["scenario", "run", "declared_sync", "first_zero", "tail_mean_d", "min_d"],
    "fig3_runs.csv": ["noise", "run", "sync_time"],
    "fig3_noise.csv": ["noise", "bucket_start", "count", "fraction"],
    "synctime_dist.csv": ["run", "status", "sync_start", "sync_iteration", "weights_equal_at"],
    "soundness.csv": ["epsilon", "alpha", "trials", "accepted", "synchronized", "rate", "bound",
                      "bound_3sigma"],
    "collisions.csv": ["run", "status", "sync_iteration", "agree", "key_sha256"],
    "collisions_summary.csv": ["runs", "key_bits", "keys", "distinct", "duplicates", "disagreements"],
    "attacks.csv": ["scenario", "kind", "inputs", "mode", "trials", "attacker_sync", "honest_sync",
                    "mean_final_distance", "auth_reject", "auth_pass", "attacked_sessions"],
}

SMALL_SWEEPS = {
    "fig2_distance": ("0", "1", "different"),
    "fig3_noise": (0.0, 0.1),
    "soundness": (0.5, 0.9999),
}


def spec(name, out, **kw):
    kw.setdefault("runs", 3)
    kw.setdefault("sweep", SMALL_SWEEPS.get(name, ()))
    kw.setdefault("iterations", 600)
    return ExperimentSpec(name, out_dir=out, master_seed=11, **kw)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    return {name: run_experiment(spec(name, out)) for name in EXPERIMENTS}


def test_schemas(outputs):
    for paths in outputs.values():
        for p in paths:
            assert read(p)[0] == HEADERS[p.name]


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_deterministic(outputs, tmp_path, name):
    again = run_experiment(spec(name, tmp_path))
    for a, b in zip(outputs[name], again):
        assert filecmp.cmp(a, b, shallow=False)


def test_workers_do_not_change_output(outputs, tmp_path):
    again = run_experiment(spec("synctime_dist", tmp_path, workers=2))
    assert filecmp.cmp(outputs["synctime_dist"][0], again[0], shallow=False)


def test_fig2_offset_zero_reaches_and_keeps_zero(outputs):
    rows = read(outputs["fig2_distance"][0])[1:]
    zero = [float(r[4]) for r in rows if r[0] == "0"]  # max over runs
    assert len(zero) == 600 and zero[-1] == 0.0
    first = next(i for i, d in enumerate(zero) if d == 0.0)
    assert all(d == 0.0 for d in zero[first:])
    runs = read(outputs["fig2_distance"][1])[1:]
    assert all(r[2] == "0" for r in runs if r[0] != "0")


def test_fig3_histogram_consistent(outputs):
    runs = read(outputs["fig3_noise"][0])[1:]
    hist = read(outputs["fig3_noise"][1])[1:]
    for noise in ("0.0", "0.1"):
        times = [int(r[2]) for r in runs if r[0] == noise and r[2]]
        counts = {int(h[1]): int(h[2]) for h in hist if h[0] == noise}
        assert sum(counts.values()) == len(times)
        for t in times:
            assert t // 25 * 25 in counts


def test_soundness_rows(outputs):
    rows = read(outputs["soundness"][0])[1:]
    assert [r[1] for r in rows] == ["1", "14"]
    assert all(int(r[3]) <= int(r[2]) for r in rows)


def test_collisions(outputs):
    summary = read(outputs["collisions"][1])[1]
    assert summary == ["3", "2048", "3", "3", "0", "0"]


def test_attacks_rows(outputs):
    rows = {r[0]: r for r in read(outputs["attacks"][0])[1:]}
    assert len(rows) == 6
    assert rows["mitm-wrongseed-zk"][9] == "0"


def test_summary_reports(outputs):
    text = summarize(outputs["synctime_dist"])
    assert "synctime_dist.sync_start.median=" in text
    assert "synctime_dist.sync_start.mode_bucket=" in text
    stats = summarize_files(outputs["soundness"])
    assert stats["soundness.alpha=14.bound"] == "6.10352e-05"
    assert "soundness.alpha=14.rate" in stats


def test_summary_empty():
    assert summarize([]) == ""


def test_summary_malformed_names_line(tmp_path):
    p = tmp_path / "synctime_dist.csv"
    p.write_text("run,status,sync_start,sync_iteration,weights_equal_at\n0,synchronized,3,4,5\n1,oops\n")
    with pytest.raises(SummaryError, match=r"synctime_dist.csv:3"):
        summarize([p])
    p.write_text("run,status,sync_start,sync_iteration,weights_equal_at\n0,synchronized,x,4,5\n")
    with pytest.raises(SummaryError, match=r":2: non-numeric"):
        summarize([p])
    p.write_text("")
    with pytest.raises(SummaryError, match=":1:"):
        summarize([p])


def test_invalid_spec(tmp_path):
    with pytest.raises(ValueError):
        ExperimentSpec("fig9", out_dir=tmp_path)
    with pytest.raises(ValueError):
        ExperimentSpec("soundness", runs=0, out_dir=tmp_path)


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_experiment(spec("synctime_dist", blocker / "sub"))
