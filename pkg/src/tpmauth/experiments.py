"""Monte Carlo drivers that write the reproduction CSVs.

Every run draws its seeds from ``(master_seed, experiment, sweep point, run)``
by hashing, so output files depend only on the :class:`ExperimentSpec`.
Runs may be spread over worker processes; results are gathered in run order.
"""
from __future__ import annotations

import csv
import hashlib
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from .adversary import AttackScenario, impostor_trials, run_eavesdropper, run_mitm
from .config import make_session_config
from .inputs import ALT_TAPS, ALT_WIDTH
from .keying import TrajectoryWalker, derive_key
from .protocol import SessionConfig, Status, distance_series, run_honest_pair
from .seeding import derive_lfsr_seed, derive_seed
from .tpm import TpmParams

EXPERIMENTS = ("fig2_distance", "fig3_noise", "synctime_dist", "soundness", "collisions", "attacks")
BUCKET = 25

DEFAULT_SWEEPS = {
    "fig2_distance": ("0", "1", "10", "different"),
    "fig3_noise": (0.0, 0.05, 0.10, 0.15, 0.20),
    "soundness": (0.5, 0.75, 0.875, 0.9375, 0.99, 0.9999),
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    runs: int = 100
    sweep: tuple = ()
    master_seed: int = 0
    out_dir: Path = Path("results")
    params: TpmParams = field(default_factory=TpmParams)
    iterations: int = 5000
    key_bits: int = 2048
    workers: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {EXPERIMENTS}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @property
    def points(self) -> tuple:
        return tuple(self.sweep) or DEFAULT_SWEEPS.get(self.name, ())


def pair_configs(master: int, label, run: int, base: SessionConfig) -> tuple[SessionConfig, SessionConfig]:
    """Two honest parties sharing one input seed, each with private weight and noise seeds."""
    seed = derive_lfsr_seed(master, label, run, "inputs", width=base.stream.width)
    stream = replace(base.stream, seed=seed)
    cfgs = []
    for role in ("A", "B"):
        cfgs.append(replace(
            base, stream=stream,
            weight_seed=derive_seed(master, label, run, role, "weights"),
            noise_seed=derive_seed(master, label, run, role, "noise"),
        ))
    return cfgs[0], cfgs[1]


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# --- Figure 2: distance under input offsets --------------------------------

def _fig2_run(run: int, spec: ExperimentSpec, point: str):
    base = make_session_config(params=spec.params, mode="secret_inputs_only",
                               max_iterations=spec.iterations)
    a, b = pair_configs(spec.master_seed, "fig2", run, base)
    if point == "different":
        alt = derive_lfsr_seed(spec.master_seed, "fig2-alt", run, width=ALT_WIDTH)
        b = replace(b, stream=replace(b.stream, seed=alt, width=ALT_WIDTH, taps=ALT_TAPS))
    elif int(point):
        b = replace(b, stream=replace(b.stream, offset=int(point)))
    d, tr = distance_series(a, b, spec.iterations)
    return d, tr.status_a == Status.SYNCHRONIZED or tr.status_b == Status.SYNCHRONIZED


def fig2_distance(spec: ExperimentSpec) -> list[Path]:
    trace_rows, run_rows = [], []
    tail = min(4000, spec.iterations)
    for point in spec.points:
        results = _map(partial(_fig2_run, spec=spec, point=str(point)), range(spec.runs), spec.workers)
        traces = np.vstack([d for d, _ in results])
        mean, lo, hi = traces.mean(axis=0), traces.min(axis=0), traces.max(axis=0)
        for t in range(traces.shape[1]):
            trace_rows.append([point, t + 1, _fmt(mean[t]), _fmt(lo[t]), _fmt(hi[t])])
        for run, (d, declared) in enumerate(results):
            hit = np.flatnonzero(d == 0)
            run_rows.append([point, run, int(declared), hit[0] + 1 if hit.size else "",
                             _fmt(d[-tail:].mean()), _fmt(d.min())])
    out = spec.out_dir
    return [
        _write(out / "fig2_distance.csv", ["scenario", "t", "mean_d", "min_d", "max_d"], trace_rows),
        _write(out / "fig2_runs.csv",
               ["scenario", "run", "declared_sync", "first_zero", "tail_mean_d", "min_d"], run_rows),
    ]


# --- Figure 3: noise on one party's outputs --------------------------------

def _fig3_run(run: int, spec: ExperimentSpec, index: int, noise: float):
    base = make_session_config(params=spec.params, mode="secret_inputs_only")
    a, b = pair_configs(spec.master_seed, f"fig3-{index}", run, base)
    a = replace(a, noise_rate=noise)
    return run_honest_pair(a, b, stop="weights").weights_equal_at


def fig3_noise(spec: ExperimentSpec) -> list[Path]:
    run_rows, hist_rows = [], []
    for index, noise in enumerate(spec.points):
        noise = float(noise)
        times = _map(partial(_fig3_run, spec=spec, index=index, noise=noise), range(spec.runs), spec.workers)
        for run, t in enumerate(times):
            run_rows.append([noise, run, "" if t is None else t])
        counts = Counter(t // BUCKET * BUCKET for t in times if t is not None)
        for start in sorted(counts):
            hist_rows.append([noise, start, counts[start], _fmt(counts[start] / spec.runs)])
    out = spec.out_dir
    return [
        _write(out / "fig3_runs.csv", ["noise", "run", "sync_time"], run_rows),
        _write(out / "fig3_noise.csv", ["noise", "bucket_start", "count", "fraction"], hist_rows),
    ]


# --- synchronisation-time distribution --------------------------------------

def _synctime_run(run: int, spec: ExperimentSpec):
    base = make_session_config(params=spec.params, mode="secret_inputs_only")
    tr = run_honest_pair(*pair_configs(spec.master_seed, "synctime", run, base))
    return [run, str(tr.status_a), tr.sync_start or "", tr.sync_iteration or "",
            "" if tr.weights_equal_at is None else tr.weights_equal_at]


def synctime_dist(spec: ExperimentSpec) -> list[Path]:
    rows = _map(partial(_synctime_run, spec=spec), range(spec.runs), spec.workers)
    header = ["run", "status", "sync_start", "sync_iteration", "weights_equal_at"]
    return [_write(spec.out_dir / "synctime_dist.csv", header, rows)]


# --- soundness of the explicit authentication -------------------------------

def _soundness_point(eps: float, spec: ExperimentSpec):
    cfg = make_session_config(params=spec.params, mode="explicit_zk", epsilon=float(eps),
                              max_iterations=2000)
    return impostor_trials(cfg, spec.runs, spec.master_seed)


def soundness(spec: ExperimentSpec) -> list[Path]:
    rows = []
    for eps in spec.points:
        r = _soundness_point(float(eps), spec)
        rows.append([eps, r.alpha, r.trials, r.accepted, r.synchronized, _fmt(r.rate),
                     f"{2.0 ** -r.alpha:.6g}", f"{r.bound:.6g}"])
    header = ["epsilon", "alpha", "trials", "accepted", "synchronized", "rate", "bound", "bound_3sigma"]
    return [_write(spec.out_dir / "soundness.csv", header, rows)]


# --- key collisions ----------------------------------------------------------

def _collision_run(run: int, spec: ExperimentSpec):
    base = make_session_config(params=spec.params, mode="explicit_zk")
    tr = run_honest_pair(*pair_configs(spec.master_seed, "collisions", run, base))
    if not tr.synchronized:
        return [run, str(tr.status_a), "", 0, ""], None
    ka = derive_key(TrajectoryWalker.from_session(tr.session_a), spec.key_bits)
    kb = derive_key(TrajectoryWalker.from_session(tr.session_b), spec.key_bits)
    agree = int(np.array_equal(ka.bits, kb.bits))
    digest = hashlib.sha256(bytes.fromhex(ka.hex)).hexdigest()
    return [run, str(tr.status_a), tr.sync_iteration, agree, digest], ka.hex


def collisions(spec: ExperimentSpec) -> list[Path]:
    results = _map(partial(_collision_run, spec=spec), range(spec.runs), spec.workers)
    rows = [r for r, _ in results]
    keys = [k for _, k in results if k is not None]
    duplicates = len(keys) - len(set(keys))
    out = spec.out_dir
    return [
        _write(out / "collisions.csv",
               ["run", "status", "sync_iteration", "agree", "key_sha256"], rows),
        _write(out / "collisions_summary.csv",
               ["runs", "key_bits", "keys", "distinct", "duplicates", "disagreements"],
               [[spec.runs, spec.key_bits, len(keys), len(set(keys)), duplicates,
                 sum(1 for r in rows if r[3] == 0)]]),
    ]


# --- attacks -----------------------------------------------------------------

def attacks(spec: ExperimentSpec) -> list[Path]:
    p = spec.params
    baseline = make_session_config(params=p, mode="secret_inputs_only")
    secret = baseline
    zk = make_session_config(params=p, mode="explicit_zk")
    scenarios = [
        ("eavesdrop-public-baseline", AttackScenario("eavesdrop", "public", spec.runs, baseline, master_seed=spec.master_seed)),
        ("eavesdrop-offset1-secret", AttackScenario("eavesdrop", "offset", spec.runs, secret, offset=1, master_seed=spec.master_seed)),
        ("eavesdrop-different-secret", AttackScenario("eavesdrop", "different", spec.runs, secret, master_seed=spec.master_seed)),
        ("eavesdrop-wrongseed-zk", AttackScenario("eavesdrop", "wrong_seed", spec.runs, zk, master_seed=spec.master_seed)),
        ("mitm-public-baseline", AttackScenario("mitm", "public", spec.runs, baseline, master_seed=spec.master_seed)),
        ("mitm-wrongseed-zk", AttackScenario("mitm", "wrong_seed", spec.runs, zk, master_seed=spec.master_seed)),
    ]
    rows = []
    for name, s in scenarios:
        rep = run_eavesdropper(s) if s.kind == "eavesdrop" else run_mitm(s)
        rows.append([name, s.kind, s.attacker_inputs, s.honest_cfg.auth.mode, rep.trials,
                     rep.attacker_sync_count, rep.honest_sync_count,
                     _fmt(rep.mean_attacker_final_distance), rep.auth_reject_count,
                     rep.auth_pass_count, rep.attacked_sessions])
    header = ["scenario", "kind", "inputs", "mode", "trials", "attacker_sync", "honest_sync",
              "mean_final_distance", "auth_reject", "auth_pass", "attacked_sessions"]
    return [_write(spec.out_dir / "attacks.csv", header, rows)]


_DRIVERS = {
    "fig2_distance": fig2_distance,
    "fig3_noise": fig3_noise,
    "synctime_dist": synctime_dist,
    "soundness": soundness,
    "collisions": collisions,
    "attacks": attacks,
}


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _DRIVERS[spec.name](replace(spec, out_dir=out))


# --- summaries ---------------------------------------------------------------

class SummaryError(ValueError):
    pass


def _read_csv(path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SummaryError(f"{path}:1: empty file, header row missing") from None
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise SummaryError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            rows.append(dict(zip(header, row)))
    return header, rows


def _num(path, rows, key, line_offset=2):
    values = []
    for i, row in enumerate(rows):
        v = row[key]
        if v == "":
            continue
        try:
            values.append(float(v))
        except ValueError:
            raise SummaryError(f"{path}:{i + line_offset}: non-numeric {key}={v!r}") from None
    return np.array(values)


def _dist_stats(prefix: str, values: np.ndarray) -> dict[str, str]:
    if values.size == 0:
        return {f"{prefix}.n": "0"}
    buckets = Counter((values // BUCKET * BUCKET).astype(int).tolist())
    mode = max(sorted(buckets), key=lambda k: buckets[k])
    q = np.quantile(values, [0.1, 0.25, 0.5, 0.75, 0.9])
    return {
        f"{prefix}.n": str(values.size),
        f"{prefix}.mean": f"{values.mean():.2f}",
        f"{prefix}.median": f"{q[2]:.1f}",
        f"{prefix}.q10": f"{q[0]:.1f}",
        f"{prefix}.q25": f"{q[1]:.1f}",
        f"{prefix}.q75": f"{q[3]:.1f}",
        f"{prefix}.q90": f"{q[4]:.1f}",
        f"{prefix}.mode_bucket": f"{mode}-{mode + BUCKET}",
    }


def summarize_files(csv_paths) -> dict[str, str]:
    """Key statistics of experiment CSVs as an ordered ``key -> value`` mapping."""
    out: dict[str, str] = {}
    for path in csv_paths:
        header, rows = _read_csv(path)
        name = Path(path).stem
        if "sync_start" in header:
            out.update(_dist_stats(f"{name}.sync_start", _num(path, rows, "sync_start")))
            out[f"{name}.unsynchronized"] = str(sum(r["status"] != "synchronized" for r in rows))
        elif "sync_time" in header:
            groups = defaultdict(list)
            for r in rows:
                groups[r["noise"]].append(r)
            for noise, grp in groups.items():
                vals = _num(path, grp, "sync_time")
                out.update(_dist_stats(f"{name}.noise={noise}", vals))
                out[f"{name}.noise={noise}.failed"] = str(len(grp) - vals.size)
        elif "tail_mean_d" in header:
            groups = defaultdict(list)
            for r in rows:
                groups[r["scenario"]].append(r)
            for scen, grp in groups.items():
                tail = _num(path, grp, "tail_mean_d")
                out[f"{name}.{scen}.tail_mean_d"] = f"{tail.mean():.4f}"
                out[f"{name}.{scen}.min_d"] = f"{_num(path, grp, 'min_d').min():.4f}"
                out[f"{name}.{scen}.reached_zero"] = str(sum(r["first_zero"] != "" for r in grp))
                out[f"{name}.{scen}.synchronized"] = str(sum(r["declared_sync"] == "1" for r in grp))
        elif "bound_3sigma" in header:
            for r in rows:
                key = f"{name}.alpha={r['alpha']}"
                out[f"{key}.rate"] = r["rate"]
                out[f"{key}.bound"] = r["bound"]
                out[f"{key}.within_bound"] = str(float(r["rate"]) <= float(r["bound_3sigma"]))
        elif "duplicates" in header:
            for k in ("runs", "keys", "duplicates", "disagreements"):
                out[f"{name}.{k}"] = rows[0][k] if rows else "0"
        elif "key_sha256" in header:
            keys = [r["key_sha256"] for r in rows if r["key_sha256"]]
            out[f"{name}.keys"] = str(len(keys))
            out[f"{name}.duplicates"] = str(len(keys) - len(set(keys)))
        elif "attacker_sync" in header:
            for r in rows:
                out[f"{name}.{r['scenario']}.attacker_sync"] = r["attacker_sync"]
                out[f"{name}.{r['scenario']}.auth_pass"] = f"{r['auth_pass']}/{r['attacked_sessions']}"
        else:
            out[f"{name}.rows"] = str(len(rows))
    return out


def summarize(csv_paths) -> str:
    """Human-readable summary followed by a machine-readable ``key=value`` block."""
    stats = summarize_files(csv_paths)
    if not stats:
        return ""
    lines = []
    current = None
    for key, value in stats.items():
        group = key.split(".", 1)[0]
        if group != current:
            lines.append(f"== {group}")
            current = group
        lines.append(f"  {key.split('.', 1)[1]:<40} {value}")
    lines.append("")
    lines.append("[summary]")
    lines.extend(f"{k}={v}" for k, v in stats.items())
    return "\n".join(lines) + "\n"

