"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (lines appear on the
terminal even without ``-s``) or ``python tests/test_acceptance.py``.
"""

import itertools
import math
import time

import numpy as np
import pytest

from handgeom import codes, contour, evaluation, experiment, features, mlp, pipeline, synth
from handgeom.errors import DefectiveAcquisition

BCH_TABLE = [(7, 4, 1), (15, 11, 1), (15, 7, 2), (15, 5, 3), (31, 21, 2), (31, 16, 3), (31, 11, 5), (31, 6, 7)]
MASTER_SEED = 42


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


# -- 1 ------------------------------------------------------------------------

def test_criterion_1_bch_minimum_distance(report):
    t0 = time.perf_counter()
    dists = {}
    for n, k, t in BCH_TABLE:
        dists[n, k] = codes.min_distance(codes.bch_new(n, k))
    enum_ok = all(dists[n, k] >= 2 * t + 1 for n, k, t in BCH_TABLE)

    # (31,26): one million random nonzero messages
    c = codes.bch_new(31, 26)
    rng = np.random.default_rng(2026)
    msgs = rng.integers(1, 1 << 26, size=1_000_000, dtype=np.int64)
    cw = np.zeros_like(msgs)
    for i, row in enumerate(c.generator_rows):
        cw ^= np.where((msgs >> (25 - i)) & 1, row, 0)
    weight = int(np.bitwise_count(cw).min())
    # spot-check the vectorised encoder against the scalar one
    spot = all(codes.bits_to_int(codes.bch_encode(c, codes.int_to_bits(int(m), 26))) == int(w)
               for m, w in zip(msgs[:500], cw[:500]))
    elapsed = time.perf_counter() - t0
    ok = enum_ok and weight >= 3 and spot and elapsed < 60
    report(1, ok, f"dmin={ {f'{n},{k}': d for (n, k), d in dists.items()} } (31,26) min sampled weight={weight} "
                  f"time={elapsed:.1f}s")


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_error_correction(report):
    failures = {}
    c74 = codes.bch_new(7, 4)
    bad = 0
    for m in itertools.product([0, 1], repeat=4):
        cw = codes.bch_encode(c74, np.array(m))
        for flips in itertools.chain([()], itertools.combinations(range(7), 1)):
            r = cw.copy()
            r[list(flips)] ^= 1
            bad += not np.array_equal(codes.nearest_codeword(c74, r), cw)
    failures["7,4 exhaustive"] = bad
    for n, k, t in BCH_TABLE[1:] + [(31, 26, 1)]:
        c = codes.bch_new(n, k)
        rng = np.random.default_rng([n, k])
        bad = 0
        for _ in range(1000):
            msg = rng.integers(0, 2, k)
            cw = codes.bch_encode(c, msg)
            w = int(rng.integers(0, t + 1))
            r = cw.copy()
            r[rng.choice(n, size=w, replace=False)] ^= 1
            dec = codes.nearest_codeword(c, r)
            bad += dec is None or not np.array_equal(dec, cw) or not np.array_equal(dec[:k], msg)
        failures[f"{n},{k}"] = bad
    report(2, not any(failures.values()), f"decode failures per code: {failures}")


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_chain_perimeter(report):
    rng = np.random.default_rng(3)
    bad = []
    for _ in range(20):
        w, h = (int(v) for v in rng.integers(2, 120, 2))
        m = np.zeros((h + 4, w + 4), dtype=bool)
        m[2:2 + h, 2:2 + w] = True
        p = contour.perimeter(contour.trace_contour(m, min_pixels=1))
        if p != 2 * (w - 1) + 2 * (h - 1):
            bad.append((w, h, p))
    side = 60
    c = side + 2
    yy, xx = np.mgrid[0:2 * c + 1, 0:2 * c + 1]
    diamond = (np.abs(xx - c) + np.abs(yy - c)) <= side - 1
    p = contour.perimeter(contour.trace_contour(diamond))
    expected = 4 * (side - 1) * math.sqrt(2)
    rel = abs(p - expected) / expected
    report(3, not bad and rel < 0.01, f"rectangle mismatches={bad} diamond rel.err={rel:.2e}")


# -- 4 ------------------------------------------------------------------------

def _loop_rate(s):
    n, _, k = s.shape
    hits = 0
    for i in range(n):
        for t in range(k):
            if all(s[i, i, t] > s[i, j, t] for j in range(n) if j != i):
                hits += 1
    return hits / (n * k)


def _exhaustive_dcf(gen, imp, p_true=0.5):
    best = None
    for thr in [-math.inf] + sorted(set(gen) | set(imp)) + [math.inf]:
        p_miss = sum(g < thr for g in gen) / len(gen)
        p_fa = sum(i >= thr for i in imp) / len(imp)
        cost = 1 * p_miss * p_true + 1 * p_fa * (1 - p_true)
        if best is None or cost < best[0]:
            best = (cost, thr)
    return best


def test_criterion_4_evaluation_oracles(report):
    rng = np.random.default_rng(4)
    id_bad = dcf_bad = mono_bad = 0
    for _ in range(100):
        n, k = int(rng.integers(2, 9)), int(rng.integers(1, 6))
        s = rng.integers(0, 4, (n, n, k)).astype(float) if rng.random() < 0.5 else rng.random((n, n, k))
        id_bad += evaluation.identification_rate(evaluation.SimilarityTensor(s)) != _loop_rate(s)
    for _ in range(100):
        gen = list(np.round(rng.normal(1, 1, int(rng.integers(1, 40))), 1))
        imp = list(np.round(rng.normal(0, 1, int(rng.integers(1, 80))), 1))
        got = evaluation.min_dcf(gen, imp)
        want = _exhaustive_dcf(gen, imp)
        dcf_bad += got[0] != want[0] or got[1] != want[1]
        det = evaluation.det_curve(gen, imp)
        mono_bad += bool((np.diff(det.far) > 0).any() or (np.diff(det.frr) < 0).any())
    report(4, id_bad == dcf_bad == mono_bad == 0,
           f"identification mismatches={id_bad}/100 min_dcf mismatches={dcf_bad}/100 non-monotone DET={mono_bad}")


# -- 5 ------------------------------------------------------------------------

def test_criterion_5_levenberg_marquardt(report):
    rng = np.random.default_rng(5)
    model = mlp.init_model((9, 5, 3), rng, init_range=2.0)
    X = rng.uniform(-1, 1, (12, 9))
    J = mlp.jacobian(model, X)
    theta, h = model.flat(), 1e-5
    F = np.empty_like(J)
    for p in range(theta.size):
        e = np.zeros_like(theta)
        e[p] = h
        up = mlp.forward(mlp.MlpModel.from_flat(model.sizes, theta + e), X).ravel()
        dn = mlp.forward(mlp.MlpModel.from_flat(model.sizes, theta - e), X).ravel()
        F[:, p] = (up - dn) / (2 * h)
    rel = float(np.linalg.norm(J - F) / np.linalg.norm(F))
    col_rel = float(max(np.linalg.norm(J[:, p] - F[:, p]) / max(np.linalg.norm(F[:, p]), 1e-300)
                        for p in range(theta.size)))

    T = np.where(rng.random((40, 3)) > 0.5, 1.0, -1.0)
    Xt = rng.uniform(-1, 1, (40, 9))
    mono = True
    for gamma in (1.0, 0.9):
        curve = mlp.train_lm(Xt, T, mlp.TrainConfig(epochs=50, gamma=gamma, seed=1), hidden=5).curve
        mono &= len(curve) >= 2 and all(b <= a for a, b in zip(curve, curve[1:]))
    gap = max(abs(mlp.msereg(t, a, w, 1.0) - mlp.mse(t, a))
              for t, a, w in ((rng.normal(size=(8, 3)), rng.normal(size=(8, 3)), rng.normal(size=53))
                              for _ in range(100)))
    ok = rel <= 1e-4 and col_rel <= 1e-4 and mono and gap <= 1e-12
    report(5, ok, f"jacobian rel.err={rel:.1e} (worst column {col_rel:.1e}) monotone={mono} "
                  f"|msereg(1)-mse|max={gap:.1e}")


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_ecoc_columns(report):
    want = {(31, 6): 30, (15, 7): 13, (15, 5): 15}
    got = {nk: codes.ecoc_from_bch(codes.bch_new(*nk), 22).bits for nk in want}
    report(6, got == want, f"effective outputs {got}")


# -- 7 and 9 --------------------------------------------------------------------

def run_protocol(workdir):
    """Generate, extract, and evaluate the three classifiers; returns artifacts and metrics."""
    t0 = time.perf_counter()
    workdir.mkdir(parents=True, exist_ok=True)
    ds = synth.make_dataset(22, 10, master_seed=MASTER_SEED, jitter=1.0, out_dir=workdir / "images")
    table, rejects = pipeline.extract_directory(workdir / "images")
    features.write_feature_csv(table, workdir / "features.csv")
    table = features.read_feature_csv(workdir / "features.csv")
    out = {"rejects": rejects, "retries": dict(ds.retries)}
    for name, cfg in {
        "nn-mad": experiment.ExperimentConfig(classifier="nn-mad"),
        "nn-mse": experiment.ExperimentConfig(classifier="nn-mse"),
        "opc": experiment.ExperimentConfig(classifier="mlp-opc:30", epochs=10, starts=20, seed=0),
    }.items():
        res = experiment.run_experiment(table, cfg)
        res.best.save(workdir / f"{name}.json")
        gen, imp = evaluation.split_scores(res.tensor)
        out[name] = {
            "identification": [r.identification for r in res.runs],
            "min_dcf": [r.min_dcf for r in res.runs],
            "genuine": gen.size, "impostor": imp.size,
            "sizes": res.best.models[0].sizes if res.best.models else None,
        }
    out["elapsed"] = time.perf_counter() - t0
    out["files"] = {p.name: p.read_bytes() for p in sorted(workdir.glob("*.csv")) + sorted(workdir.glob("*.json"))}
    return out


@pytest.fixture(scope="module")
def protocol(tmp_path_factory):
    return run_protocol(tmp_path_factory.mktemp("protocol_a"))


def test_criterion_7_protocol_experiment(report, protocol):
    nn_mad, nn_mse, opc = protocol["nn-mad"], protocol["nn-mse"], protocol["opc"]
    trials = {name: (protocol[name]["genuine"], protocol[name]["impostor"]) for name in ("nn-mad", "nn-mse", "opc")}
    count_ok = all(t == (110, 2310) for t in trials.values())
    mad_rate = nn_mad["identification"][0]
    mse_rate = nn_mse["identification"][0]
    opc_mean = float(np.mean(opc["identification"]))
    dcf = nn_mad["min_dcf"][0]
    ok = (count_ok and len(opc["identification"]) == 20 and opc["sizes"] == (9, 30, 22)
          and mad_rate >= 0.90 and opc_mean >= mse_rate and dcf <= 0.10 and protocol["elapsed"] < 600)
    report(7, ok, f"trials={trials['nn-mad'][0]}+{trials['nn-mad'][1]} NN-MAD ident={mad_rate:.4f} "
                  f"NN-MSE ident={mse_rate:.4f} OPC 9x30x22 mean ident={opc_mean:.4f} (20 starts) "
                  f"NN-MAD minDCF={dcf:.4f} (OPC best-run minDCF={min(opc['min_dcf']):.4f}) "
                  f"rejected={len(protocol['rejects'])} runtime={protocol['elapsed']:.0f}s")


def test_criterion_8_defective_acquisitions(report):
    cases = synth.defective_cases(50, master_seed=7)
    rejected = {"merged": 0, "cut": 0}
    for kind, img in cases:
        try:
            pipeline.extract(img)
        except DefectiveAcquisition:
            rejected[kind] += 1
    total = sum(rejected.values())
    report(8, total == 50, f"rejected {total}/50 ({rejected['merged']} merged, {rejected['cut']} cut of 25 each)")


def test_criterion_9_determinism(report, protocol, tmp_path_factory):
    again = run_protocol(tmp_path_factory.mktemp("protocol_b"))
    same_files = protocol["files"].keys() == again["files"].keys() and all(
        protocol["files"][k] == again["files"][k] for k in protocol["files"])
    same_metrics = all(protocol[k] == again[k] for k in ("nn-mad", "nn-mse", "opc", "rejects", "retries"))
    report(9, same_files and same_metrics,
           f"files compared={sorted(protocol['files'])} identical={same_files} metrics identical={same_metrics}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
