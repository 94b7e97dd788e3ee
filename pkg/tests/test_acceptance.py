"""End-to-end acceptance gates, one reported line per criterion."""

import time

import numpy as np
import pytest

import conftest
from test_dataset import _fake_index
from test_eval import frame_eval_oracle

from mistake_detect.audio import AudioClip, save_wav
from mistake_detect.augment import augment_amplitude, sample_scale
from mistake_detect.autodiff import (
    Tensor,
    batchnorm_train,
    conv1d,
    maxpool1d,
    sigmoid,
    upsample2,
    weighted_bce,
)
from mistake_detect.estimators import NeuralDetector, RuleBasedDetector
from mistake_detect.evaluation import frame_eval, metrics_from_counts
from mistake_detect.events import Event, event_eval
from mistake_detect.features import rms_energy, tonic_normalize
from mistake_detect.frames import UNVOICED, FrameSeries
from mistake_detect.gradcheck import gradient_check
from mistake_detect.pipeline import evaluate_detector, prepare_chunks
from mistake_detect.pitch import extract_pitch
from mistake_detect.rules import beta_to_cents, gamma_to_db
from mistake_detect.segmentation import NoteSegment, classify_segment, segment_notes, to_midi
from mistake_detect.splits import make_splits

HOP = 0.010


def _report(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _series(values):
    return FrameSeries(values=np.asarray(values, dtype=np.float64), hop=HOP)


def test_01_formula_suite():
    t0 = time.perf_counter()
    fails = []

    rng = np.random.default_rng(0)
    for _ in range(200):
        p = float(rng.uniform(80.0, 900.0))
        s = float(rng.uniform(110.0, 300.0))
        a = tonic_normalize(_series([p]), s).values[0]
        b = tonic_normalize(_series([2.0 * p]), s).values[0]
        d = abs(a - b)
        if min(d, 1.0 - d) > 1e-12:
            fails.append(f"octave invariance broke at p={p} s={s}")
            break
    if not np.all(tonic_normalize(_series([0.0, UNVOICED]), 220.0).values == -1.0):
        fails.append("unvoiced frames must map to -1")

    midi = to_midi(_series([440.0, 220.0])).values
    if abs(midi[0] - 69.0) > 1e-9 or abs(midi[1] - 57.0) > 1e-9:
        fails.append(f"midi anchor off: {midi}")

    x = rng.normal(scale=0.1, size=22050)
    clip = AudioClip(x, 22050)
    scaled = AudioClip(2.5 * x, 22050)
    if not np.allclose(
        rms_energy(scaled).values, 2.5 * rms_energy(clip).values, atol=1e-9
    ):
        fails.append("energy is not homogeneous under gain")

    if abs(beta_to_cents(0.01) - 12.0) > 1e-9:
        fails.append("0.01 octave tolerance must read as 12 cents")
    if abs(gamma_to_db(1.0) - 6.02) > 0.1:
        fails.append("unit log2 gain must read as about 6.02 dB")

    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 1.0
    detail = "; ".join(fails) if fails else f"5 identities, {elapsed * 1000:.0f} ms"
    _report(1, "formula identities", ok, detail)


def _event_match_bruteforce(pred, gt, collar):
    """Repeated argmax matching, largest dilated overlap first."""
    free_p = set(range(len(pred)))
    free_g = set(range(len(gt)))
    tp = 0
    while True:
        best = None
        for j in sorted(free_g):
            g0, g1 = gt[j].start - collar, gt[j].end + collar
            for i in sorted(free_p):
                o = min(pred[i].end, g1) - max(pred[i].start, g0)
                if o > 0 and (best is None or o > best[0]):
                    best = (o, j, i)
        if best is None:
            break
        tp += 1
        free_g.remove(best[1])
        free_p.remove(best[2])
    return tp, len(pred) - tp, len(gt) - tp


def _runs_as_events(flags):
    events, start = [], None
    for i, v in enumerate(flags):
        if v and start is None:
            start = i
        if not v and start is not None:
            events.append(Event(start * HOP, i * HOP))
            start = None
    if start is not None:
        events.append(Event(start * HOP, len(flags) * HOP))
    return events


def test_02_evaluation_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    frame_bad = event_bad = 0
    for trial in range(10000):
        n = int(rng.integers(1, 65))
        pred = (rng.random(n) < 0.3).astype(np.uint8)
        gt = (rng.random(n) < 0.3).astype(np.uint8)
        c = int(rng.integers(0, 5))
        mask = np.ones(n, bool) if trial % 3 else rng.random(n) < 0.85
        got = frame_eval(pred, gt, c, mask)
        if (got.tp, got.fp, got.fn, got.tn) != frame_eval_oracle(pred, gt, c, mask):
            frame_bad += 1

        pred_ev = _runs_as_events(pred)
        gt_ev = _runs_as_events(gt)
        collar = float(rng.choice([0.0, 0.01, 0.03]))
        counts, _ = event_eval(pred_ev, gt_ev, collar=collar)
        if (counts.tp, counts.fp, counts.fn) != _event_match_bruteforce(
            pred_ev, gt_ev, collar
        ):
            event_bad += 1

    gt = np.zeros(12, np.uint8)
    gt[[5, 6, 7]] = 1
    pred = np.zeros(12, np.uint8)
    pred[8] = 1
    worked = frame_eval(pred, gt, 1)
    m = metrics_from_counts(worked)
    example_ok = (
        (worked.tp, worked.fp, worked.fn) == (1, 0, 2)
        and m.precision == 1.0
        and abs(m.recall - 1.0 / 3.0) < 1e-12
    )

    elapsed = time.perf_counter() - t0
    ok = frame_bad == 0 and event_bad == 0 and example_ok and elapsed < 10.0
    _report(
        2, "scoring agrees with brute force", ok,
        f"10000 cases, {frame_bad} frame and {event_bad} event disagreements, "
        f"worked example {'exact' if example_ok else 'WRONG'}, {elapsed:.1f} s",
    )


def test_03_collar_monotonicity():
    rng = np.random.default_rng(2)
    violations = 0
    gain = []
    for _ in range(1000):
        n = 200
        pred = (rng.random(n) < rng.uniform(0.05, 0.4)).astype(np.uint8)
        gt = (rng.random(n) < rng.uniform(0.05, 0.4)).astype(np.uint8)
        tight = metrics_from_counts(frame_eval(pred, gt, 0)).f1
        loose = metrics_from_counts(frame_eval(pred, gt, 8)).f1
        if loose < tight:
            violations += 1
        gain.append(loose - tight)
    _report(
        3, "tolerant scoring never hurts", violations == 0,
        f"1000 pairs, {violations} violations, mean F1 uplift {np.mean(gain):.3f}",
    )


def test_04_note_segmentation():
    rng = np.random.default_rng(3)
    worst = 0.0
    count_errors = 0
    for _ in range(40):
        k = int(rng.integers(3, 9))
        durs = rng.uniform(0.6, 1.4, k)
        midis = [60.0]
        while len(midis) < k:
            step = float(rng.uniform(1.0, 5.0)) * (1 if rng.random() < 0.5 else -1)
            midis.append(midis[-1] + step)
        frames = np.concatenate(
            [np.full(int(round(d / HOP)), m) for m, d in zip(midis, durs)]
        )
        segments = segment_notes(_series(frames))
        notes = [s for s in segments if s.category == "candidate"]
        if len(notes) != k:
            count_errors += 1
            continue
        edges = np.concatenate([[0.0], np.cumsum(durs)])
        for seg, on, off in zip(notes, edges[:-1], edges[1:]):
            worst = max(worst, abs(seg.t_on - on), abs(seg.t_off - off))

    archetype_bad = 0
    n = 80
    flat = _series(np.full(n, 57.0))
    loud = FrameSeries(values=np.full(n, 0.1), hop=HOP)
    faint = FrameSeries(values=np.full(n, 0.001), hop=HOP)
    wobble = _series(np.linspace(40.0, 80.0, n) + np.tile([0.0, 15.0], n // 2))
    span = NoteSegment(t_on=0.0, t_off=n * HOP, category="candidate")
    for energy, midi, want in (
        (faint, flat, "silence"),
        (loud, flat, "static"),
        (loud, wobble, "transition"),
    ):
        if classify_segment(span, energy, midi) != want:
            archetype_bad += 1

    ok = count_errors == 0 and worst <= 0.050 and archetype_bad == 0
    _report(
        4, "note segmentation", ok,
        f"40 contours, {count_errors} count misses, worst boundary "
        f"{worst * 1000:.0f} ms, {archetype_bad} archetype misses",
    )


def test_05_amplitude_augmentation(tmp_path):
    rng = np.random.default_rng(4)
    draws = np.array([sample_scale(rng) for _ in range(10000)])
    in_range = np.all(
        ((draws >= 0.2) & (draws <= 0.6)) | ((draws >= 1.2) & (draws <= 1.8))
    )

    sr = 22050
    pieces = []
    for midi in (62, 64, 66):
        f = 440.0 * 2.0 ** ((midi - 69) / 12.0)
        t = np.arange(int(0.8 * sr)) / sr
        pieces.append(0.2 * np.sin(2 * np.pi * f * t))
        pieces.append(np.zeros(int(0.15 * sr)))
    clip = AudioClip(np.concatenate(pieces), sr)
    contour = extract_pitch(clip, hop=HOP)

    augmented, records = augment_amplitude(clip, contour, 2, seed=11)
    ramp = int(round(0.010 * sr))
    ratio_bad = 0
    for rec in records:
        s0 = int(round(rec.segment.t_on * sr)) + ramp
        s1 = min(int(round(rec.segment.t_off * sr)), len(clip.samples)) - ramp
        r_out = np.sqrt(np.mean(augmented.samples[s0:s1] ** 2))
        r_in = np.sqrt(np.mean(clip.samples[s0:s1] ** 2))
        if abs(r_out / r_in - rec.scale) > 0.01 * rec.scale:
            ratio_bad += 1

    again, _ = augment_amplitude(clip, contour, 2, seed=11)
    save_wav(tmp_path / "a.wav", augmented)
    save_wav(tmp_path / "b.wav", again)
    reproducible = (
        np.array_equal(augmented.samples, again.samples)
        and (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()
    )

    ok = in_range and ratio_bad == 0 and len(records) == 2 and reproducible
    _report(
        5, "amplitude augmentation", ok,
        f"10000 draws in range: {in_range}, {ratio_bad} interior ratio misses, "
        f"byte-reproducible: {reproducible}",
    )


def test_06_rule_based_end_to_end(rb_corpus):
    t0 = time.perf_counter()
    plan = make_splits(rb_corpus, scenario=1, seed=0)
    results = {}
    for mclass in ("F", "A"):
        train_chunks = prepare_chunks(rb_corpus, plan.train, mclass)
        test_chunks = prepare_chunks(rb_corpus, plan.test, mclass)
        det = RuleBasedDetector(mistake_class=mclass, collar_c=8).fit(
            [c.features for c in train_chunks],
            [c.labels for c in train_chunks],
            mask=[c.mask for c in train_chunks],
        )
        results[mclass] = (det.threshold_, evaluate_detector(det, test_chunks, mclass))

    beta_cents = beta_to_cents(results["F"][0])
    gamma_db = gamma_to_db(results["A"][0])
    elapsed = time.perf_counter() - t0

    # a separating pitch tolerance sits between tracker jitter (<= 8 cents)
    # and the smallest planted fault (30 cents); the smallest planted gain
    # gap is 2.1 octaves of log-energy, about 12.6 dB
    thresholds_ok = 8.0 < beta_cents < 30.0 and 0.0 < gamma_db < 12.64
    f1_ok = all(
        report.collar.f1 >= 0.95 and report.event.f1 >= 0.90
        for _, report in results.values()
    )
    ok = thresholds_ok and f1_ok and elapsed < 120.0
    _report(
        6, "rule-based end-to-end", ok,
        f"beta {beta_cents:.1f} cents, gamma {gamma_db:.1f} dB, "
        f"collar F1 F={results['F'][1].collar.f1:.3f} A={results['A'][1].collar.f1:.3f}, "
        f"event F1 F={results['F'][1].event.f1:.3f} A={results['A'][1].event.f1:.3f}, "
        f"{elapsed:.0f} s",
    )


def _layer_gradchecks():
    rng = np.random.default_rng(5)
    checks = {}

    def bce(out, y):
        return weighted_bce(out, y, 0.8, 1.2)

    x = Tensor(rng.normal(size=(2, 3, 12)) * 0.5, requires_grad=True)
    w = Tensor(rng.normal(size=(4, 3, 3)) * 0.5, requires_grad=True)
    b = Tensor(rng.normal(size=(4,)) * 0.5, requires_grad=True)
    y = (rng.random((2, 4, 12)) < 0.5).astype(np.float64)
    checks["conv"] = gradient_check(
        lambda: bce(sigmoid(conv1d(x, w, b)), y), [x, w, b]
    )
    x2 = Tensor(rng.normal(size=(1, 2, 16)) * 0.5, requires_grad=True)
    w2 = Tensor(rng.normal(size=(3, 2, 3)) * 0.5, requires_grad=True)
    b2 = Tensor(rng.normal(size=(3,)) * 0.5, requires_grad=True)
    y2 = (rng.random((1, 3, 16)) < 0.5).astype(np.float64)
    checks["dilated conv"] = gradient_check(
        lambda: bce(sigmoid(conv1d(x2, w2, b2, dilation=4)), y2), [x2, w2, b2]
    )

    xb = Tensor(rng.normal(size=(2, 3, 8)), requires_grad=True)
    gamma = Tensor(rng.uniform(0.5, 1.5, 3), requires_grad=True)
    beta = Tensor(rng.normal(size=3) * 0.3, requires_grad=True)
    yb = (rng.random((2, 3, 8)) < 0.5).astype(np.float64)
    checks["batch norm"] = gradient_check(
        lambda: bce(sigmoid(batchnorm_train(xb, gamma, beta)[0]), yb),
        [xb, gamma, beta],
    )

    n = 2 * 2 * 12
    xp = Tensor((np.random.default_rng(6).permutation(n).reshape(2, 2, 12) / n) * 2 - 1,
                requires_grad=True)
    yp = (rng.random((2, 2, 6)) < 0.5).astype(np.float64)
    checks["pool"] = gradient_check(
        lambda: bce(sigmoid(maxpool1d(xp, 2, 2)), yp), [xp]
    )
    yp2 = (rng.random((2, 2, 12)) < 0.5).astype(np.float64)
    checks["same-pad pool"] = gradient_check(
        lambda: bce(sigmoid(maxpool1d(xp, 3, 1, same_pad=True)), yp2), [xp]
    )

    xu = Tensor(rng.normal(size=(2, 3, 6)), requires_grad=True)
    yu = (rng.random((2, 3, 12)) < 0.5).astype(np.float64)
    checks["upsample"] = gradient_check(lambda: bce(sigmoid(upsample2(xu)), yu), [xu])

    xs = Tensor(rng.normal(size=(2, 10)), requires_grad=True)
    ys = (rng.random((2, 10)) < 0.5).astype(np.float64)
    checks["sigmoid head"] = gradient_check(lambda: bce(sigmoid(xs), ys), [xs])
    return checks


def _overfit_chunks(nn_corpus):
    chunks = prepare_chunks(nn_corpus, nn_corpus.pair_keys(), "F")
    usable = [
        c for c in chunks if c.mask.mean() >= 0.99 and c.labels.sum() > 0
    ]
    return usable[:8]


def test_07_neural_core(nn_corpus):
    t0 = time.perf_counter()
    checks = _layer_gradchecks()
    worst = max(checks.values())
    grads_ok = worst < 1e-3

    chunks = _overfit_chunks(nn_corpus)
    assert len(chunks) == 8, "corpus must supply 8 nearly-unmasked chunks"
    X = [c.features for c in chunks]
    y = [c.labels for c in chunks]
    masks = [c.mask for c in chunks]
    det = NeuralDetector(
        arch="tcn", max_epochs=500, patience=500, batch_size=8,
        seed=0, sentinel=UNVOICED,
    ).fit(X, y, mask=masks)
    preds = det.predict(X)
    correct = sum(
        int(np.sum((p == c.labels) & c.mask)) for p, c in zip(preds, chunks)
    )
    total = sum(int(c.mask.sum()) for c in chunks)
    accuracy = correct / total
    overfit_ok = accuracy > 0.99 and det.report_.stopped_epoch <= 500

    short = dict(arch="tcn", max_epochs=20, patience=20, batch_size=8,
                 seed=7, sentinel=UNVOICED)
    probs_a = NeuralDetector(**short).fit(X, y).predict_proba(X)
    probs_b = NeuralDetector(**short).fit(X, y).predict_proba(X)
    deterministic = all(np.array_equal(a, b) for a, b in zip(probs_a, probs_b))

    elapsed = time.perf_counter() - t0
    ok = grads_ok and overfit_ok and deterministic and elapsed < 300.0
    _report(
        7, "neural core", ok,
        f"worst gradient error {worst:.2e}, overfit accuracy {accuracy * 100:.2f}% "
        f"in {det.report_.stopped_epoch} epochs, bit-deterministic: {deterministic}, "
        f"{elapsed:.0f} s",
    )


def test_08_neural_end_to_end(nn_corpus):
    t0 = time.perf_counter()
    plan = make_splits(nn_corpus, scenario=1, seed=0)
    train_chunks = prepare_chunks(nn_corpus, plan.train, "F")
    val_chunks = prepare_chunks(nn_corpus, plan.val, "F")
    test_chunks = prepare_chunks(nn_corpus, plan.test, "F")
    n_chunks = len(train_chunks) + len(val_chunks) + len(test_chunks)

    tcn = NeuralDetector(
        arch="tcn", max_epochs=60, patience=8, batch_size=32,
        seed=0, sentinel=UNVOICED,
    ).fit(
        [c.features for c in train_chunks],
        [c.labels for c in train_chunks],
        mask=[c.mask for c in train_chunks],
        X_val=[c.features for c in val_chunks],
        y_val=[c.labels for c in val_chunks],
        val_mask=[c.mask for c in val_chunks],
    )
    tcn_report = evaluate_detector(tcn, test_chunks, "F")

    rb = RuleBasedDetector(mistake_class="F", collar_c=8).fit(
        [c.features for c in train_chunks],
        [c.labels for c in train_chunks],
        mask=[c.mask for c in train_chunks],
    )
    rb_report = evaluate_detector(rb, test_chunks, "F")

    elapsed = time.perf_counter() - t0
    tcn_f1 = tcn_report.collar.f1
    rb_f1 = rb_report.collar.f1
    ok = n_chunks == 200 and tcn_f1 >= 0.90 and tcn_f1 > rb_f1 and elapsed < 900.0
    _report(
        8, "learned detector beats thresholds", ok,
        f"{n_chunks} chunks, TCN collar F1 {tcn_f1:.3f} vs rule-based {rb_f1:.3f}, "
        f"{tcn.report_.stopped_epoch} epochs, {elapsed:.0f} s",
    )


def test_09_split_protocols():
    rng = np.random.default_rng(8)
    disjoint_ok = counts_ok = True
    for trial in range(25):
        learners = [f"s{i:02d}" for i in range(int(rng.integers(4, 11)))]
        lessons = [f"l{i:02d}" for i in range(1, int(rng.integers(3, 7)))]
        keys = [(s, l) for s in learners for l in lessons]
        plan = make_splits(_fake_index(keys), scenario=2, seed=trial)
        groups = [sorted({k[0] for k in part})
                  for part in (plan.train, plan.val, plan.test)]
        if (set(groups[0]) & set(groups[1]) or set(groups[0]) & set(groups[2])
                or set(groups[1]) & set(groups[2])):
            disjoint_ok = False
        n = len(learners)
        for got, frac in zip(groups, (0.70, 0.15, 0.15)):
            if abs(len(got) - frac * n) > 1.0:
                counts_ok = False

    keys = [("uma", f"l{i:02d}") for i in range(1, 11)]
    index = _fake_index(keys)
    s3 = make_splits(index, scenario=3, seed=0)
    s4 = make_splits(index, scenario=4, seed=0)
    lessons_of = lambda part: [k[1] for k in part]
    s3_ok = (
        lessons_of(s3.train) == [f"l{i:02d}" for i in range(1, 8)]
        and lessons_of(s3.val) == ["l08"]
        and lessons_of(s3.test) == ["l09", "l10"]
    )
    s4_ok = (
        lessons_of(s4.train) == [f"l{i:02d}" for i in range(10, 3, -1)]
        and lessons_of(s4.val) == ["l03"]
        and lessons_of(s4.test) == ["l02", "l01"]
    )

    ok = disjoint_ok and counts_ok and s3_ok and s4_ok
    _report(
        9, "split protocols", ok,
        f"25 randomized singer splits disjoint: {disjoint_ok}, 70:15:15 within 1: "
        f"{counts_ok}, chronological cuts: {s3_ok and s4_ok}",
    )


def test_10_reference_corpus_reproduction():
    line = (
        "ACCEPTANCE 10 reference corpus reproduction: SKIP "
        "(needs the externally distributed recordings; see the reproduction "
        "note in README.md)"
    )
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    pytest.skip("reference corpus is not bundled; documented, not gated")
