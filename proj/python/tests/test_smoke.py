import math
from pathlib import Path

import numpy as np
import pytest

import pathattn as pa


MANIFEST = '{"slide_id": "S1", "width_px": 320, "height_px": 160}'


def session_text(observer="o1", group="GU"):
    return "\n".join([
        f'{{"type": "session", "slide_id": "S1", "observer_id": "{observer}", "group": "{group}"}}',
        '{"type": "viewport", "t_ms": 0, "x0": 0, "y0": 0, "x1": 160, "y1": 160, "mag": 10}',
        '{"type": "viewport", "t_ms": 500, "x0": 160, "y0": 0, "x1": 320, "y1": 80, "mag": 20}',
    ]) + "\n"


def test_counts_and_heatmap():
    manifest = pa.parse_manifest(MANIFEST)
    session = pa.validate_and_clip(pa.parse_session_log(session_text()), manifest)
    counts = pa.accumulate_viewports([session], manifest)
    assert counts.shape == (10, 20)
    assert counts[:, :10].min() == 1 and counts[5:, 10:].max() == 0
    hm = pa.attention_heatmap([session], manifest, sigma=2.0)
    assert hm["grid"].shape == (10, 20)
    assert hm["grid"].min() == 0.0 and hm["grid"].max() == 1.0
    assert hm["observers"] == ["o1"]


def test_kernel_and_smoothing():
    k = pa.gaussian_kernel(2.0)
    assert len(k) == 2 * 6 + 1
    assert math.isclose(sum(k), 1.0, abs_tol=1e-12)
    uniform = np.full((7, 9), 0.3)
    assert np.array_equal(pa.gaussian_smooth(uniform, 3.0), uniform)
    assert not pa.min_max_normalize(uniform).any()


def test_correlation_and_matching():
    rng = np.random.default_rng(3)
    a = rng.random((12, 15))
    assert math.isclose(pa.cross_correlation(a, a), 1.0, abs_tol=1e-12)
    assert math.isclose(pa.cross_correlation(a, 2 * a + 1), 1.0, abs_tol=1e-12)
    ref = rng.random((12, 15))
    matched = pa.histogram_match(a, ref)
    assert np.array_equal(np.sort(matched, axis=None), np.sort(ref, axis=None))
    with pytest.raises(pa.PathattnError) as info:
        pa.cross_correlation(np.ones((3, 3)), a[:3, :3])
    assert info.value.code == "ConstantInput"


def test_welch():
    r = pa.welch_t_test([1, 2, 3, 4], [2, 3, 4, 5])
    assert math.isclose(r["t"], -1.0954451150103322, rel_tol=1e-12)
    assert math.isclose(r["df"], 6.0, rel_tol=1e-12)
    assert math.isclose(r["p"], 0.31533359620122973, rel_tol=1e-9)


def test_sequence_scores():
    assert pa.align_score("G3 G4 B", "G3 B") == 2.0
    assert pa.semantic_sequence_score(["G3", "G4", "B"], ["G3", "G4", "B"]) == 1.0
    assert pa.semantic_sequence_score("G3 G3 G5 B G4", "G3 B G4 G4 G4") == pytest.approx(0.6)
    assert pa.mean_pairwise_sss(["G3", "G3", "B"]) == pytest.approx(1 / 3)
    with pytest.raises(pa.PathattnError):
        pa.semantic_sequence_score("", "G3")


def test_bad_log_reports_line():
    text = session_text().replace('"t_ms": 0,', '"t_ms": 900,')
    with pytest.raises(pa.PathattnError) as info:
        pa.parse_session_log(text)
    assert info.value.code == "NonMonotonicTimestamp"
    assert info.value.line == 3


def test_synthetic_report(tmp_path: Path):
    case = tmp_path / "case"
    pa.write_synthetic_case(case, seed=3, observers=4, events=40)
    out = pa.run_report(case, tmp_path / "out", seed=1)
    assert "report.csv" in [str(f) for f in out["files"]]
    assert out["report_csv"].startswith("case_id,group,cc,sss,n_observers,match_direction")
    again = pa.run_report(case, tmp_path / "out2", seed=1)
    for f in out["files"]:
        if str(f) == "run.json":
            continue
        assert (Path(out["out_dir"]) / f).read_bytes() == (Path(again["out_dir"]) / f).read_bytes()
    hm = pa.read_heatmap(next(Path(out["out_dir"]).glob("heatmaps/GEN.ahm")))
    assert hm["grid"].max() == pytest.approx(1.0, abs=1e-6)
    png = pa.render_gray_png(hm["grid"])
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
