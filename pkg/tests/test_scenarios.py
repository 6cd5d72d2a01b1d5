import numpy as np
import pytest

from hybridskill.config import RunConfig
from hybridskill.errors import ConfigError, InvalidScenario, UnknownScenario
from hybridskill.pipeline import generalize
from hybridskill.scenarios import (
    Scenario,
    builtin_scenarios,
    evaluate_scenario,
    get_scenario,
    load_scenario,
    save_scenario,
    stacking,
)


def test_builtin_archetypes():
    by_name = {s.name: s for s in builtin_scenarios()}
    assert set(by_name) == {"stacking", "narrow_opening", "hollow_grasp"}
    st = by_name["stacking"]
    assert len(st.source) == 3
    moved = np.linalg.norm(st.targets[2] - st.source, axis=1) > 0
    assert moved.sum() == 2
    # two objects move differently, so no single translation explains the change
    d = st.targets[2] - st.source
    assert not np.allclose(d[0], d[2])
    assert len(by_name["narrow_opening"].source) == 3
    hollow = by_name["hollow_grasp"]
    assert len(hollow.source) == 1
    assert hollow.demonstration().servos[:, 1].max() >= 3.0


def test_identity_variant_reproduces_demo():
    sc = stacking()
    demo = sc.demonstration()
    src, tgt = sc.keypoints(0)
    moved = generalize(demo, src, tgt).demonstration
    assert moved.allclose(demo, 1e-9)


def test_moved_object_brings_trajectory_closer():
    sc = stacking()
    demo = sc.demonstration()
    src, tgt = sc.keypoints(1)
    moved = generalize(demo, src, tgt).demonstration
    t = tgt.points[0]
    before = np.linalg.norm(demo.positions - t, axis=1).min()
    after = np.linalg.norm(moved.positions - t, axis=1).min()
    assert after <= before
    assert before == pytest.approx(0.1)


def test_hollow_grasp_servos_pass_through():
    sc = get_scenario("hollow_grasp")
    demo = sc.demonstration()
    src, tgt = sc.keypoints(1)
    moved = generalize(demo, src, tgt).demonstration
    np.testing.assert_array_equal(moved.servos, demo.servos)


@pytest.mark.parametrize("name, variant", [(s.name, v) for s in builtin_scenarios() for v in range(len(s.targets))])
def test_builtin_variants_evaluate(name, variant):
    report = evaluate_scenario(get_scenario(name), variant)
    assert report.error is None and report.ok
    assert report.rollout_done and report.final_error <= 1e-3
    assert report.max_rotation_error <= 1e-9
    if variant == 0:
        assert report.identity_deviation <= 1e-9
        assert report.max_residual <= 1e-9


def test_duplicate_keypoints_warning_path():
    base = stacking()
    # second keypoint just below the first grasp point: both snap onto the same pause
    src = base.source.copy()
    src[1] = src[0] - (0.0, 0.0, 0.004)
    tgt = src + (0.02, 0.0, 0.0)
    sc = Scenario("dup", base.spec, src, (tgt,))
    report = evaluate_scenario(sc, 0)
    assert report.warnings and "DuplicateKeypointWarning" in report.warnings[0]
    assert report.error is None
    strict = evaluate_scenario(sc, 0, RunConfig(regularization=0.0))
    assert strict.error.startswith("DegenerateSystem")
    assert not strict.ok


def test_report_is_deterministic():
    a = evaluate_scenario(get_scenario("narrow_opening"), 2).to_dict()
    b = evaluate_scenario(get_scenario("narrow_opening"), 2).to_dict()
    assert a == b


def test_scenario_json_round_trip(tmp_path):
    sc = stacking()
    save_scenario(sc, tmp_path / "s.json")
    back = load_scenario(tmp_path / "s.json")
    assert back.name == sc.name and back.variant_names == sc.variant_names
    assert back.demonstration().allclose(sc.demonstration(), 1e-12)
    assert get_scenario(str(tmp_path / "s.json")).name == "stacking"


def test_scenario_validation(tmp_path):
    sc = stacking()
    with pytest.raises(InvalidScenario):
        Scenario("bad", sc.spec, sc.source, (sc.source[:2],))
    with pytest.raises(InvalidScenario):
        Scenario.from_dict({**sc.to_dict(), "extra": 1})
    with pytest.raises(UnknownScenario, match="stacking"):
        get_scenario("juggling")
    with pytest.raises(InvalidScenario):
        sc.keypoints(7)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"alpha": 0.3, "speed": 2})
    with pytest.raises(ConfigError):
        RunConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        RunConfig(window=0)
    assert RunConfig().updated(alpha=None, window=5).window == 5
