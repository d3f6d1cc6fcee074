import json
import math
import xml.etree.ElementTree as ET

import pytest

from qdsphere.cli import main

FIG_WINDING = {
    "format_version": 1,
    "general": {
        "numerator": [[-1.0, 0.0]],
        "denominator": [[0.0, 0.5], [0.0, 0.0], [-0.25, -2.0], [0.0, 0.0], [1.0, 0.0]],
    },
    "seeds": [[1.0, 0.0]],
    "budgets": {"max_phi_length": 200.0},
}

SEGMENT = {
    "format_version": 1,
    "p_over_q_squared": {"p": [[1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]], "q": [[1.0, 0.0]]},
}

CIRCLE = {
    "format_version": 1,
    "p_over_q_squared": {"p": [[-1.0, 0.0]], "q": [[0.0, 0.0], [1.0, 0.0]]},
}

SEMICIRCLE = {
    "format_version": 1,
    "cauchy": {"p": [[1.0, 0.0]], "q": [[0.0, 0.0], [-1.0, 0.0]], "r": [[1.0, 0.0]]},
}


def write_spec(tmp_path, obj, name="in.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(args):
    return main(args)


def load(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- schema


def test_missing_file_is_error(tmp_path, capsys):
    assert run(["criteria", str(tmp_path / "nope.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"format_version": 1,,}')
    assert run(["criteria", str(path)]) == 1
    err = capsys.readouterr().err
    assert "line 1" in err


def test_unknown_top_level_field_rejected(tmp_path, capsys):
    spec = dict(SEGMENT)
    spec["surprise"] = 3
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1
    assert "surprise" in capsys.readouterr().err


def test_two_forms_rejected(tmp_path, capsys):
    spec = dict(SEGMENT)
    spec["general"] = FIG_WINDING["general"]
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1


def test_zero_denominator_rejected(tmp_path, capsys):
    spec = {"format_version": 1,
            "general": {"numerator": [[1.0, 0.0]], "denominator": [[0.0, 0.0]]}}
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1


def test_wrong_format_version_rejected(tmp_path, capsys):
    spec = dict(SEGMENT)
    spec["format_version"] = 2
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1
    assert "format_version" in capsys.readouterr().err


def test_degree_cap_enforced(tmp_path, capsys):
    spec = {"format_version": 1,
            "general": {"numerator": [[1.0, 0.0]],
                        "denominator": [[1.0, 0.0]] * 66}}
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1


def test_bad_window_rejected(tmp_path, capsys):
    spec = dict(SEGMENT)
    spec["window"] = [2.0, 0.0, -2.0, 1.0]
    assert run(["criteria", write_spec(tmp_path, spec)]) == 1


# ---------------------------------------------------------------- analyze


def test_analyze_winding_exit_20(tmp_path):
    spec = write_spec(tmp_path, FIG_WINDING)
    out = str(tmp_path / "out.json")
    assert run(["analyze", spec, "--out", out]) == 20
    doc = load(out)
    assert doc["format_version"] == 1
    assert doc["overall"] == "Inconclusive"
    assert doc["order_at_infinity"] == 0
    rec = doc["recurrence"]
    assert rec and rec[0]["verdict"] == "SuspectedRecurrent"
    assert rec[0]["crossings"] >= 20
    assert doc["timings"]["unit"] == "integrator_steps"


def test_analyze_certified_exit_0(tmp_path):
    spec = write_spec(tmp_path, SEGMENT)
    out = str(tmp_path / "out.json")
    assert run(["analyze", spec, "--out", out]) == 0
    doc = load(out)
    assert doc["overall"] == "CertifiedNoRecurrence"
    names = {c["criterion"]: c["verdict"] for c in doc["criteria"]}
    assert names["ThreePole"] == "CertifiedNoRecurrence"
    assert len(doc["short_trajectories"]) == 1


def test_analyze_circle_exit_0(tmp_path):
    spec = write_spec(tmp_path, CIRCLE)
    out = str(tmp_path / "out.json")
    assert run(["analyze", spec, "--out", out]) == 0
    doc = load(out)
    assert doc["short_trajectories"] == []


def test_analyze_byte_identical(tmp_path):
    spec = write_spec(tmp_path, FIG_WINDING)
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    assert run(["analyze", spec, "--out", a]) == 20
    assert run(["analyze", spec, "--out", b]) == 20
    assert open(a, "rb").read() == open(b, "rb").read()


def test_analyze_input_echo_round_trip(tmp_path):
    spec = write_spec(tmp_path, SEGMENT)
    out = str(tmp_path / "out.json")
    run(["analyze", spec, "--out", out])
    doc = load(out)
    assert doc["input"]["form"] == "p_over_q_squared"
    assert doc["input"]["sign"] == 1
    assert "window" in doc["input"] and "budgets" in doc["input"]


# ---------------------------------------------------------------- criteria


def test_criteria_stdout(tmp_path, capsys):
    spec = write_spec(tmp_path, CIRCLE)
    assert run(["criteria", spec]) == 0
    doc = json.loads(capsys.readouterr().out)
    by_name = {c["criterion"]: c["verdict"] for c in doc["criteria"]}
    assert by_name["ThreePole"] == "CertifiedNoRecurrence"
    assert by_name["ResidueCriterion"] == "NumericallySupported"


def test_criteria_inconclusive_exit_10(tmp_path, capsys):
    spec = write_spec(tmp_path, FIG_WINDING)
    assert run(["criteria", spec]) == 10
    doc = json.loads(capsys.readouterr().out)
    assert doc["overall"] == "Inconclusive"


# ---------------------------------------------------------------- trace


def test_trace_closed_circle(tmp_path):
    spec = write_spec(tmp_path, CIRCLE)
    out = str(tmp_path / "ray.json")
    assert run(["trace", spec, "--from", "1,0", "--out", out]) == 0
    doc = load(out)
    assert doc["termination"]["kind"] == "Closed"
    assert doc["phi_length"] == pytest.approx(2 * math.pi, rel=1e-6)
    assert doc["imag_drift"] < 1e-7
    assert doc["seed"] == [1.0, 0.0]
    assert len(doc["points"]) == len(doc["taus"])


def test_trace_budget_via_env(tmp_path, monkeypatch):
    spec = write_spec(tmp_path, CIRCLE)
    out = str(tmp_path / "ray.json")
    monkeypatch.setenv("QD_MAX_STEPS", "5")
    assert run(["trace", spec, "--from", "1,0", "--out", out]) == 0
    doc = load(out)
    assert doc["termination"]["kind"] == "StepBudget"
    assert doc["work"]["accepted_steps"] <= 5


def test_trace_rk_tol_flag_changes_work(tmp_path):
    spec = write_spec(tmp_path, CIRCLE)
    coarse = str(tmp_path / "a.json")
    fine = str(tmp_path / "b.json")
    assert run(["trace", spec, "--from", "1,0", "--out", coarse,
                "--rk-tol", "1e-6"]) == 0
    assert run(["trace", spec, "--from", "1,0", "--out", fine,
                "--rk-tol", "1e-12"]) == 0
    assert load(fine)["work"]["accepted_steps"] > load(coarse)["work"]["accepted_steps"]


# ---------------------------------------------------------------- level


def test_level_report_segment(tmp_path):
    # pick a window whose samples avoid mirror-exact rounding: a symmetric
    # field can otherwise produce a bit-identical 2x2 block and trip (iii)
    spec_obj = dict(SEGMENT)
    spec_obj["window"] = [-3.0, -3.0, 3.0, 3.0]
    spec = write_spec(tmp_path, spec_obj)
    out = str(tmp_path / "level.json")
    assert run(["level", spec, "--grid", "24", "--out", out]) == 0
    doc = load(out)
    assert doc["n"] == 24
    rows = doc["grid"]
    assert len(rows) == 24 and len(rows[0]) == 24
    ver = doc["verification"]
    assert ver["passed_i"] and ver["passed_ii"] and ver["passed_iii"]
    assert doc["pairing"]["pairs"] == [[0, 1]]
    assert doc["verification"]["details"]["degenerate_blocks"] == 0


def test_level_masks_pole_disk_with_nulls(tmp_path):
    spec = write_spec(tmp_path, CIRCLE, "circ.json")
    out = str(tmp_path / "level.json")
    assert run(["level", spec, "--grid", "21", "--out", out]) == 0
    doc = load(out)
    rows = doc["grid"]
    assert rows[10][10] is None                 # pole at the window center
    x0, y0 = doc["window"][0], doc["window"][1]
    corner = rows[0][0]
    assert corner == pytest.approx(math.log(abs(complex(x0, y0))), abs=1e-6)


def test_level_obstruction_exit_10(tmp_path):
    spec = {"format_version": 1,
            "p_over_q_squared": {"p": [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
                                 "q": [[-2.0, 0.0], [1.0, 0.0]]}}
    out = str(tmp_path / "level.json")
    assert run(["level", write_spec(tmp_path, spec), "--out", out]) == 10
    doc = load(out)
    assert "pairing_failure" in doc
    gap = doc["obstruction"]["gap"]
    assert gap == pytest.approx(2 * math.pi * math.sqrt(3), rel=1e-3)


def test_level_requires_pq_form(tmp_path, capsys):
    spec = write_spec(tmp_path, FIG_WINDING)
    assert run(["level", spec, "--out", str(tmp_path / "x.json")]) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------- lemniscate


def test_lemniscate_svg(tmp_path):
    spec = {"format_version": 1,
            "lemniscate": {"p": [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
                           "q": [[1.0, 0.0]]}}
    out = str(tmp_path / "lem.svg")
    assert run(["lemniscate", write_spec(tmp_path, spec), "--out", out]) == 0
    root = ET.parse(out).getroot()
    assert root.tag.endswith("svg")
    kinds = {el.get("class") for el in root.iter() if el.get("class")}
    assert "level" in kinds and "bg" in kinds


def test_lemniscate_requires_lemniscate_form(tmp_path, capsys):
    spec = write_spec(tmp_path, SEGMENT)
    assert run(["lemniscate", spec, "--out", str(tmp_path / "x.svg")]) == 1


# ---------------------------------------------------------------- cauchy


def test_cauchy_semicircle(tmp_path):
    spec = write_spec(tmp_path, SEMICIRCLE)
    out = str(tmp_path / "cauchy.json")
    assert run(["cauchy", spec, "--out", out]) == 0
    doc = load(out)
    assert doc["total_mass"] == pytest.approx(1.0, abs=1e-3)
    ends = sorted(p[0] for p in doc["support"])
    assert ends[0] == pytest.approx(-2.0, abs=1e-3)
    assert ends[-1] == pytest.approx(2.0, abs=1e-3)
    comp = doc["components"][0]
    assert comp["phi_length"] == pytest.approx(2 * math.pi, rel=1e-4)


def test_cauchy_degenerate_no_short_trajectory(tmp_path):
    spec = {"format_version": 1,
            "cauchy": {"p": [[1.0, 0.0]], "q": [[0.0, 0.0], [-1.0, 0.0]],
                       "r": [[0.0, 0.0]]}}
    out = str(tmp_path / "cauchy.json")
    assert run(["cauchy", write_spec(tmp_path, spec), "--out", out]) == 10
    doc = load(out)
    assert doc["error"] == "NoShortTrajectory"


def test_cauchy_requires_cauchy_form(tmp_path, capsys):
    spec = write_spec(tmp_path, SEGMENT)
    assert run(["cauchy", spec, "--out", str(tmp_path / "x.json")]) == 1


# ---------------------------------------------------------------- render


def test_render_svg_well_formed(tmp_path):
    spec = write_spec(tmp_path, FIG_WINDING)
    out = str(tmp_path / "fig.svg")
    assert run(["render", spec, "--out", out]) == 0
    root = ET.parse(out).getroot()
    assert root.tag.endswith("svg")
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    trajs = [el for el in polylines if el.get("class") == "traj"]
    assert len(trajs) >= 4
    # markers for all four poles
    crosses = [el for el in root.iter()
               if el.tag.endswith("line") and el.get("class") == "pole"]
    assert len(crosses) == 8        # two strokes per pole cross


def test_render_short_trajectory_highlighted(tmp_path):
    spec = write_spec(tmp_path, SEGMENT)
    out = str(tmp_path / "seg.svg")
    assert run(["render", spec, "--out", out]) == 0
    root = ET.parse(out).getroot()
    shorts = [el for el in root.iter()
              if el.tag.endswith("polyline") and el.get("class") == "short"]
    assert len(shorts) == 1


def test_render_window_flag(tmp_path):
    spec = write_spec(tmp_path, CIRCLE)
    out = str(tmp_path / "c.svg")
    assert run(["render", spec, "--out", out, "--window=-1,-1,1,1"]) == 0
    root = ET.parse(out).getroot()
    assert root.get("viewBox").startswith("0 0 640")
