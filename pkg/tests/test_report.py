from pathlib import Path

from ringsynth.report import render_phase_summary, render_template_figure, write_tsv

import template_fixtures as fx


def test_template_figure_written(tmp_path):
    path = render_template_figure(fx.clean_three_state(), tmp_path / "t.png",
                                  title="three-state")
    assert path.exists()
    assert path.stat().st_size > 2000  # a real raster, not an empty file


def test_phase_summary_written(tmp_path):
    rows = [{"phase": 1, "states": 10, "seconds": 960},
            {"phase": 2, "states": 13, "seconds": 13},
            {"phase": 3, "states": 14, "seconds": 60}]
    path = render_phase_summary(rows, tmp_path / "phases.png")
    assert path.exists() and path.stat().st_size > 2000


def test_tsv_stable_columns(tmp_path):
    rows = [{"a": 1, "b": "x"}, {"a": 2}]
    text = write_tsv(rows, ["a", "b"], tmp_path / "t.tsv")
    assert text == "a\tb\n1\tx\n2\t\n"
    assert (tmp_path / "t.tsv").read_text(encoding="utf-8") == text
