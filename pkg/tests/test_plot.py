import pytest

from cphabc.plot import emit_line_plot, line_plot_svg, read_csv_columns


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_single_monotone_series(tmp_path):
    p = write(tmp_path, "t,E\n0,1\n1,2\n2,3\n")
    out = emit_line_plot(p)
    svg = out.read_text()
    assert out.suffix == ".svg"
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 1
    assert ">E</text>" in svg


def test_legend_and_selected_columns(tmp_path):
    p = write(tmp_path, "t,a,b,c\n0,1,2,3\n1,2,3,4\n")
    svg = emit_line_plot(p, ["a", "c"], tmp_path / "x.svg").read_text()
    assert svg.count("<polyline") == 2
    assert ">a</text>" in svg and ">c</text>" in svg and ">b</text>" not in svg


def test_log_axis_rejects_nonpositive():
    with pytest.raises(ValueError):
        line_plot_svg([0, 1], {"y": [1.0, 0.0]}, log_y=True)
    svg = line_plot_svg([0, 1, 2], {"y": [1e-6, 1e-3, 1.0]}, log_y=True)
    assert "1e-6" in svg and "1e0" in svg


def test_missing_column(tmp_path):
    p = write(tmp_path, "t,E\n0,1\n")
    with pytest.raises(KeyError):
        emit_line_plot(p, ["F"])


def test_names_are_escaped():
    svg = line_plot_svg([0, 1], {"a<b": [0, 1]}, title="x & y")
    assert "a&lt;b" in svg and "x &amp; y" in svg


def test_read_columns(tmp_path):
    cols = read_csv_columns(write(tmp_path, "x,y\n1,2\n3,4\n"))
    assert list(cols) == ["x", "y"] and cols["y"].tolist() == [2.0, 4.0]
    with pytest.raises(ValueError):
        read_csv_columns(write(tmp_path, "", "e.csv"))


def test_deterministic_output():
    a = line_plot_svg([0, 0.5, 1], {"u": [0.1, 0.3, 0.2]})
    assert a == line_plot_svg([0, 0.5, 1], {"u": [0.1, 0.3, 0.2]})
