import numpy as np
import pytest

from ocsvm_rules.errors import ConfigError
from ocsvm_rules.plotting import scatter_rules_svg


def _simple_svg(**kw):
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    bad = np.array([[5.0, 5.0]])
    boxes = [((0.0, 0.0), (3.0, 2.0))]
    return scatter_rules_svg(pts, bad, boxes, **kw)


def test_svg_basic_structure():
    svg = _simple_svg(title="demo")
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert 'width="640"' in svg and 'height="480"' in svg
    assert svg.count("<circle") == 3
    assert "demo" in svg
    # one background rect, one frame, one rule box
    assert svg.count("<rect") == 3


def test_svg_is_deterministic():
    assert _simple_svg() == _simple_svg()


def test_svg_escapes_labels():
    svg = _simple_svg(labels=("a<b", "c&d"))
    assert "a&lt;b" in svg
    assert "c&amp;d" in svg
    assert "a<b" not in svg


def test_svg_handles_empty_sets():
    svg = scatter_rules_svg(np.empty((0, 2)), None, [])
    assert svg.startswith("<svg")
    assert svg.count("<circle") == 0


def test_svg_degenerate_range_padded():
    # all points identical: axes still get a finite span
    pts = np.array([[2.0, 3.0], [2.0, 3.0]])
    svg = scatter_rules_svg(pts, None, [])
    assert "NaN" not in svg and "nan" not in svg


def test_svg_rejects_tiny_canvas():
    with pytest.raises(ConfigError):
        _simple_svg(width=50, height=50)


def test_svg_rejects_bad_box_shape():
    with pytest.raises(ConfigError):
        scatter_rules_svg(np.empty((0, 2)), None, [((0.0,), (1.0,))])
