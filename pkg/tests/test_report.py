import xml.etree.ElementTree as ET

import numpy as np

from localtime_clt import pathsim, report


def test_digest_stable_and_sensitive():
    a = pathsim.SimConfig(1.0, 0.125, n_paths=3)
    assert report.config_digest(a) == report.config_digest(pathsim.SimConfig(1.0, 0.125, n_paths=3))
    assert report.config_digest(a) != report.config_digest(pathsim.SimConfig(1.0, 0.125, n_paths=4))
    assert report.config_digest({"b": 1, "a": 2}) == report.config_digest({"a": 2, "b": 1})


def test_csv_cells():
    text = report.to_csv([{"a": 0.1, "b": None, "c": True, "d": "x,y"}], ("a", "b", "c", "d"))
    assert text == 'a,b,c,d\n0.1,,true,"x,y"\n'


def test_svg_histogram_wellformed_and_deterministic():
    x = np.random.default_rng(0).standard_normal(500)
    y = np.random.default_rng(1).standard_normal(500)
    s = report.svg_histogram(x, title="h", overlay=y)
    assert s == report.svg_histogram(x, title="h", overlay=y)
    root = ET.fromstring(s)
    assert root.tag.endswith("svg")
    assert "http" not in s.replace('xmlns="http://www.w3.org/2000/svg"', "")


def test_svg_ladder():
    s = report.svg_ladder([1, 2, 4], [3.0, 2.0, 1.5], errors=[0.1, 0.1, 0.2], reference=1.0, logx=True)
    ET.fromstring(s)


def test_write_text(tmp_path):
    p = report.write_text(tmp_path / "a" / "b.txt", "hi\n")
    assert p.read_text() == "hi\n"
    assert not list(p.parent.glob("*.part"))
