import xml.etree.ElementTree as ET

from windfleet import svgplot


def well_formed(svg: str) -> ET.Element:
    return ET.fromstring(svg)


class TestLineChart:
    def test_flat_series_zero_slope_label(self):
        years = [2010, 2011, 2012]
        values = [5.0, 5.0, 5.0]
        svg = svgplot.line_chart("t", "year", "y", [("flat", years, values)],
                                 annotation=svgplot.slope_label(0.0))
        assert "0.0 per year" in svg
        assert "polyline" in svg
        well_formed(svg)

    def test_slope_label_formatting(self):
        assert svgplot.slope_label(0.0) == "trend 0.0 per year"
        assert svgplot.slope_label(-0.0031) == "trend -0.0031 per year"

    def test_deterministic(self):
        args = ("t", "x", "y", [("s", [1, 2, 3], [4.0, 6.0, 5.0])])
        assert svgplot.line_chart(*args) == svgplot.line_chart(*args)

    def test_no_series_placeholder(self):
        svg = svgplot.line_chart("t", "x", "y", [])
        assert "no data" in svg
        well_formed(svg)

    def test_legend_labels(self):
        svg = svgplot.line_chart("t", "x", "y", [("alpha", [0, 1], [1.0, 2.0]),
                                                 ("beta", [0, 1], [2.0, 1.0])])
        assert "alpha" in svg and "beta" in svg


class TestOtherCharts:
    def test_placeholder_text(self):
        svg = svgplot.placeholder("empty effects")
        assert "no data" in svg
        well_formed(svg)

    def test_scatter(self):
        svg = svgplot.scatter_chart("t", "x", "y", [1.0, 2.0], [3.0, 4.0])
        assert svg.count("<circle") == 2
        well_formed(svg)

    def test_grouped_bars_mixed_signs(self):
        svg = svgplot.grouped_bars("t", "year", "w", [2010, 2011],
                                   [("up", [1.0, 2.0]), ("down", [-1.0, -0.5])])
        assert svg.count("<rect") >= 4
        well_formed(svg)

    def test_stacked_segments(self):
        segments = {2010: [("baseline", 0.0, 300.0), ("hub_height", 300.0, 320.0)]}
        svg = svgplot.stacked_segments("t", "year", "w", [2010], segments,
                                       ["baseline", "hub_height"])
        well_formed(svg)

    def test_escaping(self):
        svg = svgplot.placeholder("a < b & c")
        assert "a &lt; b &amp; c" in svg
        well_formed(svg)
