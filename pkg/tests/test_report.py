"""Results CSV writing and the faceted SVG metric plots."""

import re
import xml.etree.ElementTree as ET

import pytest

from grmsim import (
    Condition,
    PlotSpec,
    RecoveryMetrics,
    ResultsRow,
    ResultsTable,
    build_results_table,
    read_results_csv,
    render_metric_plot,
    save_plots,
    write_results_csv,
)

SVG_NS = "{http://www.w3.org/2000/svg}"

FAMILIES = ["a1", "a2", "a3", "b1", "b2", "b3"]


def full_table():
    """Complete 2x2 design table with distinct plausible values."""
    rows = []
    for t_i, tl in enumerate((20, 40)):
        for r_i, rho in enumerate((0.3, 0.7)):
            for f_i, fam in enumerate(FAMILIES):
                rows.append(
                    ResultsRow(
                        test_length=tl,
                        rho=rho,
                        family=fam,
                        bias=round((-1) ** f_i * 0.001 * (f_i + t_i), 3),
                        rmse=round(0.05 + 0.003 * f_i + 0.002 * r_i + 0.004 * (1 - t_i), 3),
                    )
                )
    return ResultsTable(rows)


class TestResultsTable:
    def test_properties(self):
        table = full_table()
        assert table.test_lengths == [20, 40]
        assert table.rhos == [0.3, 0.7]
        assert table.families == FAMILIES

    def test_family_sort_is_numeric_aware(self):
        rows = [
            ResultsRow(20, 0.3, "b10", 0.0, 0.1),
            ResultsRow(20, 0.3, "b2", 0.0, 0.1),
            ResultsRow(20, 0.3, "a1", 0.0, 0.1),
        ]
        assert ResultsTable(rows).families == ["a1", "b2", "b10"]

    def test_value_lookup(self):
        table = full_table()
        assert table.value(20, 0.3, "a1", "rmse") == 0.054
        with pytest.raises(ValueError, match="no row"):
            table.value(20, 0.5, "a1", "bias")

    def test_duplicate_rows_rejected(self):
        row = ResultsRow(20, 0.3, "a1", 0.0, 0.1)
        with pytest.raises(ValueError, match="duplicate"):
            ResultsTable([row, row])

    def test_inconsistent_family_sets_rejected(self):
        rows = [
            ResultsRow(20, 0.3, "a1", 0.0, 0.1),
            ResultsRow(20, 0.7, "a2", 0.0, 0.1),
        ]
        with pytest.raises(ValueError, match="family sets"):
            ResultsTable(rows)

    def test_incomplete_crossing_detected(self):
        rows = [
            ResultsRow(20, 0.3, "a1", 0.0, 0.1),
            ResultsRow(40, 0.7, "a1", 0.0, 0.1),
        ]
        table = ResultsTable(rows)
        with pytest.raises(ValueError, match="missing condition"):
            table.require_complete()

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            ResultsTable([])


class TestResultsCsv:
    def _metrics(self):
        cond_a = Condition(20, 0.3, 2000, 100, (7, 7, 6))
        cond_b = Condition(20, 0.7, 2000, 100, (7, 7, 6))
        fams_a = {
            "a1": (-0.0004, 0.069),
            "a2": (0.0012, 0.0686),
            "a3": (-0.002, 0.074),
            "b1": (0.001, 0.057),
            "b2": (-0.001, 0.05),
            "b3": (0.0, 0.057),
        }
        fams_b = {
            "a1": (0.002, 0.069),
            "a2": (0.0, 0.068),
            "a3": (0.001, 0.073),
            "b1": (0.0, 0.057),
            "b2": (0.0004, 0.051),
            "b3": (-0.0004, 0.057),
        }
        return [
            RecoveryMetrics(cond_a, fams_a, 100),
            RecoveryMetrics(cond_b, fams_b, 100),
        ]

    def test_golden_file(self, tmp_path):
        table = build_results_table(self._metrics())
        path = write_results_csv(table, tmp_path / "results.csv")
        lines = path.read_text().splitlines()
        assert lines == [
            "Test_Length,Dimension,Parameters,Bias,RMSE",
            "20,0.3,a1,0.000,0.069",
            "20,0.3,a2,0.001,0.069",
            "20,0.3,a3,-0.002,0.074",
            "20,0.3,b1,0.001,0.057",
            "20,0.3,b2,-0.001,0.050",
            "20,0.3,b3,0.000,0.057",
            "20,0.7,a1,0.002,0.069",
            "20,0.7,a2,0.000,0.068",
            "20,0.7,a3,0.001,0.073",
            "20,0.7,b1,0.000,0.057",
            "20,0.7,b2,0.000,0.051",
            "20,0.7,b3,0.000,0.057",
        ]

    def test_never_prints_negative_zero(self, tmp_path):
        table = build_results_table(self._metrics())
        text = write_results_csv(table, tmp_path / "r.csv").read_text()
        assert "-0.000" not in text

    def test_rounding_happens_at_build(self):
        table = build_results_table(self._metrics())
        assert table.value(20, 0.3, "a2", "bias") == 0.001
        assert table.value(20, 0.3, "a2", "rmse") == 0.069

    def test_round_trip(self, tmp_path):
        table = full_table()
        path = write_results_csv(table, tmp_path / "results.csv")
        back = read_results_csv(path)
        assert back.rows == table.rows

    def test_header_must_match_exactly(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("Test_Length,Rho,Parameters,Bias,RMSE\n20,0.3,a1,0.0,0.1\n")
        with pytest.raises(ValueError, match="header"):
            read_results_csv(bad)

    def test_empty_file_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(ValueError, match="empty"):
            read_results_csv(empty)

    def test_short_record_rejected(self, tmp_path):
        bad = tmp_path / "short.csv"
        bad.write_text("Test_Length,Dimension,Parameters,Bias,RMSE\n20,0.3,a1,0.0\n")
        with pytest.raises(ValueError, match="5 fields"):
            read_results_csv(bad)


def _series_groups(root):
    return [
        g
        for g in root.iter(f"{SVG_NS}g")
        if g.get("class") == "series"
    ]


def _marker_positions(group):
    out = []
    for path in group.iter(f"{SVG_NS}path"):
        m = re.match(r"translate\((-?[\d.]+) (-?[\d.]+)\)", path.get("transform", ""))
        if m:
            out.append((float(m.group(1)), float(m.group(2)), path))
    return out


def _texts(root):
    return [t.text for t in root.iter(f"{SVG_NS}text")]


class TestPlotSpec:
    def test_pixel_dimensions(self):
        spec = PlotSpec()
        assert spec.width_px == 2953
        assert spec.height_px == 1417

    def test_validation(self):
        with pytest.raises(ValueError, match="dimensions"):
            PlotSpec(width_cm=0)
        with pytest.raises(ValueError, match="ylim"):
            PlotSpec(ylim=(1.0, 1.0))
        with pytest.raises(ValueError, match="dpi"):
            PlotSpec(dpi=0)


class TestRenderMetricPlot:
    def test_document_dimensions(self):
        root = ET.fromstring(render_metric_plot(full_table(), "bias"))
        assert root.get("width") == "2953"
        assert root.get("height") == "1417"

    def test_facet_strip_labels(self):
        root = ET.fromstring(render_metric_plot(full_table(), "bias"))
        texts = _texts(root)
        assert "Test Length = 20" in texts
        assert "Test Length = 40" in texts

    def test_axis_and_legend_text(self):
        root = ET.fromstring(render_metric_plot(full_table(), "bias"))
        texts = _texts(root)
        assert "Interdimensional Correlation" in texts
        assert "Parameters" in texts
        assert "Bias" in texts
        rmse_root = ET.fromstring(render_metric_plot(full_table(), "rmse"))
        assert "RMSE" in _texts(rmse_root)

    def test_series_structure(self):
        root = ET.fromstring(render_metric_plot(full_table(), "rmse"))
        groups = _series_groups(root)
        assert len(groups) == 12  # 2 panels x 6 families
        for g in groups:
            assert g.get("data-family") in FAMILIES
            assert g.get("data-panel") in ("20", "40")
            assert g.get("clip-path", "").startswith("url(#panel-clip-")
            lines = list(g.iter(f"{SVG_NS}polyline"))
            assert len(lines) == 1  # two correlation levels joined
            assert len(_marker_positions(g)) == 2

    def test_marker_styles_follow_family_order(self):
        root = ET.fromstring(render_metric_plot(full_table(), "bias"))
        by_family = {
            g.get("data-family"): _marker_positions(g)[0][2]
            for g in _series_groups(root)
            if g.get("data-panel") == "20"
        }
        assert by_family["a1"].get("fill") == "black"
        assert by_family["a2"].get("fill") == "red"
        assert by_family["a3"].get("fill") == "green"
        assert by_family["b1"].get("fill") == "blue"
        assert by_family["b2"].get("fill") == "none"
        assert by_family["b2"].get("stroke") == "purple"
        assert by_family["b3"].get("fill") == "none"
        assert by_family["b3"].get("stroke") == "cyan"

    def test_six_distinct_marker_shapes(self):
        root = ET.fromstring(render_metric_plot(full_table(), "bias"))
        legend = [
            g for g in root.iter(f"{SVG_NS}g") if g.get("class") == "legend-entry"
        ]
        assert [g.get("data-family") for g in legend] == FAMILIES
        styles = set()
        for g in legend:
            path = next(g.iter(f"{SVG_NS}path"))
            styles.add((path.get("d"), path.get("fill"), path.get("stroke")))
        assert len(styles) == 6

    def test_bias_y_mapping_is_affine_with_fixed_limits(self):
        # reconstruct the mapping from the clip rect and the (-0.01, 0.01)
        # limits with 5% expansion, then check every marker lands on it
        table = full_table()
        svg = render_metric_plot(table, "bias")
        root = ET.fromstring(svg)
        clip = next(root.iter(f"{SVG_NS}clipPath"))
        rect = next(clip.iter(f"{SVG_NS}rect"))
        top = float(rect.get("y"))
        height = float(rect.get("height"))
        bottom = top + height
        view_lo, view_hi = -0.011, 0.011
        for g in _series_groups(root):
            tl = int(g.get("data-panel"))
            fam = g.get("data-family")
            markers = sorted(_marker_positions(g))
            for (mx, my, _), rho in zip(markers, (0.3, 0.7)):
                v = table.value(tl, rho, fam, "bias")
                expected = bottom - (v - view_lo) / (view_hi - view_lo) * height
                assert my == pytest.approx(expected, abs=0.5)

    def test_rmse_y_mapping_uses_padded_data_range(self):
        table = full_table()
        svg = render_metric_plot(table, "rmse")
        root = ET.fromstring(svg)
        clip = next(root.iter(f"{SVG_NS}clipPath"))
        rect = next(clip.iter(f"{SVG_NS}rect"))
        top = float(rect.get("y"))
        height = float(rect.get("height"))
        bottom = top + height
        vals = [r.rmse for r in table.rows]
        span = max(vals) - min(vals)
        lo = min(vals) - 0.10 * span
        hi = max(vals) + 0.10 * span
        view_lo = lo - 0.05 * (hi - lo)
        view_hi = hi + 0.05 * (hi - lo)
        for g in _series_groups(root):
            tl = int(g.get("data-panel"))
            fam = g.get("data-family")
            markers = sorted(_marker_positions(g))
            for (mx, my, _), rho in zip(markers, (0.3, 0.7)):
                v = table.value(tl, rho, fam, "rmse")
                expected = bottom - (v - view_lo) / (view_hi - view_lo) * height
                assert my == pytest.approx(expected, abs=0.5)

    def test_markers_inside_their_panel(self):
        root = ET.fromstring(render_metric_plot(full_table(), "rmse"))
        rects = {}
        for i, clip in enumerate(root.iter(f"{SVG_NS}clipPath")):
            rect = next(clip.iter(f"{SVG_NS}rect"))
            rects[f"url(#{clip.get('id')})"] = (
                float(rect.get("x")),
                float(rect.get("y")),
                float(rect.get("width")),
                float(rect.get("height")),
            )
        for g in _series_groups(root):
            x0, y0, pw, ph = rects[g.get("clip-path")]
            for mx, my, _ in _marker_positions(g):
                assert x0 <= mx <= x0 + pw
                assert y0 <= my <= y0 + ph

    def test_single_condition_single_family(self):
        table = ResultsTable([ResultsRow(20, 0.3, "a1", 0.002, 0.071)])
        root = ET.fromstring(render_metric_plot(table, "rmse"))
        groups = _series_groups(root)
        assert len(groups) == 1
        assert len(list(groups[0].iter(f"{SVG_NS}polyline"))) == 0
        assert len(_marker_positions(groups[0])) == 1

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError, match="metric"):
            render_metric_plot(full_table(), "variance")

    def test_incomplete_table_rejected(self):
        rows = [
            ResultsRow(20, 0.3, "a1", 0.0, 0.1),
            ResultsRow(40, 0.7, "a1", 0.0, 0.1),
        ]
        with pytest.raises(ValueError, match="missing condition"):
            render_metric_plot(ResultsTable(rows), "bias")

    def test_too_many_families_rejected(self):
        rows = [
            ResultsRow(20, 0.3, f"f{i}", 0.0, 0.1) for i in range(7)
        ]
        with pytest.raises(ValueError, match="exceed"):
            render_metric_plot(ResultsTable(rows), "bias")


class TestSavePlots:
    def test_writes_both_metric_files(self, tmp_path):
        paths = save_plots(full_table(), tmp_path / "out")
        assert sorted(paths) == ["bias", "rmse"]
        for p in paths.values():
            assert p.exists()
            ET.fromstring(p.read_text())  # well-formed XML
        assert paths["bias"].name == "bias.svg"
        assert paths["rmse"].name == "rmse.svg"
