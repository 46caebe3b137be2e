import numpy as np
import pytest

from ftsfactors import CurvePanel, Grid
from ftsfactors.io import (
    dump_json,
    load_json,
    read_grid_csv,
    read_panel_csv,
    write_grid_csv,
    write_panel_csv,
)


class TestGridCsv:
    def test_roundtrip(self, tmp_path):
        grid = Grid(np.array([0.0, 0.1, 0.4, 1.0]))
        path = tmp_path / "grid.csv"
        write_grid_csv(grid, path)
        back = read_grid_csv(path)
        np.testing.assert_array_equal(back.points, grid.points)
        np.testing.assert_array_equal(back.quad_weights, grid.quad_weights)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("0.0\n1.0\n")
        with pytest.raises(ValueError, match="header"):
            read_grid_csv(path)

    def test_bad_number_reports_line(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("u\n0.0\noops\n")
        with pytest.raises(ValueError, match=":3:"):
            read_grid_csv(path)


class TestPanelCsv:
    def make_panel(self):
        rng = np.random.default_rng(3)
        grid = Grid.uniform(4)
        return CurvePanel(rng.normal(size=(3, 2, 4)), grid)

    def test_roundtrip_exact(self, tmp_path):
        panel = self.make_panel()
        path = tmp_path / "panel.csv"
        write_panel_csv(panel, path)
        back = read_panel_csv(path, panel.grid)
        np.testing.assert_array_equal(back.values, panel.values)

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("time,series,v1\n1,1,0.5\n")
        with pytest.raises(ValueError, match="header"):
            read_panel_csv(path, Grid.uniform(2))

    def test_grid_size_mismatch(self, tmp_path):
        panel = self.make_panel()
        path = tmp_path / "panel.csv"
        write_panel_csv(panel, path)
        with pytest.raises(ValueError, match="grid"):
            read_panel_csv(path, Grid.uniform(5))

    def test_non_consecutive_times(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("t,series,v1,v2\n1,1,0,0\n3,1,0,0\n")
        with pytest.raises(ValueError, match="consecutive"):
            read_panel_csv(path, Grid.uniform(2))

    def test_missing_cell_detected(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("t,series,v1,v2\n1,1,0,0\n1,2,0,0\n2,1,0,0\n")
        with pytest.raises(ValueError, match="missing"):
            read_panel_csv(path, Grid.uniform(2))

    def test_field_count_reports_line(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("t,series,v1,v2\n1,1,0\n")
        with pytest.raises(ValueError, match=":2:"):
            read_panel_csv(path, Grid.uniform(2))


class TestJson:
    def test_deterministic_bytes(self, tmp_path):
        doc = {"b": [1.5, 2.25], "a": {"nested": 3}}
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        dump_json(doc, p1)
        dump_json(doc, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert load_json(p1) == doc
