import os

from refstrat.plotting import read_plot_data, render_dir, write_plot_data


def test_plot_data_round_trip_and_render(tmp_path):
    path = write_plot_data(str(tmp_path / "pd" / "a.csv"), {"RSS": ([1, 2], [0.5, 0.25]),
                                                            "SRS": ([1, 2], [0.6, 0.4])},
                           "samples", "metric", "demo", logy=True)
    meta, series = read_plot_data(path)
    assert meta["xlabel"] == "samples" and meta["logy"] == "1"
    assert series["RSS"] == ([1.0, 2.0], [0.5, 0.25])
    pngs = render_dir(str(tmp_path / "pd"), str(tmp_path / "fig"))
    assert pngs == [str(tmp_path / "fig" / "a.png")]
    assert os.path.getsize(pngs[0]) > 0
