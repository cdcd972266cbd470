import csv
import json
import xml.etree.ElementTree as ET

import pytest

from xppn import geometry as geo
from xppn.cli import (BENCH_HEADER, EXIT_INVALID, EXIT_LIMIT, EXIT_OK, EXIT_USAGE, bench_csv, main,
                      profile_csv, render_svg, run_bench, worker_count)
from xppn.instance import Instance, generate, load_instance, write_instance
from xppn.model_ir import import_model
from xppn.touring import Tour, read_solution, solve_fixed_tour

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def inst_file(tmp_path):
    p = tmp_path / "inst.txt"
    assert main(["generate", "--size", "5", "--radii", "2", "--mode", "4", "--seed", "7",
                 "--out", str(p)]) == EXIT_OK
    return p


def test_generate_is_deterministic(tmp_path, inst_file):
    again = tmp_path / "again.txt"
    main(["generate", "--size", "5", "--radii", "2", "--mode", "4", "--seed", "7", "--out", str(again)])
    assert again.read_bytes() == inst_file.read_bytes()
    assert load_instance(inst_file) == generate(5, 2, 4, 7)


@pytest.mark.parametrize("argv", [
    ["generate", "--size", "5", "--radii", "2", "--mode", "5", "--seed", "1"],
    ["solve"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_invalid_input(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("this is not an instance\n")
    assert main(["solve", str(bad)]) == EXIT_INVALID
    assert main(["solve", str(tmp_path / "missing.txt")]) == EXIT_INVALID


def test_solve_both_methods(tmp_path, inst_file):
    inst = load_instance(inst_file)
    out, log = tmp_path / "sol.txt", tmp_path / "log.txt"
    assert main(["solve", str(inst_file), "--out", str(out), "--log", str(log)]) == EXIT_OK
    exact = read_solution(out.read_text(), inst)
    assert exact.status == "optimal"
    lines = log.read_text().splitlines()
    assert lines[0] == "iter, LB, UB, gap, tour, cuts, elapsed"
    assert lines[-1].startswith("status optimal")
    hout = tmp_path / "h.txt"
    assert main(["solve", str(inst_file), "--method", "heuristic", "--out", str(hout),
                 "--log", str(log)]) == EXIT_OK
    heur = read_solution(hout.read_text(), inst)
    assert heur.status == "heuristic"
    assert heur.cost >= exact.cost - 1e-9


def test_time_limit_exit_code(tmp_path):
    p = tmp_path / "i.txt"
    main(["generate", "--size", "8", "--radii", "2", "--mode", "4", "--seed", "3", "--out", str(p)])
    out = tmp_path / "s.txt"
    code = main(["solve", str(p), "--time-limit", "0.001", "--out", str(out), "--log", str(tmp_path / "l")])
    assert code == EXIT_LIMIT
    assert read_solution(out.read_text(), load_instance(p)).status == "time_limit"


@pytest.mark.parametrize("form", ["mtz", "sec", "ssec", "time"])
def test_export(tmp_path, inst_file, form):
    out = tmp_path / f"{form}.txt"
    assert main(["export", str(inst_file), "--formulation", form, "--out", str(out)]) == EXIT_OK
    m = import_model(out.read_text())
    m.validate()
    assert m.count("z_") > 0


def test_bench_rows_average_and_profile(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--sizes", "4", "--radii", "1", "2", "--modes", "1", "--seeds", "2",
                 "--workers", "1", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == BENCH_HEADER
    assert len(rows) == 1 + 2 * (2 + 1)
    avg = [r for r in rows[1:] if r[3] == "avg"]
    assert len(avg) == 2 and all(r[-1] == "solved 2/2" for r in avg)
    runs = [r for r in rows[1:] if r[3] != "avg"]
    assert all(float(r[6]) <= 1e-2 for r in runs)
    prof = list(csv.reader(out.with_suffix(".profile.csv").open()))
    counts = [int(r[1]) for r in prof[1:]]
    assert counts == sorted(counts) and counts[-1] == 4
    meta = json.loads(out.with_suffix(".meta.json").read_text())
    assert "provenance" in meta


def test_bench_parallel_matches_serial():
    a = run_bench([4], [1], [1, 2], 1, 1e-4, 60, workers=1)
    b = run_bench([4], [1], [1, 2], 1, 1e-4, 60, workers=2)
    assert [(r.final_cost, r.status) for r in a] == pytest.approx([(r.final_cost, r.status) for r in b])
    assert profile_csv(a).splitlines()[0] == "t,solved"
    assert bench_csv(a, 1).count("avg") == 2


def test_worker_count_honours_env(monkeypatch):
    monkeypatch.setenv("XPPN_THREADS", "3")
    assert worker_count(8) == 3
    monkeypatch.delenv("XPPN_THREADS")
    assert worker_count(2) == 2


def test_render_is_deterministic_and_complete(tmp_path, inst_file):
    sol = tmp_path / "sol.txt"
    main(["solve", str(inst_file), "--method", "heuristic", "--out", str(sol), "--log", str(tmp_path / "l")])
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert main(["render", str(inst_file), str(sol), "--out", str(a)]) == EXIT_OK
    main(["render", str(inst_file), str(sol), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    root = ET.fromstring(a.read_text())
    outer = [e for e in root.iter(SVG + "line") if e.get("class") == "outer"]
    assert len(outer) == 5
    inst = load_instance(inst_file)
    cost = read_solution(sol.read_text(), inst).cost
    assert f"cost {cost:.6f}" in a.read_text()


def test_render_shapes():
    circles = Instance(tuple(geo.Circle((10 * k, 5), 2) for k in range(4)))
    sol = solve_fixed_tour(circles, Tour((0, 1, 2, 3)))
    root = ET.fromstring(render_svg(circles, sol))
    assert len(list(root.iter(SVG + "circle"))) == 4
    chain = geo.Chain(((0, 0), (4, 0), (4, 3)), coverage=0.5)
    inst = Instance((chain, geo.Circle((2, 6), 1.0)))
    sol = solve_fixed_tour(inst, Tour((0, 1)))
    root = ET.fromstring(render_svg(inst, sol))
    assert len(list(root.iter(SVG + "polyline"))) == 1
    assert len([e for e in root.iter(SVG + "line") if e.get("class") == "inner"]) >= 1


def test_instance_file_round_trip(tmp_path):
    inst = generate(6, 4, 3, 11)
    p = tmp_path / "x.txt"
    p.write_text(write_instance(inst))
    assert load_instance(p) == inst
