import json

import pytest

from zigsift.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = {
        "seed": 42,
        "duration": 300.0,
        "devices": [
            {"model": "doorlock", "addr": "0x9a10"},
            {"model": "outlet", "addr": "0x2001"},
            {"model": "motion", "addr": "0x9a11"},
        ],
        "events": [
            {"time": 60.0, "addr": "0x9a10", "name": "lock"},
            {"time": 120.0, "addr": "0x2001", "name": "on"},
            {"time": 200.0, "addr": "0x9a11", "name": "motion"},
        ],
    }
    cfg_path = d / "scenario.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = main(["generate", str(cfg_path), "-o", str(d / "cap.pcap"),
               "--truth", str(d / "truth.json")])
    assert rc == 0
    return d


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "zigsift" in capsys.readouterr().out


def test_generate_writes_capture_and_truth(workdir, capsys):
    assert (workdir / "cap.pcap").stat().st_size > 0
    truth = json.loads((workdir / "truth.json").read_text())
    assert len(truth["events"]) == 3


def test_generate_seed_override(workdir, tmp_path, capsys):
    rc = main(["generate", str(workdir / "scenario.json"),
               "-o", str(tmp_path / "alt.pcap"), "--seed", "777"])
    assert rc == 0
    assert (tmp_path / "alt.pcap").read_bytes() != \
        (workdir / "cap.pcap").read_bytes()


def test_analyze_stdout(workdir, capsys):
    rc = main(["analyze", str(workdir / "cap.pcap")])
    assert rc == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln]
    assert lines[0].startswith("time\tnode\tcommand")
    # one row per staged event, plus one for the motion repeat burst
    assert len(lines) == 5
    assert any("0x9a10" in ln and "lock" in ln for ln in lines)
    assert any("0x2001" in ln for ln in lines)
    assert sum("0x9a11" in ln for ln in lines) == 2


def test_analyze_output_json_and_figures(workdir, tmp_path, capsys):
    report = tmp_path / "report.tsv"
    analysis = tmp_path / "analysis.json"
    figdir = tmp_path / "figs"
    rc = main(["analyze", str(workdir / "cap.pcap"),
               "-o", str(report), "--json", str(analysis),
               "--figures", str(figdir), "--dump-bursts"])
    assert rc == 0
    text = report.read_text()
    assert text.startswith("time\tnode\tcommand")
    assert "node\tstart\tframes\tpattern" in text  # --dump-bursts section
    data = json.loads(analysis.read_text())
    assert {"capture_id", "nodes", "identifications",
            "diagnostics"} <= set(data)
    assert len(data["identifications"]) == 4  # motion repeat counts twice
    pngs = sorted(p.name for p in figdir.glob("*.png"))
    assert pngs == ["capture-events.png", "capture-scores.png",
                    "capture-traffic.png"]
    err = capsys.readouterr().err
    assert err.count("wrote") == 3


def test_evaluate_round_trip(workdir, tmp_path, capsys):
    analysis = tmp_path / "analysis.json"
    assert main(["analyze", str(workdir / "cap.pcap"),
                 "-o", str(tmp_path / "ignored.tsv"),
                 "--json", str(analysis)]) == 0
    capsys.readouterr()
    rc = main(["evaluate", str(analysis), str(workdir / "truth.json"),
               "--json"])
    assert rc == 0
    scores = json.loads(capsys.readouterr().out)
    assert scores["tp"] == 3
    assert scores["fp"] == 0
    assert scores["tpr"] == 1.0


def test_evaluate_plain_output(workdir, tmp_path, capsys):
    analysis = tmp_path / "analysis.json"
    assert main(["analyze", str(workdir / "cap.pcap"),
                 "-o", str(tmp_path / "ignored.tsv"),
                 "--json", str(analysis)]) == 0
    capsys.readouterr()
    assert main(["evaluate", str(analysis), str(workdir / "truth.json")]) == 0
    out = capsys.readouterr().out
    rows = dict(ln.split("\t") for ln in out.splitlines())
    assert rows["tp"] == "3"
    assert rows["tpr"] == "1.0000"


def test_map_stdout_and_file(workdir, tmp_path, capsys):
    rc = main(["map", str(workdir / "cap.pcap")])
    assert rc == 0
    out = capsys.readouterr().out
    assert any(ln.startswith("0x0000\t") and "\tZC\t" in ln
               for ln in out.splitlines())
    assert any(ln.startswith("0x9a10\t") and "\tZED\t" in ln
               for ln in out.splitlines())
    target = tmp_path / "map.tsv"
    assert main(["map", str(workdir / "cap.pcap"),
                 "-o", str(target)]) == 0
    assert "0x2001" in target.read_text()


@pytest.fixture(scope="module")
def idle_pair(tmp_path_factory):
    """Two idle captures of the same outlet, different seeds."""
    d = tmp_path_factory.mktemp("sig")
    for name, seed in (("train", 1), ("probe", 2)):
        cfg = {"seed": seed, "duration": 1500.0,
               "devices": [{"model": "outlet", "addr": "0x2001"}]}
        path = d / f"{name}.json"
        path.write_text(json.dumps(cfg))
        assert main(["generate", str(path),
                     "-o", str(d / f"{name}.pcap")]) == 0
    return d


def test_signatures_extract_and_match(idle_pair, capsys):
    store = idle_pair / "store.jsonl"
    rc = main(["signatures", "extract", str(idle_pair / "train.pcap"),
               "--node", "0x2001", "--label", "outlet@smt",
               "--store", str(store)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("outlet@smt\tinterval ")
    assert "ZR>ZC:22 ZR>ZC:18" in out
    interval = float(out.split("interval ")[1].split("s")[0])
    assert abs(interval - 300.0) < 5.0
    assert store.read_text().count("\n") == 1  # one JSONL record

    rc = main(["signatures", "match", str(idle_pair / "probe.pcap"),
               "--store", str(store)])
    assert rc == 0
    captured = capsys.readouterr()
    match_rows = [ln for ln in captured.out.splitlines()[1:] if ln]
    assert len(match_rows) == 1
    node, label, basis = match_rows[0].split("\t")[:3]
    assert (node, label) == ("0x2001", "outlet@smt")
    assert basis.startswith("pattern+interval")


def test_signatures_extract_append(idle_pair, capsys, tmp_path):
    store = tmp_path / "two.jsonl"
    assert main(["signatures", "extract", str(idle_pair / "train.pcap"),
                 "--node", "0x2001", "--label", "first",
                 "--store", str(store)]) == 0
    assert main(["signatures", "extract", str(idle_pair / "probe.pcap"),
                 "--node", "0x2001", "--label", "second",
                 "--store", str(store), "--append"]) == 0
    labels = [json.loads(ln)["label"]
              for ln in store.read_text().splitlines()]
    assert labels == ["first", "second"]


def test_analyze_with_store_prints_matches(idle_pair, capsys):
    store = idle_pair / "store.jsonl"
    assert store.exists()  # written by the extract test
    rc = main(["analyze", str(idle_pair / "probe.pcap"),
               "--store", str(store)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "node\tlabel\tbasis" in out
    assert "outlet@smt" in out


def test_missing_capture_is_a_clean_error(tmp_path, capsys):
    rc = main(["analyze", str(tmp_path / "nope.pcap")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_scenario_config_is_a_clean_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"devices": [{"model": "toaster", "addr": "0x1"}]}')
    rc = main(["generate", str(bad), "-o", str(tmp_path / "x.pcap")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_corrupt_store_is_a_clean_error(idle_pair, tmp_path, capsys):
    store = tmp_path / "broken.jsonl"
    store.write_text("this is not json\n")
    rc = main(["signatures", "match", str(idle_pair / "probe.pcap"),
               "--store", str(store)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
