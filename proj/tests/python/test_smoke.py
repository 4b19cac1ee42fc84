import os
import pathlib

import pytest

import syncdrf

CORPUS = pathlib.Path(os.environ.get(
    "SYNCDRF_CORPUS_DIR", pathlib.Path(__file__).resolve().parents[2] / "corpus"))


def source(name):
    return (CORPUS / name).read_text()


def proved(report):
    return {a["location"] for a in report["assertions"] if a["proved"]}


def test_fig1_triple():
    fig1 = source("fig1.cp")
    regions = source("fig1.rg")
    assert proved(syncdrf.analyze(fig1, analysis="regrel", regions=regions)) == {5, 9, 11}
    assert proved(syncdrf.analyze(fig1, analysis="rel")) == {5, 9}
    vs = syncdrf.analyze(fig1, analysis="valset", domain="interval")
    assert proved(vs) == {9}
    assert vs["summary"] == {"total": 3, "proved": 1}


def test_recency():
    fig9 = source("fig9.cp")
    assert proved(syncdrf.analyze(fig9)) == set()
    assert proved(syncdrf.analyze(fig9, recency=True)) == {3, 7}


def test_races():
    assert syncdrf.races(source("fig1.cp"), depth=13)["data"] == []
    racy = syncdrf.races(source("fig1_racy.cp"), depth=13)
    assert any(r["unit"] == "x" for r in racy["data"])
    region = syncdrf.races(source("fig1.cp"), depth=13, regions=source("fig1_all.rg"))
    assert region["region"]


def test_metacheck():
    result = syncdrf.metacheck(source("fig1.cp"), samples=20, regions=source("fig1.rg"))
    assert all(r["passed"] for r in result.values())
    assert "correspondence" in result
    with pytest.raises(syncdrf.PreconditionError):
        syncdrf.metacheck(source("fig1_racy.cp"), depth=13)


def test_misc():
    text = syncdrf.generate_race_free_program(3)
    assert text == syncdrf.generate_race_free_program(3)
    assert "thread" in syncdrf.print_program(text)
    assert syncdrf.dot(source("fig1.cp")).startswith("digraph")
    with pytest.raises(ValueError):
        syncdrf.analyze(source("fig1.cp"), analysis="bogus")
