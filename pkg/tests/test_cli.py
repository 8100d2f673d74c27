import json
from collections import Counter
from fractions import Fraction

import pytest

from fragtree.cli import main
from fragtree.io import loads, parse_newick
from fragtree.models import BetaSplitting, split_prob
from fragtree.trees import validate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    lines = [line.split("\t") for line in out.strip().splitlines()]
    header = lines[0]
    return [dict(zip(header, line)) for line in lines[1:]]


def test_tables_verify(capsys):
    code, out, _ = run(capsys, "tables", "--beta", "-3/2", "--n-max", "6", "--verify")
    assert code == 0
    assert rows(out)[3]["w"] == "15/8"


def test_tables_yule_row(capsys):
    code, out, _ = run(capsys, "tables", "--beta", "0", "--n-max", "6")
    row = rows(out)[3]
    assert code == 0
    assert (row["n"], row["w"], row["Z"], row["psi"], row["lambda"]) == ("4", "24", "36", "2/3", "9/5")


def test_tables_trie_psi(capsys):
    _, out, _ = run(capsys, "tables", "--beta", "inf", "--n-max", "4")
    assert [r["psi"] for r in rows(out)[1:]] == ["1", "1/3", "1/7"]


def test_tables_inadmissible(capsys):
    code, _, err = run(capsys, "tables", "--beta", "-5/2")
    assert code == 2 and "beta" in err


def test_decimal_parameter_warns(capsys):
    code, out, err = run(capsys, "tables", "--beta", "0.5", "--n-max", "3")
    assert code == 0 and "float mode" in err


def test_sample_json_deterministic(capsys):
    argv = ("sample", "--beta", "0", "--n", "8", "--seed", "42", "--method", "growth", "--format", "json")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    t = loads(first)
    assert validate(t) and t.size == 8


def test_sample_newick(capsys):
    code, out, _ = run(capsys, "sample", "--alpha", "1/2", "--theta", "0", "--n", "10", "--format", "newick")
    t = parse_newick(out.strip())
    assert code == 0 and validate(t) and t.members == tuple(range(1, 11))
    assert ":" not in out


def test_sample_uniform_frequencies(capsys):
    total = 150_000
    code, out, _ = run(capsys, "sample", "--beta", "-3/2", "--n", "4", "--count", str(total), "--format", "newick")
    counts = Counter(out.split())
    assert code == 0 and len(counts) == 15
    sd = (total * (1 / 15) * (14 / 15)) ** 0.5
    assert all(abs(c - total / 15) <= 3 * sd for c in counts.values())


def test_sample_timed_formats(capsys):
    _, out, _ = run(capsys, "sample", "--beta", "0", "--n", "5", "--timed", "--format", "newick", "--seed", "1")
    assert out.count(":") == 4  # one length per internal vertex
    _, out, _ = run(capsys, "sample", "--beta", "0", "--n", "5", "--timed", "--format", "json", "--seed", "1")
    doc = json.loads(out)
    assert len(doc["lengths"]) == 4


def test_sample_dot(capsys):
    code, out, _ = run(capsys, "sample", "--beta", "0", "--n", "3", "--format", "dot")
    assert code == 0 and out.startswith("digraph") and out.count("->") == 4


def test_sample_branching_on_multifurcating(capsys):
    code, _, err = run(capsys, "sample", "--alpha", "1/2", "--theta", "0", "--n", "4", "--method", "branching")
    assert code == 2 and "multifurcating" in err


def test_seed_fallback(capsys, monkeypatch):
    monkeypatch.setenv("FRAGTREE_SEED", "123")
    _, a, _ = run(capsys, "sample", "--beta", "1", "--n", "12")
    _, b, _ = run(capsys, "sample", "--beta", "1", "--n", "12", "--seed", "123")
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        ("check", "consistency", "--beta", "5", "--n-max", "14"),
        ("check", "consistency", "--alpha", "-1/2", "--theta", "3/2", "--n-max", "10"),
        ("check", "normalization", "--coupon", "3", "--n-max", "8"),
        ("check", "expansion", "--beta", "-3/2", "--n-max", "7"),
        ("check", "thinning", "--beta", "0", "--n-max", "8"),
        ("check", "monotonicity", "--beta", "-1", "--order", "6", "--n-max", "20"),
        ("check", "affine", "--beta", "2"),
        ("check", "samplers", "--beta", "0", "--n-max", "4"),
        ("check", "factorization", "--measure", "beta", "--beta", "0"),
        ("check", "paintbox", "--coupon", "3", "--composition", "1,1,1"),
    ],
)
def test_check_suites_pass(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_check_raw_weights_fails_with_witness(capsys):
    code, out, _ = run(capsys, "check", "consistency", "--raw-weights", "1,1,2,3", "--n-max", "6")
    report = json.loads(out)
    assert code == 1 and not report["passed"]
    assert report["witness"]["composition"] == [1, 3]


def test_check_two_point_fails(capsys):
    code, out, _ = run(capsys, "check", "factorization", "--measure", "two-point", "--i-max", "6")
    assert code == 1 and json.loads(out)["details"]["max_violation"] > 1e-3


def test_check_float_refused(capsys):
    code, _, err = run(capsys, "check", "consistency", "--beta", "0.5")
    assert code == 2


def test_check_unknown_suite(capsys):
    with pytest.raises(SystemExit) as info:
        main(["check", "nosuch", "--beta", "0"])
    assert info.value.code == 2


def test_enumerate_counts(capsys):
    _, out, _ = run(capsys, "enumerate", "--n", "6", "--count")
    assert "945" in out.split()
    _, out, _ = run(capsys, "enumerate", "--n", "4", "--all", "--count")
    assert "26" in out.split()


def test_enumerate_collisions(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "9", "--collisions")
    assert code == 0
    assert "(9, 3, 1, 2, 1, 0, 0, 0, 1): 2 shapes" in out
    assert out.count("digraph") == 2


def test_enumerate_cap(capsys):
    code, _, err = run(capsys, "enumerate", "--n", "13", "--signatures")
    assert code == 2


def test_rates_harmonic(capsys):
    _, out, _ = run(capsys, "rates", "--beta", "-1", "--n-max", "6")
    assert [r["lambda"] for r in rows(out)] == ["1", "3/2", "11/6", "25/12", "137/60"]


def test_rates_invert_roundtrip(capsys):
    code, out, _ = run(capsys, "rates", "--from-lambda", "1,1.5,1.8333…", "--invert")
    table = {(r["n"], r["k"]): float(r["p(k,n-k)"]) for r in rows(out)}
    assert code == 0
    assert table["3", "1"] == pytest.approx(1 / 3)
    exact_code, exact_out, _ = run(capsys, "rates", "--from-lambda", "1,3/2,11/6,25/12", "--invert")
    model = BetaSplitting(-1)
    assert exact_code == 0
    for r in rows(exact_out):
        n, k = int(r["n"]), int(r["k"])
        assert Fraction(r["p(k,n-k)"]) == split_prob(model, (k, n - k))


def test_rates_invert_rejects(capsys):
    code, out, err = run(capsys, "rates", "--from-lambda", "1,1.4", "--invert")
    assert code == 1
    assert "3/2" in err
    assert json.loads(out)["valid"] is False
