import glob

import pytest

from porsim.scenario import ScenarioError, parse_scenario, scenario_to_text


MINIMAL = """
[nodes]
A stake=5 cash=100
B stake=7 cash=100 responds=never

[edges]
A B latency=100 base=1 byte=2 rate=1 sync=500 phase=250 actual=80 capacity=3

[ledger]
severance_penalty 4
partition_slash_fraction 1/3
chain_finality_delay_ms 50

[policies]
A wait_for:750
B adaptive:1000:2

[script]
10 originate A B payload=8 path=A>B

[run]
horizon_ms=4000
actors=A,B
name=minimal
"""


class TestRoundTrip:
    def test_parse_serialize_parse_identity(self):
        first = parse_scenario(MINIMAL)
        second = parse_scenario(scenario_to_text(first))
        assert first == second

    def test_shipped_scenarios_round_trip(self):
        for path in sorted(glob.glob("scenarios/*.por")):
            with open(path, encoding="utf-8") as handle:
                first = parse_scenario(handle.read())
            assert first == parse_scenario(scenario_to_text(first)), path

    def test_fields_survive(self):
        scenario = parse_scenario(MINIMAL)
        edge = scenario.edges[0]
        assert edge.actual == 80 and edge.capacity == 3 and edge.byte_cost == 2
        assert scenario.policies["A"].wait_ms == 750
        assert not scenario.nodes[1].responds
        assert scenario.script[0].payload_len == 8


class TestDiagnostics:
    def test_unknown_section_reports_line(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario("[nodes]\nA stake=1\n[nonsense]\n")
        assert "line 3" in str(err.value)

    def test_undeclared_node_in_edge(self):
        text = "[nodes]\nA stake=1\n[edges]\nA Z latency=10\n"
        with pytest.raises(ScenarioError, match="undeclared node Z"):
            parse_scenario(text)

    def test_edge_without_latency(self):
        text = "[nodes]\nA stake=1\nB stake=1\n[edges]\nA B base=1\n"
        with pytest.raises(ScenarioError, match="latency"):
            parse_scenario(text)

    def test_bad_number_reports_line(self):
        text = "[nodes]\nA stake=banana\n"
        with pytest.raises(ScenarioError) as err:
            parse_scenario(text)
        assert "line 2" in str(err.value)

    def test_content_before_section(self):
        with pytest.raises(ScenarioError, match="before any"):
            parse_scenario("A stake=1\n")

    def test_duplicate_node_rejected(self):
        with pytest.raises(ScenarioError, match="duplicate node"):
            parse_scenario("[nodes]\nA stake=1\nA stake=2\n")

    def test_comments_and_blank_lines_ignored(self):
        scenario = parse_scenario("# hi\n\n[nodes]\nA stake=1 # inline\n[run]\nname=x\n")
        assert scenario.nodes[0].name == "A"
